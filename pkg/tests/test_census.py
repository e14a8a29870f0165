import csv
import io
import json
import math
from dataclasses import replace

import pytest

from hypcensus import census as cs
from hypcensus import tricomb as tc
from hypcensus.census import CensusConfig, CensusRecord
from hypcensus.errors import UnsupportedSize, VolumeMismatchOnMerge
from hypcensus import tetshape as ts
from hypcensus.geosolve import solve_pairing
from hypcensus.kojima import CanonicalDecomposition

from helpers import GENUS_TWO_SIGNATURES, V_OCTAHEDRON

GENUS_TWO_FOR_SUBDIVISION = "2090i1018191i000c"


@pytest.fixture(scope="module")
def census2():
    return cs.run_census(2)


def make_record(sig, volume, prov):
    return CensusRecord(sig, volume, "S2", (2,), 0, (("tetrahedron", 4, 2),), "newton", (prov,))


def test_complexity_one_is_empty():
    result = cs.run_census(1)
    assert len(result) == 0
    assert cs.format_summary(result).startswith("0 manifolds, 0 volume values")


def test_complexity_two(census2):
    assert len(census2) == 8
    assert not census2.failures
    for r in census2:
        assert r.volume == pytest.approx(6.451990, abs=5e-6)
        assert r.boundary == "S2"
        assert r.genera == (2,)
        assert r.cell_summary == "2T"
        assert r.certified
    sigs = {CanonicalDecomposition.parse(r.signature)[1][1:] for r in census2}
    assert sigs == set(GENUS_TWO_SIGNATURES)
    assert cs.format_summary(census2).startswith("8 manifolds, 1 volume value\n")


def test_record_volume_is_sum_of_cells(census2):
    for r in census2:
        _, sig = CanonicalDecomposition.parse(r.signature)
        sol = solve_pairing(tc.pairing_from_signature(sig[1:]))
        assert len(sol.angles) == r.cell_count
        assert abs(math.fsum(ts.volume(a) for a in sol.angles) - r.volume) < 1e-8


def test_unsupported_sizes():
    with pytest.raises(UnsupportedSize):
        cs.run_census(3)
    with pytest.raises(UnsupportedSize):
        cs.run_census(0)
    with pytest.raises(UnsupportedSize):
        cs.run_census(4, CensusConfig(extended=True))


def test_subdivisions_merge_into_one_record():
    p = tc.pairing_from_signature(GENUS_TWO_FOR_SUBDIVISION)
    subdivided = sorted({
        tc.canonical_signature(tc.two_three_move(p, t, f).pairing)
        for t, f, t2, _ in p.face_pairs() if t2 != t
    })
    assert len(subdivided) >= 2
    entries = [cs.process_pairing(s, CensusConfig()) for s in subdivided[:2]]
    records = [CensusRecord.from_dict(e["record"]) for e in entries]
    merged = cs.dedup(records)
    assert len(merged) == 1
    assert merged[0].provenance == tuple(subdivided[:2])
    assert merged[0].signature.endswith("sig=T" + GENUS_TWO_FOR_SUBDIVISION)


def test_dedup_keeps_distinct_and_is_idempotent():
    recs = [make_record("a", 1.0, "x"), make_record("b", 2.0, "y"), make_record("a", 1.0 + 1e-9, "z")]
    once = cs.dedup(recs)
    assert [r.signature for r in once] == ["a", "b"]
    assert once[0].provenance == ("x", "z")
    assert cs.dedup(once) == once


def test_dedup_volume_mismatch():
    with pytest.raises(VolumeMismatchOnMerge):
        cs.dedup([make_record("a", 1.0, "x"), make_record("a", 1.1, "y")])


def test_partition_independence(census2):
    pooled = []
    for k in range(2):
        pooled.extend(cs.run_census(2, CensusConfig(partition=(k, 2))).records)
    assert {r.signature for r in cs.dedup(pooled)} == {r.signature for r in census2}


def test_seed_independence(census2):
    other = cs.run_census(2, replace(CensusConfig(), solver=replace(CensusConfig().solver, seed=7)))
    assert [r.signature for r in other] == [r.signature for r in census2]


def test_result_log_resume(tmp_path, monkeypatch):
    monkeypatch.setenv(cs.LOG_DIR_ENV, str(tmp_path))
    first = cs.run_census(2)
    log_file = tmp_path / "census-n2.jsonl"
    lines = log_file.read_text().splitlines()
    assert len(lines) == first.candidates
    # simulate an interrupt: keep half the log plus a torn line
    log_file.write_text("\n".join(lines[: len(lines) // 2]) + '\n{"pairing": "tor')
    second = cs.run_census(2)
    assert [r.to_dict() for r in second] == [r.to_dict() for r in first]
    assert len(cs.ResultLog(log_file).load()) == first.candidates


def test_config_from_mapping(tmp_path):
    cfg = CensusConfig.from_mapping({"solver": {"tol": 1e-11}, "partition": [0, 2], "restarts": 1})
    assert cfg.solver.tol == 1e-11
    assert cfg.partition == (0, 2)
    assert cfg.restarts == 1
    assert CensusConfig(log_dir=str(tmp_path)).resolved_log_dir() == tmp_path


def test_csv_and_json_outputs(census2):
    rows = list(csv.reader(io.StringIO(cs.to_csv(census2.records))))
    assert tuple(rows[0]) == cs.CSV_FIELDS
    assert len(rows) == 9
    assert all(row[2] == "S2" and row[3] == "2T" and row[4] == "1" for row in rows[1:])
    text = cs.to_json(census2)
    payload = json.loads(text)
    assert payload["n"] == 2
    assert payload["statistics"]["values"] == 1
    assert cs.records_from_json(text) == census2.records


def test_volume_statistics():
    recs = [make_record(str(i), v, "p") for i, v in enumerate([1.0, 1.0000001, 2.0, 2.0, 2.0])]
    st = cs.volume_statistics(recs)
    assert st == {"count": 5, "values": 2, "min": 1.0, "max": 2.0, "max_multiplicity": 3}
    assert cs.volume_statistics([])["values"] == 0


@pytest.mark.parametrize("n, count", [(1, 11), (2, 173)])
def test_octahedral_census(n, count):
    result = cs.run_octahedral_census(n)
    assert len(result) == count
    for r in result:
        assert r.volume == pytest.approx(n * V_OCTAHEDRON, abs=1e-5)
        assert r.complexity == 10 * n
        assert r.cells == (("octahedron", 8, n),)
        if r.boundary.endswith("~"):
            # non-orientable handlebody: boundary counted in cross-caps
            assert r.genera == (2 * n + 2,)
        else:
            assert r.genera == (n + 1,)


def test_octahedral_census_matches_brute_force_at_one():
    oracle = {tc.canonical_signature(p) for p in tc.brute_force_pairings(1)}
    got = {CanonicalDecomposition.parse(r.signature)[1][1:] for r in cs.run_octahedral_census(1)}
    assert got == oracle


def test_octahedral_census_size_limit():
    with pytest.raises(UnsupportedSize):
        cs.run_octahedral_census(4)


def test_parallel_workers_match_serial(census2):
    parallel = cs.run_census(2, CensusConfig(workers=2))
    assert [r.signature for r in parallel] == [r.signature for r in census2]


def test_valence_filter_toggle_keeps_the_census(census2):
    relaxed = cs.run_census(2, CensusConfig(min_valence=1))
    assert [r.signature for r in relaxed] == [r.signature for r in census2]
    assert CensusConfig.from_mapping({"min_valence": 2}).min_valence == 2
