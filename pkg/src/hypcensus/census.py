"""Census pipeline: enumerate, geometrize, canonize, deduplicate."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .errors import (
    AnsatzInapplicable,
    HypCensusError,
    NonConvergence,
    UnsupportedSize,
    VolumeMismatchOnMerge,
)
from .geosolve import (
    V_OCTAHEDRON,
    CuspMarks,
    NoSolutionEvidence,
    SolverConfig,
    build_equations,
    solve,
    solve_mgk_ansatz,
    tetrahedron_volume,
)
from .kojima import canonize
from .tricomb import (
    FilterSet,
    Pairing,
    boundary_pattern,
    canonical_signature,
    enumerate_pairings,
    pairing_from_signature,
)

log = logging.getLogger(__name__)

LOG_DIR_ENV = "HYPCENSUS_LOG_DIR"
MERGE_TOL = 1e-6


@dataclass(frozen=True)
class CensusRecord:
    """One manifold of a census, identified by its canonical decomposition."""

    signature: str
    volume: float
    boundary: str
    genera: tuple[int, ...]
    cusps: int
    cells: tuple[tuple[str, int, int], ...]
    solver: str
    provenance: tuple[str, ...]
    certified: bool = True
    complexity: int | None = None

    @property
    def cell_summary(self) -> str:
        return "+".join(f"{count}{kind[0].upper()}" for kind, _, count in self.cells)

    @property
    def cell_count(self) -> int:
        return sum(c for _, _, c in self.cells)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["genera"] = list(self.genera)
        d["cells"] = [list(c) for c in self.cells]
        d["provenance"] = list(self.provenance)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CensusRecord":
        return cls(
            signature=d["signature"],
            volume=float(d["volume"]),
            boundary=d["boundary"],
            genera=tuple(d["genera"]),
            cusps=int(d["cusps"]),
            cells=tuple((str(k), int(f), int(c)) for k, f, c in d["cells"]),
            solver=d["solver"],
            provenance=tuple(d["provenance"]),
            certified=bool(d.get("certified", True)),
            complexity=d.get("complexity"),
        )


@dataclass(frozen=True)
class CensusFailure:
    """A candidate that passed the topological filters but was not geometrized."""

    pairing: str
    stage: str
    reason: str


@dataclass
class CensusResult:
    """Records of a census plus the candidates it could not handle."""

    n: int
    records: list[CensusRecord]
    failures: list[CensusFailure] = field(default_factory=list)
    candidates: int = 0
    skipped: int = 0

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[CensusRecord]:
        return iter(self.records)

    def __getitem__(self, i: int) -> CensusRecord:
        return self.records[i]


@dataclass(frozen=True)
class CensusConfig:
    solver: SolverConfig = SolverConfig()
    restarts: int = 3
    move_budget_factor: int = 50
    extended: bool = False
    partition: tuple[int, int] | None = None
    workers: int = 1
    log_dir: str | None = None
    resume: bool = True
    exclude_lower: bool = True
    min_valence: int = 3

    @classmethod
    def from_mapping(cls, data: dict) -> "CensusConfig":
        data = dict(data)
        solver = SolverConfig(**data.pop("solver", {}))
        if "partition" in data and data["partition"] is not None:
            data["partition"] = tuple(data["partition"])
        return cls(solver=solver, **data)

    def resolved_log_dir(self) -> Path | None:
        where = self.log_dir or os.environ.get(LOG_DIR_ENV)
        return Path(where) if where else None


def census_candidate(p: Pairing) -> bool:
    """Topological admissibility: compact boundary of genus >= 2, no sphere links."""
    bp = boundary_pattern(p)
    return not bp.spheres and bool(bp.components) and all(
        c.orientable and c.genus >= 2 for c in bp.components
    )


def _geometrize(p: Pairing, config: CensusConfig):
    bp = boundary_pattern(p)
    if bp.toric:
        return solve_mgk_ansatz(p)
    system = build_equations(p, CuspMarks())
    res = solve(system, config.solver)
    seed = 0 if config.solver.seed is None else config.solver.seed
    attempt = 0
    while isinstance(res, NoSolutionEvidence) and attempt < config.restarts:
        attempt += 1
        res = solve(system, replace(config.solver, seed=seed + attempt))
    return res


def process_pairing(sig: str, config: CensusConfig) -> dict:
    """Geometrize and canonize one candidate; returns a JSON-ready log entry."""
    p = pairing_from_signature(sig)
    bp = boundary_pattern(p)
    entry: dict = {"pairing": sig}
    try:
        sol = _geometrize(p, config)
    except (AnsatzInapplicable, NonConvergence) as exc:
        return entry | {"status": "failed", "stage": "solve", "reason": f"{type(exc).__name__}: {exc}"}
    if isinstance(sol, NoSolutionEvidence):
        return entry | {"status": "failed", "stage": "solve", "reason": f"{sol.reason}: {sol.detail}".rstrip(": ")}
    if bp.toric:
        # tilts at cusps are not computed; the minimal triangulation is reported as is
        cells = (("tetrahedron", 4, p.n),)
        signature = f"cells=tetrahedron[4]*{p.n};sig=T{canonical_signature(p)}"
        volume, certified = sol.volume, False
    else:
        try:
            dec = canonize(sol, budget=config.move_budget_factor * p.n, config=config.solver)
        except (HypCensusError, ValueError) as exc:
            return entry | {"status": "failed", "stage": "canonize", "reason": f"{type(exc).__name__}: {exc}"}
        cells, signature, certified = dec.cells, dec.serialize(), True
        volume = math.fsum(tetrahedron_volume(a) for a in dec.solution.angles)
    record = CensusRecord(
        signature=signature,
        volume=volume,
        boundary=bp.describe(),
        genera=bp.genera,
        cusps=bp.toric,
        cells=tuple(cells),
        solver=sol.method,
        provenance=(sig,),
        certified=certified,
    )
    return entry | {"status": "ok", "record": record.to_dict()}


def dedup(records: Iterable[CensusRecord], tol: float = MERGE_TOL) -> list[CensusRecord]:
    """Merge records with equal signatures, uniting their provenance."""
    merged: dict[str, CensusRecord] = {}
    for r in records:
        old = merged.get(r.signature)
        if old is None:
            merged[r.signature] = r
            continue
        if abs(old.volume - r.volume) > tol:
            raise VolumeMismatchOnMerge(
                f"signature {r.signature}: volumes {old.volume:.9f} and {r.volume:.9f}"
            )
        prov = tuple(sorted(set(old.provenance) | set(r.provenance)))
        merged[r.signature] = replace(old, provenance=prov, certified=old.certified and r.certified)
    return sorted(merged.values(), key=lambda r: (round(r.volume, 6), r.signature))


class ResultLog:
    """Append-only JSON-lines log of processed candidates, keyed by pairing signature."""

    def __init__(self, path: Path):
        self.path = path
        path.parent.mkdir(parents=True, exist_ok=True)

    def load(self) -> dict[str, dict]:
        done: dict[str, dict] = {}
        if not self.path.exists():
            return done
        with self.path.open() as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                try:
                    entry = json.loads(line)
                except json.JSONDecodeError:
                    continue  # torn final line after an interrupt
                done[entry["pairing"]] = entry
        return done

    def append(self, entry: dict) -> None:
        with self.path.open("a+b") as fh:
            # never extend a torn final line left by an interrupt
            if fh.tell() > 0:
                fh.seek(-1, os.SEEK_END)
                if fh.read(1) != b"\n":
                    fh.write(b"\n")
            fh.write((json.dumps(entry, sort_keys=True) + "\n").encode())
            fh.flush()


def _candidate_signatures(n: int, config: CensusConfig) -> list[str]:
    flt = FilterSet(orientable=True, min_valence=config.min_valence, manifold=True,
                    max_edges=n - 1, max_n=max(n, 3))
    return [canonical_signature(p) for p in enumerate_pairings(n, flt, partition=config.partition)
            if census_candidate(p)]


def run_census(n: int, config: CensusConfig = CensusConfig()) -> CensusResult:
    """Manifolds of complexity n with compact geodesic boundary.

    n = 3 needs ``config.extended``. Records whose signature already occurs in
    a lower-complexity census are dropped. With a log directory (argument or
    the HYPCENSUS_LOG_DIR environment variable) every processed candidate is
    appended to ``census-n<n>.jsonl`` and an interrupted run resumes from it.
    """
    if n < 1:
        raise UnsupportedSize("complexity must be positive")
    if n > 3 or (n == 3 and not config.extended):
        raise UnsupportedSize(f"census of complexity {n} needs the extended mode" if n == 3
                              else f"census of complexity {n} is not supported")
    sigs = _candidate_signatures(n, config)
    log_dir = config.resolved_log_dir()
    result_log = ResultLog(log_dir / f"census-n{n}.jsonl") if log_dir else None
    done = result_log.load() if (result_log and config.resume) else {}
    todo = [s for s in sigs if s not in done]
    entries = [done[s] for s in sigs if s in done]
    log.info("complexity %d: %d candidates, %d from log", n, len(sigs), len(entries))
    for entry in _run_pool(todo, config):
        if result_log:
            result_log.append(entry)
        entries.append(entry)
    records, failures = [], []
    for e in entries:
        if e["status"] == "ok":
            records.append(CensusRecord.from_dict(e["record"]))
        else:
            failures.append(CensusFailure(e["pairing"], e["stage"], e["reason"]))
    records = dedup(records)
    skipped = 0
    if config.exclude_lower and n > 1:
        lower: set[str] = set()
        sub = replace(config, partition=None, log_dir=None, resume=False, exclude_lower=False)
        for m in range(1, n):
            lower |= {r.signature for r in run_census(m, replace(sub, extended=True))}
        kept = [r for r in records if r.signature not in lower]
        skipped = len(records) - len(kept)
        records = kept
    failures.sort(key=lambda f: f.pairing)
    return CensusResult(n, records, failures, len(sigs), skipped)


def _run_pool(sigs: Sequence[str], config: CensusConfig) -> Iterator[dict]:
    if config.workers <= 1 or len(sigs) < 2:
        for s in sigs:
            yield process_pairing(s, config)
        return
    with ProcessPoolExecutor(max_workers=config.workers) as pool:
        yield from pool.map(process_pairing, sigs, [config] * len(sigs))


def run_octahedral_census(n: int, *, max_n: int = 3) -> CensusResult:
    """One record per connected pairing of n tetrahedra, realized by regular ideal octahedra."""
    if not 1 <= n <= max_n:
        raise UnsupportedSize(f"octahedral census supports 1 <= n <= {max_n}")
    records = []
    for p in enumerate_pairings(n, FilterSet.none(max_n=max_n)):
        system = build_equations(p, CuspMarks.all_zero(p))
        sol = solve(system)
        dec = canonize(sol)
        sig = canonical_signature(p)
        drilled = boundary_pattern(p, drill_edges=True)
        records.append(CensusRecord(
            signature=dec.serialize(),
            volume=math.fsum(tetrahedron_volume(a) for a in dec.solution.angles),
            boundary=f"S{drilled.genera[0]}" + ("" if p.is_orientable() else "~"),
            genera=drilled.genera,
            cusps=0,
            cells=dec.cells,
            solver=sol.method,
            provenance=(sig,),
            complexity=10 * n,
        ))
    return CensusResult(n, dedup(records), [], len(records), 0)


# ---------------------------------------------------------------------------
# reporting

CSV_FIELDS = ("signature", "volume", "boundary", "cells", "provenance_count")


def volume_statistics(records: Sequence[CensusRecord]) -> dict:
    """Counts, extremes and multiplicities of the volumes rounded to 1e-6."""
    counts = Counter(round(r.volume, 6) for r in records)
    if not counts:
        return {"count": 0, "values": 0, "min": None, "max": None, "max_multiplicity": 0}
    return {
        "count": len(records),
        "values": len(counts),
        "min": min(counts),
        "max": max(counts),
        "max_multiplicity": max(counts.values()),
    }


def summary_table(records: Sequence[CensusRecord]) -> str:
    """Counts by cell type (rows) and boundary (columns) with volume ranges."""
    rows = sorted({r.cell_summary for r in records})
    cols = sorted({r.boundary for r in records})
    lines = []
    header = ["cells"] + cols
    lines.append("\t".join(header))
    for row in rows:
        cells = [row]
        for col in cols:
            group = [r for r in records if r.cell_summary == row and r.boundary == col]
            if not group:
                cells.append("-")
                continue
            st = volume_statistics(group)
            if st["values"] == 1:
                cells.append(f"{st['count']} @ {st['min']:.6f}")
            else:
                cells.append(
                    f"{st['count']} in [{st['min']:.6f}, {st['max']:.6f}] "
                    f"({st['values']} values, max mult {st['max_multiplicity']})"
                )
        lines.append("\t".join(cells))
    return "\n".join(lines)


def format_summary(result: CensusResult) -> str:
    st = volume_statistics(result.records)
    noun = "manifold" if len(result) == 1 else "manifolds"
    vnoun = "volume value" if st["values"] == 1 else "volume values"
    out = [f"{len(result)} {noun}, {st['values']} {vnoun}"]
    if result.records:
        out.append(summary_table(result.records))
    if result.failures:
        out.append(f"{len(result.failures)} candidates not geometrized by this method")
    return "\n".join(out)


def to_csv(records: Sequence[CensusRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in records:
        w.writerow([r.signature, f"{r.volume:.9f}", r.boundary, r.cell_summary, len(r.provenance)])
    return buf.getvalue()


def to_json(result: CensusResult) -> str:
    payload = {
        "n": result.n,
        "candidates": result.candidates,
        "records": [r.to_dict() for r in result.records],
        "failures": [asdict(f) for f in result.failures],
        "statistics": volume_statistics(result.records),
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def records_from_json(text: str) -> list[CensusRecord]:
    return [CensusRecord.from_dict(d) for d in json.loads(text)["records"]]


__all__ = [
    "CensusConfig",
    "CensusFailure",
    "CensusRecord",
    "CensusResult",
    "LOG_DIR_ENV",
    "ResultLog",
    "V_OCTAHEDRON",
    "census_candidate",
    "dedup",
    "format_summary",
    "process_pairing",
    "records_from_json",
    "run_census",
    "run_octahedral_census",
    "summary_table",
    "to_csv",
    "to_json",
    "volume_statistics",
]
