import json
import math
import subprocess
import sys

import pytest

from hypcensus import tricomb as tc
from hypcensus.cli import main, parse_angle, parse_angles

from helpers import GENUS_TWO_SIGNATURES


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def genus_two_file(tmp_path):
    path = tmp_path / "genus_two.txt"
    path.write_text(tc.pairing_from_signature(GENUS_TWO_SIGNATURES[0]).to_text())
    return path


@pytest.mark.parametrize(
    "text, value",
    [
        ("0.5", 0.5),
        ("pi", math.pi),
        ("pi/6", math.pi / 6),
        ("π/3", math.pi / 3),
        ("2pi/7", 2 * math.pi / 7),
        ("2*pi/7", 2 * math.pi / 7),
        ("pi/10.18", math.pi / 10.18),
        ("-1.5", -1.5),
    ],
)
def test_parse_angle(text, value):
    assert parse_angle(text) == pytest.approx(value, rel=1e-15)


@pytest.mark.parametrize("text", ["", "abc", "pi/0", "1/", "pi pi"])
def test_parse_angle_rejects(text):
    with pytest.raises(ValueError):
        parse_angle(text)


def test_parse_angles_repetition():
    assert parse_angles(["pi/3", "x6"]) == (math.pi / 3,) * 6
    assert parse_angles(["pi/3x6"]) == (math.pi / 3,) * 6
    assert parse_angles(["0.1", "0.2", "0.3", "0.4", "0.5", "0.6"]) == (0.1, 0.2, 0.3, 0.4, 0.5, 0.6)
    with pytest.raises(ValueError):
        parse_angles(["0.1", "0.2"])


def test_volume_ideal(capsys):
    code, out, _ = run(capsys, "volume", "pi/3", "x6")
    assert code == 0
    assert out.strip() == "1.014941606"


def test_volume_truncated_with_diagnostics(capsys):
    code, out, _ = run(capsys, "volume", "pi/6", "x6", "--diagnostics")
    lines = out.splitlines()
    assert code == 0
    assert lines[0] == "3.225995135"
    assert lines[1] == "vertices: ultra-ideal,ultra-ideal,ultra-ideal,ultra-ideal"
    assert lines[2].startswith("k1=-0.5 ")


def test_volume_methods_agree(capsys):
    outs = set()
    for method in ("integral", "dilog", "auto"):
        code, out, _ = run(capsys, "volume", "0.4", "0.5", "0.45", "0.35", "0.55", "0.5", "--method", method)
        assert code == 0
        outs.add(out)
    assert len(outs) == 1


@pytest.mark.parametrize(
    "argv, fragment",
    [
        (["volume", "0", "x6"], "octcensus"),
        (["volume", "pi/2", "x6"], "invalid-angles"),
        (["volume", "1", "2"], "expected six angles"),
        (["volume", "zz", "x6"], "cannot parse"),
    ],
)
def test_volume_errors(capsys, argv, fragment):
    code, out, err = run(capsys, *argv)
    assert code == 2
    assert out == ""
    assert len(err.strip().splitlines()) == 1
    assert err.startswith("error: ") and fragment in err


def test_solve_and_canonize(capsys, genus_two_file):
    code, out, _ = run(capsys, "solve", str(genus_two_file))
    assert code == 0
    assert out.startswith("volume 6.451990271\n")
    code, out, _ = run(capsys, "canonize", str(genus_two_file))
    assert code == 0
    assert out.splitlines()[0] == f"cells=tetrahedron[4]*2;sig=T{GENUS_TWO_SIGNATURES[0]}"


def test_solve_failure_exit_code(capsys, tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text(tc.pairing_from_signature("1090i090i").to_text())
    code, _, err = run(capsys, "solve", str(path))
    assert code == 3
    assert err.startswith("error: solve: left-domain")


def test_missing_or_malformed_pairing(capsys, tmp_path):
    code, _, err = run(capsys, "solve", str(tmp_path / "nope.txt"))
    assert code == 2 and err.startswith("error: pairing:")
    bad = tmp_path / "bad.txt"
    bad.write_text("0:1 0:2\n")
    code, _, err = run(capsys, "solve", str(bad))
    assert code == 2


def test_config_file(capsys, genus_two_file, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"solver": {"max_iter": 1, "jitter": 0.3}}))
    code, _, err = run(capsys, "solve", str(genus_two_file), "--config", str(cfg), "--seed", "3")
    assert code == 3 and "max-iterations" in err
    broken = tmp_path / "broken.json"
    broken.write_text("{")
    code, _, err = run(capsys, "solve", str(genus_two_file), "--config", str(broken))
    assert code == 2 and err.startswith("error: config:")


def test_census_commands(capsys, tmp_path):
    code, out, _ = run(capsys, "census", "1")
    assert code == 0 and out.startswith("0 manifolds")
    code, out, _ = run(capsys, "census", "2", "--out", str(tmp_path), "--log-dir", str(tmp_path / "log"))
    assert code == 0
    assert out.startswith("8 manifolds, 1 volume value\n")
    assert "2T" in out and "8 @ 6.451990" in out
    assert (tmp_path / "census-n2.csv").read_text().count("\n") == 9
    assert json.loads((tmp_path / "census-n2.json").read_text())["n"] == 2
    assert len((tmp_path / "log" / "census-n2.jsonl").read_text().splitlines()) == 8


def test_census_unsupported(capsys):
    code, _, err = run(capsys, "census", "3")
    assert code == 2 and "extended" in err
    code, _, err = run(capsys, "octcensus", "5")
    assert code == 2


def test_octcensus(capsys, tmp_path):
    code, out, _ = run(capsys, "octcensus", "1", "--out", str(tmp_path))
    assert code == 0
    assert out.strip() == "11 relative handlebodies, complexity 10, volumes 3.663862"
    assert (tmp_path / "octcensus-n1.csv").exists()


def test_output_is_deterministic(capsys, genus_two_file):
    first = run(capsys, "canonize", str(genus_two_file), "--seed", "5")
    second = run(capsys, "canonize", str(genus_two_file), "--seed", "5")
    assert first == second
    assert run(capsys, "census", "2") == run(capsys, "census", "2")


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "hypcensus", "volume", "pi/3", "x6"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert proc.stdout.strip() == "1.014941606"
