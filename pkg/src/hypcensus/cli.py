"""Command-line front end.

Exit codes: 0 success, 2 invalid input, 3 a pipeline stage failed.
"""
from __future__ import annotations

import argparse
import json
import math
import re
import sys
from dataclasses import replace
from pathlib import Path

from . import tetshape
from .census import (
    CensusConfig,
    format_summary,
    run_census,
    run_octahedral_census,
    to_csv,
    to_json,
)
from .errors import BranchUndefined, HypCensusError, UnsupportedSize
from .geosolve import NoSolutionEvidence, SolverConfig, build_equations, solve
from .kojima import canonize
from .tricomb import Pairing

EXIT_INVALID = 2
EXIT_STAGE = 3

_ANGLE_RE = re.compile(
    r"^\s*(?P<sign>-)?\s*(?P<coef>\d+(?:\.\d*)?)?\s*\*?\s*(?P<pi>pi|π)?\s*(?:/\s*(?P<den>\d+(?:\.\d*)?))?\s*$"
)


def parse_angle(text: str) -> float:
    """Parse ``0.5``, ``pi``, ``pi/6``, ``2pi/7``, ``2*pi/7`` or ``π/3``."""
    m = _ANGLE_RE.match(text)
    if not m or (m["coef"] is None and m["pi"] is None):
        raise ValueError(f"cannot parse angle {text!r}")
    value = float(m["coef"]) if m["coef"] is not None else 1.0
    if m["pi"]:
        value *= math.pi
    if m["den"] is not None:
        den = float(m["den"])
        if den == 0:
            raise ValueError(f"zero denominator in {text!r}")
        value /= den
    return -value if m["sign"] else value


def parse_angles(tokens: list[str]) -> tuple[float, ...]:
    """Six angles, or a single angle followed by ``x6`` / ``*6`` for repetition."""
    if len(tokens) == 2 and re.fullmatch(r"[x×*]\s*6", tokens[1]):
        tokens = [tokens[0]] * 6
    elif len(tokens) == 1 and re.search(r"\s*[x×]\s*6\s*$", tokens[0]):
        tokens = [re.sub(r"\s*[x×]\s*6\s*$", "", tokens[0])] * 6
    if len(tokens) != 6:
        raise ValueError(f"expected six angles, got {len(tokens)}")
    return tuple(parse_angle(t) for t in tokens)


class CliError(Exception):
    def __init__(self, code: int, reason: str):
        super().__init__(reason)
        self.code = code
        self.reason = reason


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(EXIT_INVALID, f"config: {exc}") from exc


def _solver_config(cfg: dict, args) -> SolverConfig:
    solver = SolverConfig(**cfg.get("solver", {}))
    if getattr(args, "seed", None) is not None:
        solver = replace(solver, seed=args.seed)
    return solver


def cmd_volume(args) -> str:
    try:
        angles = parse_angles(args.angles)
    except ValueError as exc:
        raise CliError(EXIT_INVALID, f"invalid-angles: {exc}") from exc
    if all(a == 0 for a in angles):
        raise CliError(
            EXIT_INVALID,
            "degenerate: all angles zero (regular ideal octahedron, volume 8*lobachevsky(pi/4)); "
            "use the octcensus command",
        )
    try:
        tetshape.check_angles(angles)
        vol = tetshape.volume(angles, method=args.method)
    except BranchUndefined as exc:
        raise CliError(EXIT_INVALID, f"degenerate: {exc}") from exc
    except HypCensusError as exc:
        raise CliError(EXIT_INVALID, f"invalid-angles: {type(exc).__name__}: {exc}") from exc
    except ValueError as exc:
        raise CliError(EXIT_INVALID, f"invalid-angles: {exc}") from exc
    lines = [f"{vol:.9f}"]
    if args.diagnostics:
        kinds = ",".join(k.value for k in tetshape.classify_vertices(angles))
        p = tetshape.volume_params(angles)
        lines.append(f"vertices: {kinds}")
        lines.append(f"k1={p.k1:.12g} k2={p.k2:.12g} k3={p.k3:.12g} k4={p.k4:.12g}")
        lines.append(f"z1={p.z1:.12g} z2={p.z2:.12g}")
    return "\n".join(lines)


def _read_pairing(path: str) -> Pairing:
    try:
        return Pairing.from_text(Path(path).read_text())
    except OSError as exc:
        raise CliError(EXIT_INVALID, f"pairing: {exc}") from exc
    except HypCensusError as exc:
        raise CliError(EXIT_INVALID, f"pairing: {exc}") from exc


def _solve_file(args):
    p = _read_pairing(args.pairing)
    cfg = _load_config(args.config)
    try:
        res = solve(build_equations(p), _solver_config(cfg, args))
    except HypCensusError as exc:
        raise CliError(EXIT_STAGE, f"solve: {type(exc).__name__}: {exc}") from exc
    if isinstance(res, NoSolutionEvidence):
        raise CliError(EXIT_STAGE, f"solve: {res.reason} after {res.iterations} iterations")
    return res, cfg


def cmd_solve(args) -> str:
    sol, _ = _solve_file(args)
    lines = [f"volume {sol.volume:.9f}", f"residual {sol.residual_norm:.3e}", f"iterations {sol.iterations}"]
    for t, ang in enumerate(sol.angles):
        lines.append(f"tet {t}: " + " ".join(f"{a:.12f}" for a in ang))
    return "\n".join(lines)


def cmd_canonize(args) -> str:
    sol, cfg = _solve_file(args)
    budget = cfg.get("move_budget_factor", 50) * sol.pairing.n
    try:
        dec = canonize(sol, budget=budget, config=_solver_config(cfg, args))
    except HypCensusError as exc:
        raise CliError(EXIT_STAGE, f"canonize: {type(exc).__name__}: {exc}") from exc
    return "\n".join([dec.serialize(), f"volume {dec.volume:.9f}", f"moves {dec.moves}"])


def _write_outputs(result, out_dir: str | None, stem: str) -> None:
    if not out_dir:
        return
    d = Path(out_dir)
    d.mkdir(parents=True, exist_ok=True)
    (d / f"{stem}.csv").write_text(to_csv(result.records))
    (d / f"{stem}.json").write_text(to_json(result))


def cmd_census(args) -> str:
    cfg = _load_config(args.config)
    try:
        config = CensusConfig.from_mapping({k: v for k, v in cfg.items() if k != "solver"})
    except TypeError as exc:
        raise CliError(EXIT_INVALID, f"config: {exc}") from exc
    config = replace(config, solver=_solver_config(cfg, args), extended=args.extended or config.extended)
    if args.log_dir:
        config = replace(config, log_dir=args.log_dir)
    if args.workers:
        config = replace(config, workers=args.workers)
    try:
        result = run_census(args.n, config)
    except UnsupportedSize as exc:
        raise CliError(EXIT_INVALID, f"census: {exc}") from exc
    except HypCensusError as exc:
        raise CliError(EXIT_STAGE, f"census: {type(exc).__name__}: {exc}") from exc
    _write_outputs(result, args.out, f"census-n{args.n}")
    return format_summary(result)


def cmd_octcensus(args) -> str:
    try:
        result = run_octahedral_census(args.n)
    except UnsupportedSize as exc:
        raise CliError(EXIT_INVALID, f"octcensus: {exc}") from exc
    except HypCensusError as exc:
        raise CliError(EXIT_STAGE, f"octcensus: {type(exc).__name__}: {exc}") from exc
    _write_outputs(result, args.out, f"octcensus-n{args.n}")
    vols = sorted({f"{r.volume:.6f}" for r in result.records})
    return f"{len(result)} relative handlebodies, complexity {10 * args.n}, volumes {', '.join(vols)}"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hypcensus", description="Hyperbolic tetrahedra and small census tools.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("volume", help="volume of a tetrahedron from its six dihedral angles")
    p.add_argument("angles", nargs="+", help="six angles (e.g. pi/6 or 0.52), or one angle followed by x6")
    p.add_argument("--method", choices=("auto", "integral", "dilog"), default="auto")
    p.add_argument("--diagnostics", action="store_true", help="print vertex classes and k/z constants")
    p.set_defaults(func=cmd_volume)

    for name, func, help_ in (
        ("solve", cmd_solve, "solve the hyperbolicity equations of a pairing file"),
        ("canonize", cmd_canonize, "solve a pairing file and canonize its structure"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("pairing", help="pairing text file")
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int)
        p.set_defaults(func=func)

    p = sub.add_parser("census", help="census of manifolds with geodesic boundary")
    p.add_argument("n", type=int)
    p.add_argument("--extended", action="store_true", help="allow complexity 3 (long run)")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="directory for CSV and JSON output")
    p.add_argument("--log-dir", help="result log directory (default: $HYPCENSUS_LOG_DIR)")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_census)

    p = sub.add_parser("octcensus", help="census of octahedral relative handlebodies")
    p.add_argument("n", type=int)
    p.add_argument("--out", help="directory for CSV and JSON output")
    p.set_defaults(func=cmd_octcensus)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        out = args.func(args)
    except CliError as exc:
        print(f"error: {exc.reason}", file=sys.stderr)
        return exc.code
    except KeyboardInterrupt:
        print("error: interrupted; partial results are in the result log", file=sys.stderr)
        return EXIT_STAGE
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
