"""Hyperbolic tetrahedron volumes, angle structures and a small census of
hyperbolic 3-manifolds with geodesic boundary."""
from .census import CensusConfig, CensusRecord, run_census, run_octahedral_census
from .errors import HypCensusError
from .geosolve import CuspMarks, SolverConfig, build_equations, solve, solve_mgk_ansatz
from .kojima import canonize, tilt_sum
from .specfun import dilog_unit_circle, integrate, lobachevsky
from .tetshape import DihedralAngles, volume, volume_dilog, volume_integral
from .tricomb import Pairing, canonical_signature, edge_classes, enumerate_pairings

__version__ = "0.1.0"

__all__ = [
    "CensusConfig",
    "CensusRecord",
    "CuspMarks",
    "DihedralAngles",
    "HypCensusError",
    "Pairing",
    "SolverConfig",
    "build_equations",
    "canonical_signature",
    "canonize",
    "dilog_unit_circle",
    "edge_classes",
    "enumerate_pairings",
    "integrate",
    "lobachevsky",
    "run_census",
    "run_octahedral_census",
    "solve",
    "solve_mgk_ansatz",
    "tilt_sum",
    "volume",
    "volume_dilog",
    "volume_integral",
]
