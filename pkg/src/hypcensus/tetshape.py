"""Hyperbolic tetrahedra parameterized by their six dihedral angles.

Vertex and edge conventions used throughout the package:

* vertices are 0..3 and face ``i`` is the face opposite vertex ``i``;
* the angles ``A, B, C, D, E, F`` sit on the edges ``01, 02, 03, 23, 13, 12``,
  so ``(A, D)``, ``(B, E)`` and ``(C, F)`` are opposite pairs and the vertex
  triples are ``A+B+C``, ``A+E+F``, ``B+D+F`` and ``C+D+E``.

Vertices whose triple sums to more than pi are finite, exactly pi ideal and
less than pi ultra-ideal (the tetrahedron is truncated there).
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import (
    BranchUndefined,
    DegenerateTetrahedron,
    NotFiniteSymmetric,
    NotIdeal,
)
from .specfun import integrate, lobachevsky

EPS_IDEAL = 1e-9
EPS_BRANCH = 1e-6

EDGES: tuple[tuple[int, int], ...] = ((0, 1), (0, 2), (0, 3), (2, 3), (1, 3), (1, 2))
EDGE_INDEX = {e: k for k, e in enumerate(EDGES)}
EDGE_INDEX.update({(j, i): k for (i, j), k in list(EDGE_INDEX.items())})
OPPOSITE_EDGE = (3, 4, 5, 0, 1, 2)
# edge indices incident to each vertex
VERTEX_EDGES: tuple[tuple[int, int, int], ...] = tuple(
    tuple(k for k, e in enumerate(EDGES) if v in e) for v in range(4)
)
# the pair of faces meeting along each edge
EDGE_FACES: tuple[tuple[int, int], ...] = tuple(
    tuple(f for f in range(4) if f not in e) for e in EDGES
)


class DihedralAngles(NamedTuple):
    A: float
    B: float
    C: float
    D: float
    E: float
    F: float

    @classmethod
    def regular(cls, theta: float) -> "DihedralAngles":
        return cls(*([float(theta)] * 6))

    @classmethod
    def symmetric(cls, a: float, b: float, c: float) -> "DihedralAngles":
        return cls(a, b, c, a, b, c)

    def vertex_sums(self) -> tuple[float, float, float, float]:
        return vertex_sums(self)

    def hamiltonian_sums(self) -> tuple[float, float, float]:
        A, B, C, D, E, F = self
        return (A + B + D + E, A + C + D + F, B + C + E + F)


class VertexClass(enum.Enum):
    FINITE = "finite"
    IDEAL = "ideal"
    ULTRA_IDEAL = "ultra-ideal"


@dataclass(frozen=True)
class VolumeParams:
    k1: float
    k2: float
    k3: float
    k4: float
    z1: float
    z2: float


def _as_angles(angles: Sequence[float]) -> DihedralAngles:
    if isinstance(angles, DihedralAngles):
        return angles
    vals = tuple(float(a) for a in angles)
    if len(vals) != 6:
        raise ValueError(f"expected six dihedral angles, got {len(vals)}")
    return DihedralAngles(*vals)


def check_angles(angles: Sequence[float], *, strict: bool = True) -> DihedralAngles:
    """Validate a six-tuple of angles and return it as DihedralAngles.

    With ``strict`` every angle must lie in the open interval (0, pi); otherwise
    zero angles are admitted.
    """
    ang = _as_angles(angles)
    for name, a in zip(ang._fields, ang):
        if not math.isfinite(a):
            raise DegenerateTetrahedron(f"angle {name} is not finite")
        if a < 0 or a >= math.pi:
            raise DegenerateTetrahedron(f"angle {name}={a!r} outside [0, pi)")
        if strict and a == 0:
            raise DegenerateTetrahedron(f"angle {name} is zero")
    for v, s in enumerate(vertex_sums(ang)):
        if s <= 0:
            raise DegenerateTetrahedron(f"vertex {v} has non-positive angle sum")
    return ang


def vertex_sums(angles: Sequence[float]) -> tuple[float, float, float, float]:
    A, B, C, D, E, F = angles
    return (A + B + C, A + E + F, B + D + F, C + D + E)


def classify_vertices(angles: Sequence[float], eps: float = EPS_IDEAL) -> tuple[VertexClass, ...]:
    ang = check_angles(angles, strict=False)
    out = []
    for s in vertex_sums(ang):
        if abs(s - math.pi) <= eps:
            out.append(VertexClass.IDEAL)
        elif s > math.pi:
            out.append(VertexClass.FINITE)
        else:
            out.append(VertexClass.ULTRA_IDEAL)
    return tuple(out)


def gram_matrix(angles: Sequence[float]) -> np.ndarray:
    """Gram matrix of the outward face normals: G[i, j] = -cos(angle on the edge shared by faces i, j)."""
    G = np.eye(4)
    for k, (p, q) in enumerate(EDGE_FACES):
        G[p, q] = G[q, p] = -math.cos(angles[k])
    return G


def cofactor_matrix(G: np.ndarray) -> np.ndarray:
    # adjugate of a symmetric matrix; direct 3x3 minors keep it valid when det(G) ~ 0
    C = np.empty((4, 4))
    for i in range(4):
        rows = [r for r in range(4) if r != i]
        for j in range(i, 4):
            cols = [c for c in range(4) if c != j]
            C[i, j] = C[j, i] = (-1) ** (i + j) * np.linalg.det(G[np.ix_(rows, cols)])
    return C


def is_hyperbolic(angles: Sequence[float]) -> bool:
    """True when the angles are those of a (possibly truncated) hyperbolic tetrahedron.

    Criterion: det(G) < 0 and every off-diagonal cofactor of G is positive.
    """
    G = gram_matrix(angles)
    if not np.linalg.det(G) < 0:
        return False
    C = cofactor_matrix(G)
    return all(C[i, j] > 0 for i in range(4) for j in range(i + 1, 4))


def require_hyperbolic(angles: Sequence[float]) -> None:
    G = gram_matrix(angles)
    if not np.linalg.det(G) < 0:
        raise DegenerateTetrahedron("Gram determinant is not negative: not a hyperbolic tetrahedron")
    C = cofactor_matrix(G)
    for i in range(4):
        for j in range(i + 1, 4):
            if not C[i, j] > 0:
                raise DegenerateTetrahedron(
                    f"Gram cofactor c[{i},{j}] = {C[i, j]:.3e} is not positive: not a hyperbolic tetrahedron"
                )


def _k_values(ang: DihedralAngles) -> tuple[float, float, float, float]:
    A, B, C, D, E, F = ang
    S = A + B + C + D + E + F
    args = (S, A + D, B + E, C + F, D + E + F, D + B + C, A + E + C, A + B + F)
    k1 = -math.fsum(math.cos(t) for t in args)
    k2 = math.fsum(math.sin(t) for t in args)
    k3 = 2.0 * (math.sin(A) * math.sin(D) + math.sin(B) * math.sin(E) + math.sin(C) * math.sin(F))
    disc = k1 * k1 + k2 * k2 - k3 * k3
    if disc < 0:
        if disc < -1e-9 * max(1.0, k3 * k3):
            raise DegenerateTetrahedron(
                f"k1^2 + k2^2 - k3^2 = {disc:.3e} < 0: angles do not define a hyperbolic tetrahedron"
            )
        disc = 0.0
    return k1, k2, k3, math.sqrt(disc)


def _integrand_terms(ang: DihedralAngles):
    vs = np.array(vertex_sums(ang))
    hs = np.array(DihedralAngles.hamiltonian_sums(ang) + (0.0,))
    return vs, hs


def volume_integrand(z, angles: Sequence[float]):
    """The log-ratio integrand of the volume integral (without the -1/4 factor).

    Accepts a scalar or an array of z values.
    """
    ang = _as_angles(angles)
    vs, hs = _integrand_terms(ang)
    z = np.asarray(z, dtype=float)
    zz = z[..., None]
    with np.errstate(divide="ignore", invalid="ignore"):
        num = np.log(np.abs(np.cos(0.5 * (vs + zz)))).sum(axis=-1)
        den = np.log(np.abs(np.sin(0.5 * (hs + zz)))).sum(axis=-1)
        out = num - den
    return out if out.ndim else float(out)


def _endpoints_vanish(ang: DihedralAngles, zs: Sequence[float]) -> bool:
    vs, hs = _integrand_terms(ang)
    for z in zs:
        # at an ideal corner a cosine factor and sin(z/2) vanish together: 0/0
        near_pole = np.min(np.abs(np.cos(0.5 * (vs + z)))) < 1e-6 or np.min(np.abs(np.sin(0.5 * (hs + z)))) < 1e-6
        if near_pole:
            continue
        val = volume_integrand(z, ang)
        if math.isfinite(val) and abs(val) > EPS_BRANCH:
            return False
    return True


def volume_params(angles: Sequence[float]) -> VolumeParams:
    """The constants k1..k4 and integration limits z1 <= z2 for the volume formulas.

    ``z1, z2 = phi -/+ psi`` with ``psi = arctan(k4/k3)`` in [0, pi/2]. The centre
    ``phi`` is arctan(k2/k1) continued across k1 = 0, i.e. atan2(k2, k1); the
    shifted branch ``phi + pi`` is used only if the integrand fails to vanish at
    the limits on the first one.
    """
    ang = _as_angles(angles)
    if all(a == 0 for a in ang):
        raise BranchUndefined(
            "all-zero angles (regular ideal octahedron): use 8*lobachevsky(pi/4) / the octahedral census"
        )
    ang = check_angles(ang, strict=False)
    require_hyperbolic(ang)
    k1, k2, k3, k4 = _k_values(ang)
    if k3 <= 0 or (k1 == 0 and k2 == 0):
        raise BranchUndefined(f"arctan branch undefined (k1={k1}, k2={k2}, k3={k3})")
    psi = math.atan2(k4, k3)
    phi0 = math.atan2(k2, k1)
    for phi in (phi0, phi0 + math.pi):
        zs = (phi - psi, phi + psi)
        if _endpoints_vanish(ang, zs):
            return VolumeParams(k1, k2, k3, k4, zs[0], zs[1])
    raise BranchUndefined("no arctan branch makes the integrand vanish at both limits")


def _singular_points(ang: DihedralAngles, lo: float, hi: float) -> list[float]:
    vs, hs = _integrand_terms(ang)
    pts = []
    bases = [math.pi - v for v in vs] + [-h for h in hs]
    for base in bases:
        m_lo = math.ceil((lo - base) / (2 * math.pi))
        m_hi = math.floor((hi - base) / (2 * math.pi))
        pts.extend(base + 2 * math.pi * m for m in range(m_lo, m_hi + 1))
    return pts


def _require_positive(ang: DihedralAngles) -> None:
    if all(a == 0 for a in ang):
        raise BranchUndefined(
            "all-zero angles (regular ideal octahedron): use 8*lobachevsky(pi/4) / the octahedral census"
        )
    for name, a in zip(ang._fields, ang):
        if a <= 0:
            raise DegenerateTetrahedron(f"angle {name} must be positive for the volume formulas")


def volume_integral(angles: Sequence[float], tol: float = 1e-12) -> float:
    """Volume as -1/4 times the integral of the log-ratio integrand over [z1, z2]."""
    ang = _as_angles(angles)
    _require_positive(ang)
    ang = check_angles(ang)
    p = volume_params(ang)
    pts = _singular_points(ang, p.z1, p.z2)
    val = integrate(
        lambda z: volume_integrand(z, ang), p.z1, p.z2, tol,
        breakpoints=pts, vectorized=True,
    )
    return -0.25 * val


def _im_u(z: float, ang: DihedralAngles) -> float:
    A, B, C, D, E, F = ang
    lob = lobachevsky
    pos = lob(0.5 * z) + lob(0.5 * (A + B + D + E + z)) + lob(0.5 * (A + C + D + F + z)) \
        + lob(0.5 * (B + C + E + F + z))
    neg = lob(0.5 * (math.pi + A + B + C + z)) + lob(0.5 * (math.pi + A + E + F + z)) \
        + lob(0.5 * (math.pi + B + D + F + z)) + lob(0.5 * (math.pi + C + D + E + z))
    return pos - neg


def volume_dilog(angles: Sequence[float]) -> float:
    """Volume as an algebraic sum of sixteen Lobachevsky functions."""
    ang = _as_angles(angles)
    _require_positive(ang)
    ang = check_angles(ang)
    p = volume_params(ang)
    return 0.5 * (_im_u(p.z1, ang) - _im_u(p.z2, ang))


def volume_ideal(a: float, b: float, c: float) -> float:
    """Milnor's volume of the ideal tetrahedron with angles a + b + c = pi."""
    if min(a, b, c) <= 0 or abs(a + b + c - math.pi) > EPS_IDEAL:
        raise NotIdeal(f"angles ({a}, {b}, {c}) are not those of an ideal tetrahedron")
    return lobachevsky(a) + lobachevsky(b) + lobachevsky(c)


def symmetric_theta(a: float, b: float, c: float) -> float:
    ca, cb, cc = math.cos(a), math.cos(b), math.cos(c)
    num = 1 - ca * ca - cb * cb - cc * cc - 2 * ca * cb * cc
    rad = (1 - ca + cb + cc) * (1 + ca - cb + cc) * (1 + ca + cb - cc) * (-1 + ca + cb + cc)
    if a + b + c <= math.pi or rad <= 0 or num <= 0:
        raise NotFiniteSymmetric(f"T({a}, {b}, {c}) is not a finite symmetric hyperbolic tetrahedron")
    return math.atan2(num, math.sqrt(rad))


def volume_symmetric(a: float, b: float, c: float, tol: float = 1e-12) -> float:
    """Volume of the symmetric tetrahedron T(a, b, c) with finite vertices."""
    theta = symmetric_theta(a, b, c)
    ca, cb, cc = math.cos(a), math.cos(b), math.cos(c)

    def f(t):
        ct = np.cos(t)
        num = np.arcsin(ca * ct) + np.arcsin(cb * ct) + np.arcsin(cc * ct) - (0.5 * np.pi - t)
        return num / np.sin(2 * t)

    return 2.0 * integrate(f, theta, 0.5 * math.pi, tol, vectorized=True)


def volume(angles: Sequence[float], method: str = "auto") -> float:
    """Volume by the requested method: ``integral``, ``dilog`` or ``auto``."""
    if method == "integral":
        return volume_integral(angles)
    if method == "dilog":
        return volume_dilog(angles)
    if method != "auto":
        raise ValueError(f"unknown volume method {method!r}")
    ang = check_angles(angles)
    A, B, C, D, E, F = ang
    if (A, B, C) == (D, E, F) and abs(A + B + C - math.pi) <= EPS_IDEAL:
        return volume_ideal(A, B, C)
    return volume_dilog(ang)


def _length_kind(cii: float, cjj: float, ideal_i: bool, ideal_j: bool) -> str:
    if ideal_i or ideal_j:
        return "inf"
    return "cosh" if cii * cjj > 0 else "sinh"


def edge_lengths(angles: Sequence[float]) -> tuple[float, ...]:
    """Lengths of the six internal edges, in the order A..F.

    cosh l (or sinh l when exactly one end is finite) equals
    c_ij / sqrt(|c_ii c_jj|) with c the cofactor matrix of the Gram matrix;
    edges touching an ideal vertex have infinite length.
    """
    return tuple(edge_length_jacobian(angles)[0])


def edge_length_jacobian(angles: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """Edge lengths and their derivatives d l_e / d theta_k (6x6, rows = edges).

    Rows for infinite edges are zero.
    """
    ang = check_angles(angles, strict=False)
    G = gram_matrix(ang)
    det = np.linalg.det(G)
    if det >= 0:
        raise DegenerateTetrahedron("Gram determinant is not negative: not a hyperbolic tetrahedron")
    H = np.linalg.inv(G)
    C = det * H
    classes = classify_vertices(ang)
    ideal = [c is VertexClass.IDEAL for c in classes]
    # dC/dtheta_k = det * (tr(H dG) H - H dG H), dG symmetric with two entries sin(theta_k)
    dC = np.empty((6, 4, 4))
    for k, (p, q) in enumerate(EDGE_FACES):
        s = math.sin(ang[k])
        tr = 2.0 * s * H[p, q]
        outer = s * (np.outer(H[:, p], H[q, :]) + np.outer(H[:, q], H[p, :]))
        dC[k] = det * (tr * H - outer)
    lengths = np.empty(6)
    jac = np.zeros((6, 6))
    for e, (i, j) in enumerate(EDGES):
        kind = _length_kind(C[i, i], C[j, j], ideal[i], ideal[j])
        if kind == "inf":
            lengths[e] = math.inf
            continue
        scale = math.sqrt(abs(C[i, i] * C[j, j]))
        x = C[i, j] / scale
        dx = dC[:, i, j] / scale - 0.5 * x * (dC[:, i, i] / C[i, i] + dC[:, j, j] / C[j, j])
        if kind == "cosh":
            if x < 1.0:
                raise DegenerateTetrahedron(f"edge {e}: cosh of length {x} < 1")
            lengths[e] = math.acosh(x)
            denom = math.sqrt(max(x * x - 1.0, 1e-300))
        else:
            lengths[e] = math.asinh(abs(x))
            denom = math.copysign(math.sqrt(x * x + 1.0), x)
        jac[e] = dx / denom
    return lengths, jac


def permute_angles(angles: Sequence[float], perm: Sequence[int]) -> DihedralAngles:
    """Relabel vertices by ``perm`` (old vertex v becomes perm[v])."""
    out = [0.0] * 6
    for k, (i, j) in enumerate(EDGES):
        out[EDGE_INDEX[(perm[i], perm[j])]] = angles[k]
    return DihedralAngles(*out)


SYMMETRIES: tuple[tuple[int, ...], ...] = tuple(itertools.permutations(range(4)))
