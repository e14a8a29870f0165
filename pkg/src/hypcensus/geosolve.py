"""Hyperbolicity equations in dihedral-angle moduli and their Newton solution."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from . import tetshape
from .errors import AnsatzInapplicable, DegenerateTetrahedron, InconsistentMarks, NonConvergence, NonManifold
from .specfun import lobachevsky
from .tetshape import EDGE_INDEX, EDGES, VERTEX_EDGES, DihedralAngles
from .tricomb import EdgeClass, Pairing, edge_classes, is_manifold, vertex_classes

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class CuspMarks:
    """Vertex classes treated as ideal (toric cusps) and edge classes with angle 0."""

    ideal_vertices: frozenset[int] = frozenset()
    zero_edges: frozenset[int] = frozenset()

    @classmethod
    def all_zero(cls, p: Pairing) -> "CuspMarks":
        return cls(frozenset(), frozenset(range(len(edge_classes(p)))))


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-10
    max_iter: int = 200
    damping: float = 0.5
    min_step: float = 1e-14
    seed: int | None = None
    jitter: float = 0.05


@dataclass
class EquationSystem:
    """Residuals and Jacobian of the angle-sum, length and ideal-vertex conditions.

    Unknowns are the angles of all tetrahedron edge slots not lying on a
    zero-angle edge; slot ``6 * t + k`` is angle ``k`` of tetrahedron ``t``.
    """

    pairing: Pairing
    marks: CuspMarks
    edges: list[EdgeClass]
    free_slots: list[int]
    sum_rows: list[list[int]]
    length_rows: list[tuple[int, int]]
    modulus_rows: list[list[tuple[int, int]]]
    ideal_rows: list[list[int]]
    ideal_corners: frozenset[tuple[int, int]]

    @property
    def n_unknowns(self) -> int:
        return len(self.free_slots)

    @property
    def n_equations(self) -> int:
        return len(self.sum_rows) + len(self.length_rows) + len(self.modulus_rows) + len(self.ideal_rows)

    def full_angles(self, x: np.ndarray) -> np.ndarray:
        full = np.zeros(6 * self.pairing.n)
        full[self.free_slots] = x
        return full

    def residual_and_jacobian(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        n = self.pairing.n
        full = self.full_angles(x)
        rows: list[float] = []
        jac_full = np.zeros((self.n_equations, 6 * n))
        r = 0
        for slots in self.sum_rows:
            rows.append(math.fsum(full[s] for s in slots) - TWO_PI)
            jac_full[r, slots] += 1.0
            r += 1
        if self.length_rows:
            lens = np.empty(6 * n)
            dlen = [None] * n
            for t in range(n):
                l, j = tetshape.edge_length_jacobian(full[6 * t: 6 * t + 6])
                lens[6 * t: 6 * t + 6] = l
                dlen[t] = j
            for s0, s1 in self.length_rows:
                with np.errstate(invalid="ignore"):
                    rows.append(lens[s1] - lens[s0])
                for s, sgn in ((s1, 1.0), (s0, -1.0)):
                    t, k = divmod(s, 6)
                    jac_full[r, 6 * t: 6 * t + 6] += sgn * dlen[t][k]  # type: ignore[index]
                r += 1
        for terms in self.modulus_rows:
            val = 0.0
            for s, sgn in terms:
                val += sgn * math.log(math.sin(full[s]))
                jac_full[r, s] += sgn / math.tan(full[s])
            rows.append(val)
            r += 1
        for slots in self.ideal_rows:
            rows.append(math.fsum(full[s] for s in slots) - math.pi)
            jac_full[r, slots] += 1.0
            r += 1
        return np.array(rows), jac_full[:, self.free_slots]

    def in_domain(self, x: np.ndarray) -> bool:
        if np.any(x <= 0.0) or np.any(x >= math.pi):
            return False
        full = self.full_angles(x)
        for t in range(self.pairing.n):
            ang = full[6 * t: 6 * t + 6]
            for v, es in enumerate(VERTEX_EDGES):
                s = ang[es[0]] + ang[es[1]] + ang[es[2]]
                if (t, v) in self.ideal_corners:
                    if s > math.pi + 1e-6:
                        return False
                elif s >= math.pi:
                    return False
            if not tetshape.is_hyperbolic(ang):
                return False
        return True

    def initial_guess(self, rng: np.random.Generator | None = None, jitter: float = 0.0) -> np.ndarray:
        full = np.zeros(6 * self.pairing.n)
        for e in self.edges:
            if e.id in self.marks.zero_edges:
                continue
            for (t, a, b) in e.slots:
                full[6 * t + EDGE_INDEX[(a, b)]] = TWO_PI / e.valence
        if rng is not None and jitter:
            full *= 1.0 + jitter * rng.uniform(-1.0, 1.0, full.shape)
        full = _project(full, self.pairing.n, self.ideal_corners)
        return full[self.free_slots]


def _project(full: np.ndarray, n: int, ideal: frozenset) -> np.ndarray:
    out = full.copy()
    for t in range(n):
        ang = out[6 * t: 6 * t + 6]
        free = ang > 0
        ang[free] = np.clip(ang[free], 1e-3, math.pi - 1e-3)
        worst = max(
            sum(ang[k] for k in es) for v, es in enumerate(VERTEX_EDGES) if (t, v) not in ideal
        ) if any((t, v) not in ideal for v in range(4)) else 0.0
        if worst >= 0.95 * math.pi:
            ang *= 0.95 * math.pi / worst
    return out


def build_equations(p: Pairing, marks: CuspMarks = CuspMarks()) -> EquationSystem:
    """Assemble the consistency equations of a manifold pairing.

    Per non-zero edge class: one angle-sum equation and one length equality
    for every slot after the first. Length equalities are dropped when an end
    of the edge is an ideal vertex; an edge ideal at both ends instead gets the
    condition that the moduli of the cusp similarity around it multiply to 1.
    Every corner at an ideal vertex gets an angle sum of pi.
    """
    edges = edge_classes(p)
    if len(marks.zero_edges) < len(edges):
        # with every edge drilled the pairing need not be a manifold
        ok, why = is_manifold(p)
        if not ok:
            raise NonManifold(why)
    vcls = vertex_classes(p)
    for k in marks.ideal_vertices:
        if not 0 <= k < len(vcls):
            raise InconsistentMarks(f"vertex class {k} does not exist")
    for k in marks.zero_edges:
        if not 0 <= k < len(edges):
            raise InconsistentMarks(f"edge class {k} does not exist")
    for e in edges:
        if e.id in marks.zero_edges and any(v in marks.ideal_vertices for v in e.ends):
            raise InconsistentMarks(f"zero-angle edge {e.id} ends at an ideal vertex")
    ideal_corners = frozenset(c for k in marks.ideal_vertices for c in vcls[k])

    zero_slots = {
        6 * t + EDGE_INDEX[(a, b)] for e in edges if e.id in marks.zero_edges for (t, a, b) in e.slots
    }
    free = [s for s in range(6 * p.n) if s not in zero_slots]
    sum_rows, length_rows, modulus_rows = [], [], []
    for e in edges:
        if e.id in marks.zero_edges:
            continue
        slots = [6 * t + EDGE_INDEX[(a, b)] for (t, a, b) in e.slots]
        sum_rows.append(slots)
        ends_ideal = [v in marks.ideal_vertices for v in e.ends]
        if not any(ends_ideal):
            length_rows.extend((slots[0], s) for s in slots[1:])
        elif all(ends_ideal):
            terms = []
            for (t, a, b) in e.slots:
                c, d = _walk_sides(p, e, t, a, b)
                terms.append((6 * t + EDGE_INDEX[(a, c)], 1.0))
                terms.append((6 * t + EDGE_INDEX[(a, d)], -1.0))
            modulus_rows.append(terms)
    ideal_rows = [
        [6 * t + k for k in VERTEX_EDGES[v]] for (t, v) in sorted(ideal_corners)
    ]
    return EquationSystem(p, marks, edges, free, sum_rows, length_rows, modulus_rows, ideal_rows, ideal_corners)


def _walk_sides(p: Pairing, e: EdgeClass, t: int, a: int, b: int) -> tuple[int, int]:
    # entry side c (face shared with the previous slot) and exit side d
    i = next(i for i, s in enumerate(e.slots) if s == (t, a, b))
    tn, an, bn = e.slots[(i + 1) % len(e.slots)]
    for d in range(4):
        if d in (a, b):
            continue
        t2, perm = p.gluings[t][6 - a - b - d]
        if t2 == tn and perm[a] == an and perm[b] == bn:
            return 6 - a - b - d, d
    raise InconsistentMarks("edge cycle does not follow the gluings")


@dataclass(frozen=True)
class GeometricSolution:
    """Solved angle structure on a pairing."""

    pairing: Pairing
    marks: CuspMarks
    angles: tuple[DihedralAngles, ...]
    residual_norm: float
    volume: float
    edge_lengths: tuple[tuple[float, ...], ...]
    iterations: int = 0
    method: str = "newton"

    def slot_angle(self, t: int, a: int, b: int) -> float:
        return self.angles[t][EDGE_INDEX[(a, b)]]

    def edge_class_lengths(self) -> list[float]:
        out = []
        for e in edge_classes(self.pairing):
            t, a, b = e.slots[0]
            out.append(self.edge_lengths[t][EDGE_INDEX[(a, b)]])
        return out


@dataclass(frozen=True)
class NoSolutionEvidence:
    reason: Literal["diverged", "left-domain", "max-iterations"]
    iterations: int
    residual_norm: float
    detail: str = ""

    def __bool__(self) -> bool:
        return False


V_OCTAHEDRON = 8.0 * lobachevsky(math.pi / 4)


def tetrahedron_volume(angles) -> float:
    """Volume of one truncated tetrahedron; the all-zero one is a regular ideal octahedron."""
    if all(a == 0.0 for a in angles):
        return V_OCTAHEDRON
    return tetshape.volume(angles)


def _finish(system: EquationSystem, full: np.ndarray, res: float, it: int, method: str) -> GeometricSolution:
    n = system.pairing.n
    angles = tuple(DihedralAngles(*map(float, full[6 * t: 6 * t + 6])) for t in range(n))
    vol = math.fsum(tetrahedron_volume(a) for a in angles)
    lens = tuple(
        tuple(map(float, tetshape.edge_lengths(a))) if any(a) else (math.inf,) * 6 for a in angles
    )
    return GeometricSolution(system.pairing, system.marks, angles, res, vol, lens, it, method)


def solve(system: EquationSystem, config: SolverConfig = SolverConfig(), *,
          start: np.ndarray | None = None) -> GeometricSolution | NoSolutionEvidence:
    """Damped Newton iteration with LU (partial pivoting) steps.

    Steps are halved while they leave the admissible set or fail to reduce
    the residual. Non-square systems use least-squares steps. ``start`` is an
    optional full angle vector (6 per tetrahedron) replacing the default
    initial guess.
    """
    if system.n_unknowns == 0:
        return _finish(system, system.full_angles(np.zeros(0)), 0.0, 0, "trivial")
    if start is not None:
        x = np.asarray(start, dtype=float)[system.free_slots]
    else:
        rng = np.random.default_rng(config.seed) if config.seed is not None else None
        x = system.initial_guess(rng, config.jitter if rng is not None else 0.0)
    if not system.in_domain(x):
        return NoSolutionEvidence("left-domain", 0, math.inf, "initial guess not admissible")
    F, J = system.residual_and_jacobian(x)
    norm = float(np.linalg.norm(F))
    square = J.shape[0] == J.shape[1]
    for it in range(1, config.max_iter + 1):
        if norm < config.tol:
            return _finish(system, system.full_angles(x), norm, it - 1, "newton")
        try:
            if square:
                step = np.linalg.solve(J, -F)
            else:
                step = np.linalg.lstsq(J, -F, rcond=None)[0]
        except np.linalg.LinAlgError:
            return NoSolutionEvidence("diverged", it, norm, "singular Jacobian")
        if not np.all(np.isfinite(step)):
            return NoSolutionEvidence("diverged", it, norm, "non-finite Newton step")
        lam = 1.0
        exits = not system.in_domain(x + step)
        while True:
            trial = x + lam * step
            if system.in_domain(trial):
                try:
                    F_new, J_new = system.residual_and_jacobian(trial)
                except (DegenerateTetrahedron, ValueError):
                    F_new = None
                if F_new is not None:
                    new_norm = float(np.linalg.norm(F_new))
                    if new_norm <= (1.0 - 1e-4 * lam) * norm or new_norm < config.tol:
                        break
            lam *= config.damping
            if lam * float(np.max(np.abs(step))) < config.min_step:
                # a full Newton step outside the admissible set means the root lies beyond it
                reason = "left-domain" if exits else "diverged"
                return NoSolutionEvidence(reason, it, norm, f"step collapsed at lambda={lam:.1e}")
        x, F, J, norm = trial, F_new, J_new, new_norm
    if norm < config.tol:
        return _finish(system, system.full_angles(x), norm, config.max_iter, "newton")
    return NoSolutionEvidence("max-iterations", config.max_iter, norm)


def solve_pairing(p: Pairing, marks: CuspMarks = CuspMarks(),
                  config: SolverConfig = SolverConfig()) -> GeometricSolution | NoSolutionEvidence:
    return solve(build_equations(p, marks), config)


# ---------------------------------------------------------------------------
# symmetric ansatz for minimal triangulations with toric cusps


def _ansatz_layout(p: Pairing, marks: CuspMarks) -> list[int | None]:
    vcls = vertex_classes(p)
    cusp_vertex: list[int | None] = [None] * p.n
    for k in marks.ideal_vertices:
        for t, v in vcls[k]:
            if cusp_vertex[t] is not None:
                raise AnsatzInapplicable(f"tetrahedron {t} has more than one ideal vertex")
            cusp_vertex[t] = v
    return cusp_vertex


def _ansatz_angles(layout: list[int | None], alpha: float, beta: float) -> np.ndarray:
    full = np.empty(6 * len(layout))
    for t, v in enumerate(layout):
        if v is None:
            full[6 * t: 6 * t + 6] = beta
        else:
            for k, (a, b) in enumerate(EDGES):
                full[6 * t + k] = math.pi / 3 if v in (a, b) else alpha
    return full


def solve_mgk_ansatz(p: Pairing, marks: CuspMarks | None = None, tol: float = 1e-12,
                     max_iter: int = 100) -> GeometricSolution:
    """Solve the two-parameter ansatz of a minimal triangulation with toric cusps.

    Tetrahedra with an ideal vertex get angle pi/3 on the three edges at it and
    a common angle alpha on the other three; all other tetrahedra are regular
    with angle beta. When ``marks`` is None the toric vertex classes are used.
    """
    from .tricomb import toric_vertex_classes

    if marks is None:
        marks = CuspMarks(toric_vertex_classes(p))
    if marks.zero_edges:
        raise AnsatzInapplicable("the ansatz has no zero-angle edges")
    layout = _ansatz_layout(p, marks)
    system = build_equations(p, marks)
    has_alpha = any(v is not None for v in layout)
    has_beta = any(v is None for v in layout)
    # angle-sum rows depend only on counts of (pi/3, alpha, beta) slots
    full_counts = []
    for slots in system.sum_rows:
        c = [0, 0, 0]
        for s in slots:
            t, k = divmod(s, 6)
            v = layout[t]
            if v is None:
                c[2] += 1
            elif v in EDGES[k]:
                c[0] += 1
            else:
                c[1] += 1
        full_counts.append(tuple(c))
    params = [has_alpha, has_beta]
    # d(angles)/d(alpha, beta) on the free slots
    basis = np.column_stack([
        (_ansatz_angles(layout, 1.0, 0.0) - _ansatz_angles(layout, 0.0, 0.0))[system.free_slots],
        _ansatz_angles(layout, 0.0, 1.0)[system.free_slots],
    ])[:, params]

    def unpack(z: np.ndarray) -> tuple[float, float]:
        return (float(z[0]) if has_alpha else 0.0, float(z[-1]) if has_beta else 0.0)

    def evaluate(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        F, J = system.residual_and_jacobian(_ansatz_angles(layout, *unpack(z))[system.free_slots])
        return F, J @ basis

    # starting point from the linear angle-sum rows
    A = np.array([[c[1], c[2]] for c in full_counts], dtype=float)[:, params]
    rhs = np.array([TWO_PI - c[0] * math.pi / 3 for c in full_counts])
    z = np.linalg.lstsq(A, rhs, rcond=None)[0]
    norm = math.inf
    it = 0
    for it in range(max_iter):
        F, J = evaluate(z)
        norm = float(np.linalg.norm(F))
        if norm < tol:
            break
        step = np.linalg.lstsq(J, -F, rcond=None)[0]
        lam = 1.0
        while lam > 1e-12:
            trial = z + lam * step
            try:
                if np.linalg.norm(evaluate(trial)[0]) < norm:
                    break
            except (DegenerateTetrahedron, ValueError):
                pass
            lam *= 0.5
        else:
            raise NonConvergence(f"ansatz Newton stalled with residual {norm:.3e}")
        z = trial
    if norm >= tol:
        raise NonConvergence(f"ansatz residual {norm:.3e} after {max_iter} iterations")
    full = _ansatz_angles(layout, *unpack(z))
    if not system.in_domain(full[system.free_slots]):
        raise AnsatzInapplicable("ansatz solution is not an admissible angle structure")
    return _finish(system, full, norm, it, "ansatz")
