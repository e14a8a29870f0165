"""Tilt certification of canonical decompositions and canonization by local moves.

Every tetrahedron is realized in Minkowski space R^{3,1} (metric
``diag(1, 1, 1, -1)``) by the duals of its truncation planes. Two
tetrahedra sharing a face are developed into one picture, and the face is
convex exactly when the far vertex of each lies beyond the hyperplane spanned
by the other's four duals, as seen from the origin.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import tetshape
from .errors import (
    DegenerateEmbedding,
    InvalidPairing,
    MixedDegenerate,
    MoveBudgetExhausted,
    NonMatchingFace,
)
from .geosolve import (
    GeometricSolution,
    NoSolutionEvidence,
    SolverConfig,
    build_equations,
    solve,
)
from .tetshape import EDGE_FACES, DihedralAngles, VertexClass
from .tricomb import (
    Retriangulation,
    canonical_signature,
    edge_classes,
    three_two_move,
    two_three_move,
)

LORENTZ = np.diag([1.0, 1.0, 1.0, -1.0])
EPS_TILT = 1e-7
MATCH_TOL = 1e-8


def lorentz(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return x.T @ LORENTZ @ y


@dataclass(frozen=True)
class MinkowskiFrame:
    """Columns of ``points`` are the vertex duals, columns of ``normals`` the inward face normals."""

    points: np.ndarray
    normals: np.ndarray
    kinds: tuple[VertexClass, ...]

    def gram(self) -> np.ndarray:
        return lorentz(self.normals, self.normals)

    def transformed(self, L: np.ndarray) -> "MinkowskiFrame":
        return MinkowskiFrame(L @ self.points, L @ self.normals, self.kinds)

    def point_norms(self) -> np.ndarray:
        return np.einsum("ij,ik,kj->j", self.points, LORENTZ, self.points)


def frame_from_angles(angles) -> MinkowskiFrame:
    ang = DihedralAngles(*map(float, angles))
    octahedral = all(a == 0.0 for a in ang)
    if not octahedral:
        ang = tetshape.check_angles(ang, strict=False)
        if not tetshape.is_hyperbolic(ang):
            raise DegenerateEmbedding("angles do not describe a hyperbolic tetrahedron")
    G = tetshape.gram_matrix(ang)
    evals, evecs = np.linalg.eigh(G)
    order = np.argsort(-evals)  # the single negative eigenvalue goes last (time axis)
    evals, evecs = evals[order], evecs[:, order]
    if not (evals[2] > 0 > evals[3]):
        raise DegenerateEmbedding(f"Gram matrix signature is not (3,1): eigenvalues {evals}")
    normals = np.sqrt(np.abs(evals))[:, None] * evecs.T
    inv = np.linalg.inv(G)
    raw = normals @ inv  # column i is orthogonal to every face through vertex i
    kinds = (VertexClass.ULTRA_IDEAL,) * 4 if octahedral else tetshape.classify_vertices(ang)
    pts = np.empty((4, 4))
    for i in range(4):
        if kinds[i] is VertexClass.IDEAL:
            col = raw[:, i] / abs(raw[3, i])
        elif inv[i, i] > 0:
            col = raw[:, i] / math.sqrt(inv[i, i])
        else:
            raise DegenerateEmbedding(f"vertex {i} is finite: no truncation plane")
        pts[:, i] = col
    center = pts.sum(axis=1)
    if center[3] < 0:
        pts, normals = -pts, -normals
    return MinkowskiFrame(pts, normals, kinds)


def embed(sol: GeometricSolution, tet: int) -> MinkowskiFrame:
    """Minkowski realization of one tetrahedron of a solved structure."""
    return frame_from_angles(sol.angles[tet])


def _scaled_face_columns(frame: MinkowskiFrame, verts: list[int]) -> np.ndarray:
    cols = frame.points[:, verts].copy()
    ideal = [frame.kinds[v] is VertexClass.IDEAL for v in verts]
    if all(ideal):
        raise DegenerateEmbedding("face with three ideal vertices cannot be matched by duals")
    for k, v in enumerate(verts):
        if ideal[k]:
            others = [cols[:, j] for j in range(3) if not ideal[j]]
            s = sum(float(lorentz(cols[:, k], o)) for o in others) / len(others)
            cols[:, k] /= -s
    return cols


def transport(frame: MinkowskiFrame, other_angles, perm, face: int) -> MinkowskiFrame:
    """Develop the neighbour glued to ``face`` of ``frame`` via ``perm`` into the same picture."""
    other = frame_from_angles(other_angles)
    verts = [v for v in range(4) if v != face]
    P = np.column_stack([_scaled_face_columns(frame, verts), -frame.normals[:, face]])
    Q = np.column_stack([
        _scaled_face_columns(other, [perm[v] for v in verts]),
        other.normals[:, perm[face]],
    ])
    L = P @ np.linalg.inv(Q)
    err = float(np.max(np.abs(L.T @ LORENTZ @ L - LORENTZ)))
    if err > MATCH_TOL * max(1.0, float(np.max(np.abs(L))) ** 2):
        raise NonMatchingFace(f"face geometries differ: isometry defect {err:.2e}")
    if L[3, 3] < 0:
        raise NonMatchingFace("matching map reverses time orientation")
    return other.transformed(L)


def develop_pair(sol: GeometricSolution, tet: int, face: int) -> tuple[MinkowskiFrame, MinkowskiFrame]:
    """Frames of ``tet`` and of its neighbour across ``face`` sharing that face."""
    t2, perm = sol.pairing.gluings[tet][face]
    first = embed(sol, tet)
    return first, transport(first, sol.angles[t2], perm, face)


def _relation(points: np.ndarray) -> np.ndarray:
    # the (generically unique) linear relation among five points of R^4
    _, _, vt = np.linalg.svd(points)
    return vt[-1]


def _tilt_from_points(shared: np.ndarray, apex1: np.ndarray, apex2: np.ndarray) -> float:
    lam = _relation(np.column_stack([shared, apex1, apex2]))
    if lam[3] < 0:
        lam = -lam
    if lam[4] <= 0 or lam[3] <= 0:
        raise DegenerateEmbedding("developed apexes lie on the same side of the shared face")
    return float(lam.sum() / math.sqrt(lam[3] * lam[4]))


def tilt_sum(sol: GeometricSolution, tet: int, face: int) -> float:
    """Signed convexity measure across an internal face.

    Negative when the face is strictly convex, zero when the two tetrahedra
    are coplanar across it, positive when the union is not convex.
    """
    a, b = develop_pair(sol, tet, face)
    t2, perm = sol.pairing.gluings[tet][face]
    if any(k is VertexClass.IDEAL for k in a.kinds + b.kinds):
        raise DegenerateEmbedding("tilts at toric cusps need horoball duals, which are not supported")
    verts = [v for v in range(4) if v != face]
    return _tilt_from_points(a.points[:, verts], a.points[:, face], b.points[:, perm[face]])


@dataclass(frozen=True)
class FaceTilt:
    tet: int
    face: int
    other: int
    other_face: int
    value: float

    @property
    def status(self) -> str:
        if self.value < -EPS_TILT:
            return "negative"
        if self.value > EPS_TILT:
            return "positive"
        return "zero"


@dataclass(frozen=True)
class TiltReport:
    faces: tuple[FaceTilt, ...]

    @property
    def certified(self) -> bool:
        return all(f.status == "negative" for f in self.faces)

    def by_status(self, status: str) -> list[FaceTilt]:
        return [f for f in self.faces if f.status == status]


def tilt_report(sol: GeometricSolution) -> TiltReport:
    out = []
    for t, f, t2, f2 in sol.pairing.face_pairs():
        out.append(FaceTilt(t, f, t2, f2, tilt_sum(sol, t, f)))
    return TiltReport(tuple(out))


# ---------------------------------------------------------------------------
# geometric moves


def _angles_from_points(W: np.ndarray) -> DihedralAngles | None:
    """Dihedral angles of the tetrahedron whose vertex duals are the columns of W."""
    try:
        rows = np.linalg.inv(W)
    except np.linalg.LinAlgError:
        return None
    normals = LORENTZ @ rows.T  # column i pairs to 1 with point i and 0 with the others
    norms = np.einsum("ij,ik,kj->j", normals, LORENTZ, normals)
    if np.any(norms <= 0):
        return None
    normals = normals / np.sqrt(norms)
    G = lorentz(normals, normals)
    out = []
    for p, q in EDGE_FACES:
        c = -G[p, q]
        if not -1.0 < c < 1.0:
            return None
        out.append(math.acos(c))
    ang = DihedralAngles(*out)
    if any(s >= math.pi for s in ang.vertex_sums()) or not tetshape.is_hyperbolic(ang):
        return None
    return ang


def _move_is_geometric(points: dict[str, np.ndarray], ring: list[str], axis: list[str]) -> bool:
    # the segment joining the two axis duals must cross the triangle of the ring duals
    lam = _relation(np.column_stack([points[s] for s in ring + axis]))
    if lam[3] < 0:
        lam = -lam
    return bool(lam[4] > 0 and np.all(lam[:3] < 0))


def _cluster_points(sol: GeometricSolution, cluster: dict[int, dict[int, str]], order: list[int]) -> dict[str, np.ndarray]:
    p = sol.pairing
    frames: dict[int, MinkowskiFrame] = {order[0]: embed(sol, order[0])}
    for t in order[1:]:
        for s in list(frames):
            hit = next(((f, perm) for f, (t2, perm) in enumerate(p.gluings[s]) if t2 == t
                        and all(cluster[t][perm[v]] == cluster[s][v] for v in range(4) if v != f)), None)
            if hit is not None:
                f, perm = hit
                frames[t] = transport(frames[s], sol.angles[t], perm, f)
                break
        else:
            raise InvalidPairing("cluster is not connected through its shared faces")
    pts: dict[str, np.ndarray] = {}
    for t, fr in frames.items():
        for v, sym in cluster[t].items():
            col = fr.points[:, v]
            if sym in pts and not np.allclose(pts[sym], col, atol=1e-7):
                raise NonMatchingFace(f"cluster duals for {sym} disagree after development")
            pts.setdefault(sym, col)
    return pts


def _apply_move(sol: GeometricSolution, move: Retriangulation, points: dict[str, np.ndarray],
                config: SolverConfig) -> GeometricSolution | None:
    n_new = move.pairing.n
    full = np.zeros(6 * n_new)
    for old, new in move.kept.items():
        full[6 * new: 6 * new + 6] = sol.angles[old]
    for i, syms in enumerate(move.new_tets):
        ang = _angles_from_points(np.column_stack([points[s] for s in syms]))
        if ang is None:
            return None
        full[6 * (move.first_new + i): 6 * (move.first_new + i) + 6] = ang
    system = build_equations(move.pairing, sol.marks)
    res = solve(system, config, start=full)
    if isinstance(res, NoSolutionEvidence):
        return None
    return res


def geometric_two_three(sol: GeometricSolution, tet: int, face: int,
                        config: SolverConfig = SolverConfig()) -> GeometricSolution | None:
    """2-3 move across a face, or None when it is not realizable geometrically."""
    t2, _ = sol.pairing.gluings[tet][face]
    if t2 == tet:
        return None
    move = two_three_move(sol.pairing, tet, face)
    pts = _cluster_points(sol, move.symbols, [tet, t2])
    if not _move_is_geometric(pts, ["a", "b", "c"], ["d", "e"]):
        return None
    return _apply_move(sol, move, pts, config)


def geometric_three_two(sol: GeometricSolution, edge_id: int,
                        config: SolverConfig = SolverConfig()) -> GeometricSolution | None:
    """3-2 move removing a valence-3 edge, or None when not realizable."""
    edge = edge_classes(sol.pairing)[edge_id]
    try:
        move = three_two_move(sol.pairing, edge)
    except InvalidPairing:
        return None
    order = [s[0] for s in edge.slots]
    pts = _cluster_points(sol, move.symbols, order)
    if not _move_is_geometric(pts, ["X0", "X1", "X2"], ["d", "e"]):
        return None
    return _apply_move(sol, move, pts, config)


# ---------------------------------------------------------------------------
# canonization


@dataclass(frozen=True)
class CanonicalDecomposition:
    """Cells and gluing signature of a certified canonical decomposition."""

    cells: tuple[tuple[str, int, int], ...]
    signature: str
    solution: GeometricSolution
    tilts: TiltReport
    moves: int = 0

    @property
    def cell_count(self) -> int:
        return sum(c for _, _, c in self.cells)

    @property
    def volume(self) -> float:
        return self.solution.volume

    def serialize(self) -> str:
        """``cells=<kind>[<faces>]*<count>,...;sig=<signature>``, stable across runs."""
        cells = ",".join(f"{kind}[{faces}]*{count}" for kind, faces, count in self.cells)
        return f"cells={cells};sig={self.signature}"

    @staticmethod
    def parse(text: str) -> tuple[tuple[tuple[str, int, int], ...], str]:
        cells_part, sig_part = text.split(";", 1)
        if not cells_part.startswith("cells=") or not sig_part.startswith("sig="):
            raise ValueError(f"not a serialized decomposition: {text!r}")
        cells = []
        for item in cells_part[len("cells="):].split(","):
            head, count = item.split("*")
            kind, faces = head.rstrip("]").split("[")
            cells.append((kind, int(faces), int(count)))
        return tuple(cells), sig_part[len("sig="):]


def _is_octahedral(sol: GeometricSolution) -> bool:
    return all(all(a == 0.0 for a in ang) for ang in sol.angles)


def canonize(sol: GeometricSolution, *, budget: int | None = None,
             config: SolverConfig = SolverConfig()) -> CanonicalDecomposition:
    """Drive a solved triangulation to its canonical decomposition.

    While some face is non-convex, the most non-convex face is removed by a
    3-2 move on one of its valence-3 edges, or else by a 2-3 move; the
    structure is re-solved after every move.
    """
    if _is_octahedral(sol):
        # each all-zero truncated tetrahedron is a regular ideal octahedron
        report = tilt_report(sol)
        if not report.certified:
            raise MixedDegenerate("octahedral structure with a non-convex face")
        sig = "O" + canonical_signature(sol.pairing)
        return CanonicalDecomposition((("octahedron", 8, sol.pairing.n),), sig, sol, report, 0)
    budget = 50 * sol.pairing.n if budget is None else budget
    moves = 0
    while True:
        report = tilt_report(sol)
        positive = sorted(report.by_status("positive"), key=lambda f: (-f.value, f.tet, f.face))
        if not positive:
            if report.by_status("zero"):
                raise MixedDegenerate(
                    f"{len(report.by_status('zero'))} coplanar faces: the merged cells need a by-hand analysis"
                )
            sig = "T" + canonical_signature(sol.pairing)
            return CanonicalDecomposition((("tetrahedron", 4, sol.pairing.n),), sig, sol, report, moves)
        if moves >= budget:
            raise MoveBudgetExhausted(f"{moves} moves without reaching a convex decomposition")
        new = _first_valid_move(sol, positive, config)
        if new is None:
            raise MoveBudgetExhausted("no non-convex face admits a geometric move")
        sol = new
        moves += 1


def _first_valid_move(sol: GeometricSolution, faces: list[FaceTilt], config: SolverConfig):
    edges = edge_classes(sol.pairing)
    slot_edge = {(t, min(a, b), max(a, b)): e.id for e in edges for (t, a, b) in e.slots}
    for ft in faces:
        verts = [v for v in range(4) if v != ft.face]
        for i in range(3):
            a, b = verts[i], verts[(i + 1) % 3]
            eid = slot_edge[(ft.tet, min(a, b), max(a, b))]
            if edges[eid].valence == 3:
                new = geometric_three_two(sol, eid, config)
                if new is not None:
                    return new
        new = geometric_two_three(sol, ft.tet, ft.face, config)
        if new is not None:
            return new
    return None
