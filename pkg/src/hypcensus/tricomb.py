"""Face pairings of tetrahedra and their combinatorics.

A :class:`Pairing` on ``n`` tetrahedra stores, for each face ``(t, f)``, the
partner ``(t2, perm)`` where ``perm`` maps the vertices of ``t`` to those of
``t2`` and ``perm[f]`` is the partner face. With every tetrahedron carrying
the orientation of its vertex order, a gluing reverses orientation exactly
when ``perm`` is odd.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

from .errors import InvalidPairing, NonManifold, UnsupportedSize

Perm = tuple[int, int, int, int]

PERMS: tuple[Perm, ...] = tuple(itertools.permutations(range(4)))  # type: ignore[assignment]
PERM_INDEX: dict[Perm, int] = {p: i for i, p in enumerate(PERMS)}


def compose(p: Perm, q: Perm) -> Perm:
    """p after q."""
    return (p[q[0]], p[q[1]], p[q[2]], p[q[3]])


def inverse(p: Perm) -> Perm:
    out = [0, 0, 0, 0]
    for i, v in enumerate(p):
        out[v] = i
    return tuple(out)  # type: ignore[return-value]


def sign(p: Perm) -> int:
    s = 1
    for i in range(4):
        for j in range(i + 1, 4):
            if p[i] > p[j]:
                s = -s
    return s


PERM_SIGN = {p: sign(p) for p in PERMS}
PERM_INV = {p: inverse(p) for p in PERMS}
# FACE_PERMS[f][g]: the six bijections taking face f onto face g, lexicographic
FACE_PERMS: tuple[tuple[tuple[Perm, ...], ...], ...] = tuple(
    tuple(tuple(p for p in PERMS if p[f] == g) for g in range(4)) for f in range(4)
)
# fixed odd map of face f onto itself, used when a new tetrahedron is attached
_NEW_TET_PERM: tuple[Perm, ...] = ((0, 2, 1, 3), (2, 1, 0, 3), (1, 0, 2, 3), (1, 0, 2, 3))

Gluing = tuple[int, Perm]


@dataclass(frozen=True)
class Pairing:
    """Orientation data-free face pairing of ``n`` tetrahedra."""

    gluings: tuple[tuple[Gluing, ...], ...]

    def __post_init__(self) -> None:
        n = len(self.gluings)
        if n == 0:
            raise InvalidPairing("a pairing needs at least one tetrahedron")
        for t, row in enumerate(self.gluings):
            if len(row) != 4:
                raise InvalidPairing(f"tetrahedron {t} has {len(row)} faces")
            for f, (t2, p) in enumerate(row):
                if not 0 <= t2 < n or p not in PERM_SIGN:
                    raise InvalidPairing(f"bad gluing at face ({t}, {f})")
                if t2 == t and p[f] == f:
                    raise InvalidPairing(f"face ({t}, {f}) glued to itself")
                back = self.gluings[t2][p[f]]
                if back != (t, PERM_INV[p]):
                    raise InvalidPairing(f"gluing at face ({t}, {f}) is not an involution")

    @property
    def n(self) -> int:
        return len(self.gluings)

    def partner(self, t: int, f: int) -> Gluing:
        return self.gluings[t][f]

    def face_pairs(self) -> list[tuple[int, int, int, int]]:
        """Each glued face pair once, as (t, f, t2, f2) with (t, f) < (t2, f2)."""
        out = []
        for t, row in enumerate(self.gluings):
            for f, (t2, p) in enumerate(row):
                if (t, f) < (t2, p[f]):
                    out.append((t, f, t2, p[f]))
        return out

    def is_connected(self) -> bool:
        seen = {0}
        stack = [0]
        while stack:
            t = stack.pop()
            for t2, _ in self.gluings[t]:
                if t2 not in seen:
                    seen.add(t2)
                    stack.append(t2)
        return len(seen) == self.n

    def is_orientable(self) -> bool:
        return orientation_signs(self) is not None

    @classmethod
    def from_list(cls, rows: Sequence[Sequence[tuple[int, Sequence[int]]]]) -> "Pairing":
        return cls(tuple(tuple((int(t), tuple(int(v) for v in p)) for t, p in row) for row in rows))  # type: ignore[misc]

    # text format ---------------------------------------------------------

    def to_text(self) -> str:
        """One line per tetrahedron with four ``t:k`` tokens.

        ``t`` is the target tetrahedron and ``k = 6 * g + s`` where ``g`` is the
        target face and ``s`` in 0..5 indexes the face bijection among the six
        maps of face ``f`` onto face ``g`` (lexicographic order of the images).
        The first line is a comment holding the isomorphism signature.
        """
        lines = [f"# signature: {canonical_signature(self)}"]
        for t, row in enumerate(self.gluings):
            toks = []
            for f, (t2, p) in enumerate(row):
                g = p[f]
                s = FACE_PERMS[f][g].index(p)
                toks.append(f"{t2}:{6 * g + s}")
            lines.append(" ".join(toks))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Pairing":
        rows = []
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            toks = line.split()
            if len(toks) != 4:
                raise InvalidPairing(f"expected four tokens per line, got {line!r}")
            row = []
            for f, tok in enumerate(toks):
                try:
                    t2_s, k_s = tok.split(":")
                    t2, k = int(t2_s), int(k_s)
                except ValueError as exc:
                    raise InvalidPairing(f"bad token {tok!r}") from exc
                if not 0 <= k < 24:
                    raise InvalidPairing(f"gluing code {k} outside 0..23")
                g, s = divmod(k, 6)
                row.append((t2, FACE_PERMS[f][g][s]))
            rows.append(tuple(row))
        return cls(tuple(rows))


def orientation_signs(p: Pairing) -> list[int] | None:
    """Per-tetrahedron orientation signs making every gluing reversing, or None."""
    signs: list[int | None] = [None] * p.n
    for start in range(p.n):
        if signs[start] is not None:
            continue
        signs[start] = 1
        stack = [start]
        while stack:
            t = stack.pop()
            for t2, perm in p.gluings[t]:
                want = -signs[t] * PERM_SIGN[perm]  # type: ignore[operator]
                if signs[t2] is None:
                    signs[t2] = want
                    stack.append(t2)
                elif signs[t2] != want:
                    return None
    return signs  # type: ignore[return-value]


def relabel(p: Pairing, tet_order: Sequence[int], vertex_maps: Sequence[Perm]) -> Pairing:
    """Isomorphic copy: old tet t becomes tet_order[t], old vertex v of t becomes vertex_maps[t][v]."""
    n = p.n
    rows: list[list[Gluing | None]] = [[None] * 4 for _ in range(n)]
    for t, row in enumerate(p.gluings):
        s = vertex_maps[t]
        for f, (t2, perm) in enumerate(row):
            new_perm = compose(vertex_maps[t2], compose(perm, PERM_INV[s]))
            rows[tet_order[t]][s[f]] = (tet_order[t2], new_perm)
    return Pairing(tuple(tuple(r) for r in rows))  # type: ignore[arg-type]


# ---------------------------------------------------------------------------
# isomorphism signature

_ALPHABET = "0123456789abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"


def _bfs_code(p: Pairing, start: int, sigma: Perm, best: list[int] | None) -> list[int] | None:
    n = p.n
    new_index = [-1] * n
    labels: list[Perm | None] = [None] * n
    order = [start]
    new_index[start] = 0
    labels[start] = sigma
    code: list[int] = []
    pos = 0
    smaller = best is None
    for i in range(n):
        if i >= len(order):
            raise InvalidPairing("pairing is disconnected")
        t = order[i]
        s = labels[t]
        s_inv = PERM_INV[s]  # type: ignore[index]
        for nf in range(4):
            f = s_inv[nf]
            t2, perm = p.gluings[t][f]
            if new_index[t2] < 0:
                new_index[t2] = len(order)
                order.append(t2)
                labels[t2] = compose(s, PERM_INV[perm])  # type: ignore[arg-type]
            new_perm = compose(labels[t2], compose(perm, s_inv))  # type: ignore[arg-type]
            for val in (new_index[t2], PERM_INDEX[new_perm]):
                if not smaller:
                    b = best[pos]  # type: ignore[index]
                    if val > b:
                        return None
                    if val < b:
                        smaller = True
                code.append(val)
                pos += 1
    return code if smaller else None


def canonical_code(p: Pairing) -> tuple[int, ...]:
    """Lexicographically least breadth-first encoding over all starts and labelings."""
    best: list[int] | None = None
    for start in range(p.n):
        for sigma in PERMS:
            code = _bfs_code(p, start, sigma, best)
            if code is not None:
                best = code
    assert best is not None
    return tuple(best)


def canonical_signature(p: Pairing) -> str:
    """Isomorphism signature: equal exactly for combinatorially isomorphic pairings."""
    if p.n >= len(_ALPHABET):
        raise UnsupportedSize("signatures support fewer than 62 tetrahedra")
    code = canonical_code(p)
    return _ALPHABET[p.n] + "".join(_ALPHABET[v] for v in code)


def pairing_from_signature(sig: str) -> Pairing:
    n = _ALPHABET.index(sig[0])
    vals = [_ALPHABET.index(ch) for ch in sig[1:]]
    if len(vals) != 8 * n:
        raise InvalidPairing(f"signature {sig!r} has wrong length")
    rows = []
    it = iter(vals)
    for _ in range(n):
        row = []
        for _ in range(4):
            t2 = next(it)
            row.append((t2, PERMS[next(it)]))
        rows.append(tuple(row))
    return Pairing(tuple(rows))


# ---------------------------------------------------------------------------
# edges and vertices

@dataclass(frozen=True)
class EdgeClass:
    """An edge of the triangulation: the cycle of tetrahedron edge slots around it.

    ``slots[i] = (t, a, b)`` lists the tetrahedron and the local endpoints in
    cycle order, so that vertex ``a`` of every slot lies at the same end of the
    edge (end 0) and ``b`` at the other (end 1).
    """

    id: int
    slots: tuple[tuple[int, int, int], ...]
    reversed: bool
    ends: tuple[int, int]

    @property
    def valence(self) -> int:
        return len(self.slots)


def _edge_orbit(gl, t: int, a: int, b: int, c: int):
    """Walk around edge ab of tet t starting through face c. Yields states; None on an open face."""
    state = (t, a, b, c)
    start = state
    out = []
    while True:
        t, a, b, c = state
        d = 6 - a - b - c
        out.append(state)
        g = gl[t][c]
        if g is None:
            return out, False
        t2, p = g
        state = (t2, p[a], p[b], p[d])
        if state == start:
            return out, True
        if len(out) > 48 * len(gl):
            raise InvalidPairing("edge walk did not close")


def vertex_classes(p: Pairing) -> list[list[tuple[int, int]]]:
    """Vertex classes as lists of corners (t, v), in order of first corner."""
    parent = {(t, v): (t, v) for t in range(p.n) for v in range(4)}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for t, row in enumerate(p.gluings):
        for f, (t2, perm) in enumerate(row):
            for v in range(4):
                if v != f:
                    ra, rb = find((t, v)), find((t2, perm[v]))
                    if ra != rb:
                        parent[max(ra, rb)] = min(ra, rb)
    groups: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for key in sorted(parent):
        groups.setdefault(find(key), []).append(key)
    return [groups[k] for k in sorted(groups)]


def vertex_class_index(p: Pairing) -> dict[tuple[int, int], int]:
    return {c: i for i, cls in enumerate(vertex_classes(p)) for c in cls}


def edge_classes(p: Pairing) -> list[EdgeClass]:
    """Orbits of tetrahedron edges under the face gluings."""
    from .tetshape import EDGES

    vidx = vertex_class_index(p)
    seen: set[tuple[int, int]] = set()
    out: list[EdgeClass] = []
    for t in range(p.n):
        for (a, b) in EDGES:
            if (t, min(a, b) * 4 + max(a, b)) in seen:
                continue
            c = min(v for v in range(4) if v not in (a, b))
            states, _ = _edge_orbit(p.gluings, t, a, b, c)
            slots = []
            rev = False
            local_seen: dict[tuple[int, int], tuple[int, int]] = {}
            for (tt, aa, bb, _) in states:
                key = (tt, min(aa, bb) * 4 + max(aa, bb))
                if key in local_seen:
                    if local_seen[key] != (aa, bb):
                        rev = True
                    continue
                local_seen[key] = (aa, bb)
                slots.append((tt, aa, bb))
            seen.update(local_seen)
            out.append(EdgeClass(len(out), tuple(slots), rev, (vidx[(t, a)], vidx[(t, b)])))
    return out


def is_manifold(p: Pairing) -> tuple[bool, str]:
    """Whether the pairing is an ideal triangulation of a manifold, with a diagnosis."""
    for e in edge_classes(p):
        if e.reversed:
            t, a, b = e.slots[0]
            return False, (
                f"edge class {e.id} (tet {t}, edge {a}{b}) is identified with itself reversed: "
                "its midpoint link is a projective plane"
            )
    for k, cls in enumerate(vertex_classes(p)):
        if _link_euler(p, k) > 2:
            return False, f"vertex class {k} link is not a closed surface"
    return True, "ok"


def _link_euler(p: Pairing, k: int, edges: list[EdgeClass] | None = None,
                vclasses: list[list[tuple[int, int]]] | None = None) -> int:
    edges = edge_classes(p) if edges is None else edges
    vclasses = vertex_classes(p) if vclasses is None else vclasses
    corners = len(vclasses[k])
    ends = sum((e.ends[0] == k) + (e.ends[1] == k) for e in edges)
    # V - E + F with E = 3F/2
    return ends - corners // 2 if corners % 2 == 0 else ends - corners / 2  # type: ignore[return-value]


def _link_orientable(p: Pairing, corners: list[tuple[int, int]]) -> bool:
    members = set(corners)
    sgn: dict[tuple[int, int], int] = {corners[0]: 1}
    stack = [corners[0]]
    while stack:
        t, v = stack.pop()
        for f in range(4):
            if f == v:
                continue
            t2, perm = p.gluings[t][f]
            nxt = (t2, perm[v])
            if nxt not in members:
                continue
            want = -sgn[(t, v)] * PERM_SIGN[perm]
            if nxt not in sgn:
                sgn[nxt] = want
                stack.append(nxt)
            elif sgn[nxt] != want:
                return False
    return True


@dataclass(frozen=True)
class BoundaryComponent:
    vertex_class: int
    euler: int
    orientable: bool

    @property
    def genus(self) -> int:
        return (2 - self.euler) // 2 if self.orientable else 2 - self.euler


@dataclass(frozen=True)
class BoundaryPattern:
    """Boundary surfaces: components of genus >= 2 (geodesic) plus toric links."""

    components: tuple[BoundaryComponent, ...]
    toric: int
    spheres: int = 0

    @property
    def genera(self) -> tuple[int, ...]:
        return tuple(sorted((c.genus for c in self.components), reverse=True))

    def describe(self) -> str:
        parts = [f"S{g}" for g in self.genera]
        if self.toric:
            parts.append(f"{self.toric}T")
        if self.spheres:
            parts.append(f"{self.spheres}S0")
        return "+".join(parts) if parts else "empty"


def boundary_pattern(p: Pairing, *, drill_edges: bool = False) -> BoundaryPattern:
    """Boundary surfaces of the truncated triangulation.

    With ``drill_edges`` the edges are removed as well and the result is the
    boundary of the handlebody Y(T): a single surface of genus n + 1.
    """
    if drill_edges:
        if not p.is_connected():
            raise InvalidPairing("drilled boundary needs a connected pairing")
        # Y(T) retracts onto the dual graph: n vertices, 2n edges
        euler_y = p.n - 2 * p.n
        comp = BoundaryComponent(-1, 2 * euler_y, p.is_orientable())
        return BoundaryPattern((comp,), 0)
    ok, why = is_manifold(p)
    if not ok:
        raise NonManifold(why)
    edges = edge_classes(p)
    vcls = vertex_classes(p)
    comps = []
    toric = spheres = 0
    for k, corners in enumerate(vcls):
        chi = _link_euler(p, k, edges, vcls)
        orient = _link_orientable(p, corners)
        if chi == 0 and orient:
            toric += 1
        elif chi == 2:
            spheres += 1
        else:
            comps.append(BoundaryComponent(k, int(chi), orient))
    return BoundaryPattern(tuple(comps), toric, spheres)


def toric_vertex_classes(p: Pairing) -> frozenset[int]:
    edges = edge_classes(p)
    vcls = vertex_classes(p)
    return frozenset(
        k for k, corners in enumerate(vcls)
        if _link_euler(p, k, edges, vcls) == 0 and _link_orientable(p, corners)
    )


def euler_characteristic(p: Pairing) -> int:
    """Euler characteristic of the compact manifold: edges - faces + tetrahedra."""
    return len(edge_classes(p)) - 2 * p.n + p.n


# ---------------------------------------------------------------------------
# relative handlebodies


@dataclass(frozen=True)
class YDescription:
    """The relative handlebody Y(T) = (H, loops) built from a pairing."""

    signature: str
    genus: int
    loops: int
    complexity: int
    volume: float
    valences: tuple[int, ...]
    orientable: bool


def build_relative_handlebody(p: Pairing) -> YDescription:
    from .specfun import lobachevsky

    edges = edge_classes(p)
    return YDescription(
        signature=canonical_signature(p),
        genus=p.n + 1,
        loops=len(edges),
        complexity=10 * p.n,
        volume=p.n * 8.0 * lobachevsky(math.pi / 4),
        valences=tuple(sorted(e.valence for e in edges)),
        orientable=p.is_orientable(),
    )


def min_exceptional_valence_check(p: Pairing) -> bool:
    """True when every edge has valence at least 7."""
    return min(e.valence for e in edge_classes(p)) >= 7


# ---------------------------------------------------------------------------
# enumeration


@dataclass(frozen=True)
class FilterSet:
    """Which pairings ``enumerate_pairings`` keeps.

    ``min_valence=3`` drops edges of valence 1 and 2; ``max_edges`` bounds the
    number of edge classes (``n - 1`` forces negative Euler characteristic).
    """

    orientable: bool = True
    min_valence: int = 3
    manifold: bool = True
    max_edges: int | None = None
    max_n: int = 3

    @classmethod
    def none(cls, max_n: int = 3) -> "FilterSet":
        return cls(orientable=False, min_valence=1, manifold=False, max_n=max_n)


def _closed_valences(gl, t: int, f: int) -> Iterator[int]:
    face = [v for v in range(4) if v != f]
    for a, b in ((face[0], face[1]), (face[0], face[2]), (face[1], face[2])):
        c = 6 - a - b - f
        states, closed = _edge_orbit(gl, t, a, b, c)
        if closed:
            yield len({(s[0], min(s[1], s[2]), max(s[1], s[2])) for s in states})


def _extend(gl, used: int, n: int, flt: FilterSet, depth: int, partition) -> Iterator[tuple]:
    idx = next((i for i in range(4 * used) if gl[i // 4][i % 4] is None), None)
    if idx is None:
        if used == n:
            yield tuple(tuple(row) for row in gl)
        return
    t, f = divmod(idx, 4)
    choice = 0
    options: list[tuple[int, int, Perm]] = []
    for idx2 in range(idx + 1, 4 * used):
        t2, f2 = divmod(idx2, 4)
        if gl[t2][f2] is not None:
            continue
        for perm in FACE_PERMS[f][f2]:
            if flt.orientable and PERM_SIGN[perm] > 0:
                continue
            options.append((t2, f2, perm))
    if used < n:
        options.append((used, f, _NEW_TET_PERM[f]))
    for t2, f2, perm in options:
        if depth == 0 and partition is not None and choice % partition[1] != partition[0]:
            choice += 1
            continue
        choice += 1
        gl[t][f] = (t2, perm)
        gl[t2][f2] = (t, PERM_INV[perm])
        new_used = used + 1 if t2 == used else used
        if all(v >= flt.min_valence for v in _closed_valences(gl, t, f)):
            yield from _extend(gl, new_used, n, flt, depth + 1, partition)
        gl[t][f] = None
        gl[t2][f2] = None


def enumerate_pairings(
    n: int,
    filters: FilterSet = FilterSet(),
    *,
    partition: tuple[int, int] | None = None,
) -> Iterator[Pairing]:
    """Connected pairings of n tetrahedra, one per isomorphism class.

    The tree attaches faces in order, gluing the first free face either to a
    free face of a tetrahedron already in use or to a new tetrahedron labelled
    canonically; branches with a closed edge of valence below
    ``filters.min_valence`` are cut. ``partition=(k, K)`` restricts to the
    k-th of K interleaved slices of the first branching level; pooling the
    slices reproduces the full enumeration, though a class may surface in
    more than one slice.
    """
    if n < 1:
        raise UnsupportedSize("need at least one tetrahedron")
    if n > filters.max_n:
        raise UnsupportedSize(f"n={n} exceeds the configured maximum {filters.max_n}")
    gl: list[list[Gluing | None]] = [[None] * 4 for _ in range(n)]
    seen: set[str] = set()
    for rows in _extend(gl, 1, n, filters, 0, partition):
        p = Pairing(rows)
        if filters.manifold and not is_manifold(p)[0]:
            continue
        if filters.max_edges is not None and len(edge_classes(p)) > filters.max_edges:
            continue
        sig = canonical_signature(p)
        if sig in seen:
            continue
        seen.add(sig)
        yield p


def brute_force_pairings(n: int, orientable: bool = False) -> Iterator[Pairing]:
    """Every connected labelled pairing of n tetrahedra (exponential; oracle use only)."""
    faces = [(t, f) for t in range(n) for f in range(4)]

    def matchings(rest):
        if not rest:
            yield []
            return
        first = rest[0]
        for i in range(1, len(rest)):
            for m in matchings(rest[1:i] + rest[i + 1:]):
                yield [(first, rest[i])] + m

    for m in matchings(faces):
        choices = []
        for (t, f), (t2, f2) in m:
            perms = [q for q in FACE_PERMS[f][f2] if not (orientable and PERM_SIGN[q] > 0)]
            choices.append(perms)
        for combo in itertools.product(*choices):
            rows: list[list[Gluing | None]] = [[None] * 4 for _ in range(n)]
            for ((t, f), (t2, f2)), perm in zip(m, combo):
                rows[t][f] = (t2, perm)
                rows[t2][f2] = (t, PERM_INV[perm])
            p = Pairing(tuple(tuple(r) for r in rows))  # type: ignore[arg-type]
            if p.is_connected():
                yield p


# ---------------------------------------------------------------------------
# local retriangulation


@dataclass(frozen=True)
class Retriangulation:
    """Result of a local move.

    ``kept`` maps surviving old tetrahedra to their new index; ``new_tets``
    lists the new tetrahedra (appended after the kept ones) as tuples of
    symbols naming their vertices; ``symbols`` gives the symbol of every
    vertex of the removed tetrahedra.
    """

    pairing: Pairing
    kept: dict[int, int]
    new_tets: tuple[tuple[str, str, str, str], ...]
    symbols: dict[int, dict[int, str]] = field(default_factory=dict)

    @property
    def first_new(self) -> int:
        return len(self.kept)


def _retriangulate(p: Pairing, cluster: dict[int, dict[int, str]],
                   new_tets: Sequence[tuple[str, str, str, str]]) -> Retriangulation:
    kept = {t: i for i, t in enumerate(t for t in range(p.n) if t not in cluster)}
    base = len(kept)
    new_sym = [dict((s, v) for v, s in enumerate(nt)) for nt in new_tets]
    # new face (symbol triple) -> (new tet, local face)
    new_faces: dict[frozenset[str], list[tuple[int, int]]] = {}
    for i, nt in enumerate(new_tets):
        for f in range(4):
            key = frozenset(s for v, s in enumerate(nt) if v != f)
            new_faces.setdefault(key, []).append((i, f))
    old_faces: dict[frozenset[str], tuple[int, int]] = {}
    for t, sym in cluster.items():
        for f in range(4):
            key = frozenset(sym[v] for v in range(4) if v != f)
            if key in old_faces and key not in new_faces:
                pass  # internal face of the old cluster
            old_faces.setdefault(key, (t, f))

    def locate(t: int, f: int) -> tuple[int, int]:
        key = frozenset(cluster[t][v] for v in range(4) if v != f)
        hits = new_faces.get(key, [])
        if len(hits) != 1:
            raise InvalidPairing("retriangulation does not match the cluster boundary")
        return hits[0]

    total = base + len(new_tets)
    rows: list[list[Gluing | None]] = [[None] * 4 for _ in range(total)]
    for t, i in kept.items():
        for f, (t2, perm) in enumerate(p.gluings[t]):
            if t2 in kept:
                rows[i][f] = (kept[t2], perm)
            else:
                j, g = locate(t2, perm[f])
                # t local -> t2 local -> symbol -> new tet local
                m = tuple(new_sym[j][cluster[t2][perm[v]]] if v != f else g for v in range(4))
                rows[i][f] = (base + j, m)  # type: ignore[assignment]
    for i, nt in enumerate(new_tets):
        for f in range(4):
            key = frozenset(s for v, s in enumerate(nt) if v != f)
            hits = new_faces[key]
            if len(hits) == 2:
                j, g = hits[0] if hits[1] == (i, f) else hits[1]
                m = tuple(new_sym[j][nt[v]] if v != f else g for v in range(4))
                rows[base + i][f] = (base + j, m)  # type: ignore[assignment]
                continue
            t, of = old_faces[key]
            inv = {s: v for v, s in cluster[t].items()}
            t2, perm = p.gluings[t][of]
            to_old = {v: inv[nt[v]] for v in range(4) if v != f}
            if t2 in kept:
                m = tuple(perm[to_old[v]] if v != f else perm[of] for v in range(4))
                rows[base + i][f] = (kept[t2], m)  # type: ignore[assignment]
            else:
                j, g = locate(t2, perm[of])
                m = tuple(new_sym[j][cluster[t2][perm[to_old[v]]]] if v != f else g for v in range(4))
                rows[base + i][f] = (base + j, m)  # type: ignore[assignment]
    pairing = Pairing(tuple(tuple(r) for r in rows))  # type: ignore[arg-type]
    return Retriangulation(pairing, kept, tuple(new_tets), cluster)


def two_three_move(p: Pairing, t: int, f: int) -> Retriangulation:
    """Replace the two tetrahedra meeting at face (t, f) by three around a new edge.

    Symbols: ``a, b, c`` for the face vertices, ``d`` and ``e`` for the apices
    of ``t`` and of its neighbour.
    """
    t2, perm = p.gluings[t][f]
    if t2 == t:
        raise InvalidPairing("2-3 move needs two distinct tetrahedra")
    face = [v for v in range(4) if v != f]
    names = dict(zip(face, "abc"))
    names[f] = "d"
    sym2 = {perm[v]: names[v] for v in face}
    sym2[perm[f]] = "e"
    new = (("a", "b", "d", "e"), ("b", "c", "d", "e"), ("c", "a", "d", "e"))
    return _retriangulate(p, {t: names, t2: sym2}, new)


def three_two_move(p: Pairing, edge: EdgeClass) -> Retriangulation:
    """Replace the three tetrahedra around a valence-3 edge by two."""
    if edge.valence != 3 or edge.reversed:
        raise InvalidPairing("3-2 move needs an edge of valence 3")
    tets = [s[0] for s in edge.slots]
    if len(set(tets)) != 3:
        raise InvalidPairing("3-2 move needs three distinct tetrahedra")
    t0, u, w = edge.slots[0]
    c0 = min(v for v in range(4) if v not in (u, w))
    states, closed = _edge_orbit(p.gluings, t0, u, w, c0)
    assert closed and len(states) == 3
    cluster: dict[int, dict[int, str]] = {}
    labels = ["X0", "X1", "X2"]
    for i, (t, a, b, c) in enumerate(states):
        d = 6 - a - b - c
        # exit face c is shared with the next tetrahedron and contains d
        cluster[t] = {a: "d", b: "e", c: labels[i], d: labels[(i + 1) % 3]}
    # consistency: the face walked into from the previous tetrahedron must agree
    for i, (t, a, b, c) in enumerate(states):
        tn, perm = p.gluings[t][c]
        for v in range(4):
            if v != c and cluster[tn][perm[v]] != cluster[t][v]:
                raise InvalidPairing("valence-3 edge neighbourhood is not an embedded ball")
    new = (("X0", "X1", "X2", "d"), ("X0", "X1", "X2", "e"))
    return _retriangulate(p, cluster, new)
