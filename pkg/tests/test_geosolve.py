import math
import random

import numpy as np
import pytest

from hypcensus import tricomb as tc
from hypcensus.errors import AnsatzInapplicable, InconsistentMarks, NonManifold
from hypcensus.geosolve import (
    CuspMarks,
    GeometricSolution,
    NoSolutionEvidence,
    SolverConfig,
    build_equations,
    solve,
    solve_mgk_ansatz,
    solve_pairing,
)
from hypcensus.tetshape import EDGE_INDEX

from helpers import M21_SIGNATURE, M22_SIGNATURE, V_OCTAHEDRON

# three tetrahedra around one edge of valence 18, boundary of genus 3
M30_SIGNATURE = "3090i10132004002k102a1f2d"
# one tetrahedron with edges of valence 4 and 2
VALENCE_TWO_SIGNATURE = "1090i090i"


def check_consistency(sol: GeometricSolution):
    for e in tc.edge_classes(sol.pairing):
        total = math.fsum(sol.slot_angle(t, a, b) for t, a, b in e.slots)
        assert abs(total - 2 * math.pi) < 1e-10
        lengths = [sol.edge_lengths[t][EDGE_INDEX[(a, b)]] for t, a, b in e.slots]
        if all(math.isfinite(x) for x in lengths):
            assert max(lengths) - min(lengths) < 1e-9


def test_genus_two_system_is_square(genus_two_pairings):
    system = build_equations(genus_two_pairings[0])
    assert system.n_unknowns == 12
    assert system.n_equations == 12


def test_genus_two_solutions(genus_two_pairings):
    for p in genus_two_pairings:
        sol = solve_pairing(p)
        assert isinstance(sol, GeometricSolution)
        assert sol.residual_norm < 1e-10
        assert sol.volume == pytest.approx(6.451990, abs=5e-6)
        for ang in sol.angles:
            assert np.allclose(ang, math.pi / 6, atol=1e-10)
        check_consistency(sol)


def test_valence_regular_solution_is_regular():
    p = tc.pairing_from_signature(M30_SIGNATURE)
    assert {e.valence for e in tc.edge_classes(p)} == {18}
    sol = solve_pairing(p)
    for ang in sol.angles:
        assert np.allclose(ang, 2 * math.pi / 18, atol=1e-10)
    assert sol.volume == pytest.approx(10.428602, abs=5e-6)


def test_valence_two_edge_leaves_domain():
    p = tc.pairing_from_signature(VALENCE_TWO_SIGNATURE)
    assert 2 in [e.valence for e in tc.edge_classes(p)]
    res = solve_pairing(p)
    assert isinstance(res, NoSolutionEvidence)
    assert not res
    assert res.reason == "left-domain"


def test_max_iterations_evidence(genus_two_pairings):
    res = solve(build_equations(genus_two_pairings[0]), SolverConfig(max_iter=1, seed=1, jitter=0.2))
    assert isinstance(res, NoSolutionEvidence)
    assert res.reason == "max-iterations"


def test_jacobian_matches_finite_differences(genus_two_pairings):
    rng = np.random.default_rng(2)
    h = 1e-6
    for p in genus_two_pairings[:4] + [tc.pairing_from_signature(M30_SIGNATURE)]:
        system = build_equations(p)
        x = system.initial_guess(rng, 0.1)
        assert system.in_domain(x)
        _, J = system.residual_and_jacobian(x)
        for k in range(system.n_unknowns):
            up, dn = x.copy(), x.copy()
            up[k] += h
            dn[k] -= h
            col = (system.residual_and_jacobian(up)[0] - system.residual_and_jacobian(dn)[0]) / (2 * h)
            np.testing.assert_allclose(J[:, k], col, rtol=1e-5, atol=1e-8)


def test_jacobian_with_ideal_corner_rows():
    p = tc.pairing_from_signature(M21_SIGNATURE)
    marks = CuspMarks(tc.toric_vertex_classes(p))
    system = build_equations(p, marks)
    assert system.ideal_rows
    x = solve_mgk_ansatz(p).angles
    full = np.concatenate([np.asarray(a) for a in x])[system.free_slots]
    x0 = full * 0.97
    _, J = system.residual_and_jacobian(x0)
    h = 1e-6
    for k in range(system.n_unknowns):
        up, dn = x0.copy(), x0.copy()
        up[k] += h
        dn[k] -= h
        col = (system.residual_and_jacobian(up)[0] - system.residual_and_jacobian(dn)[0]) / (2 * h)
        np.testing.assert_allclose(J[:, k], col, rtol=1e-5, atol=1e-8)


def test_random_starts_reach_the_same_structure(genus_two_pairings):
    system = build_equations(genus_two_pairings[2])
    reference = None
    converged = 0
    for seed in range(20):
        res = solve(system, SolverConfig(seed=seed, jitter=0.15))
        if not res:
            continue
        converged += 1
        flat = np.concatenate([np.asarray(a) for a in res.angles])
        if reference is None:
            reference = flat
        assert np.max(np.abs(flat - reference)) < 1e-8
    assert converged >= 10


def test_volume_invariant_under_relabeling():
    rng = random.Random(4)
    p = tc.pairing_from_signature(M30_SIGNATURE)
    ref = solve_pairing(p).volume
    for _ in range(5):
        order = list(range(p.n))
        rng.shuffle(order)
        q = tc.relabel(p, order, [rng.choice(tc.PERMS) for _ in range(p.n)])
        assert abs(solve_pairing(q).volume - ref) < 1e-9


def test_ideal_marks_drop_length_equations():
    p = tc.pairing_from_signature(M21_SIGNATURE)
    plain = build_equations(p)
    marked = build_equations(p, CuspMarks(tc.toric_vertex_classes(p)))
    assert len(marked.length_rows) < len(plain.length_rows)
    # the cusp torus is two triangles, one corner in each of two tetrahedra
    assert len(marked.ideal_rows) == 2


def test_all_zero_marks_give_octahedra():
    for sig in ("1090i0d0a", "106060304"):
        p = tc.pairing_from_signature(sig)
        system = build_equations(p, CuspMarks.all_zero(p))
        assert system.n_unknowns == 0 and system.n_equations == 0
        sol = solve(system)
        assert sol.method == "trivial"
        assert sol.volume == pytest.approx(V_OCTAHEDRON, abs=1e-5)


def test_marks_validation():
    p = tc.pairing_from_signature(M21_SIGNATURE)
    with pytest.raises(InconsistentMarks):
        build_equations(p, CuspMarks(frozenset({99})))
    with pytest.raises(InconsistentMarks):
        build_equations(p, CuspMarks(zero_edges=frozenset({99})))
    cusp = next(iter(tc.toric_vertex_classes(p)))
    edge = next(e.id for e in tc.edge_classes(p) if cusp in e.ends)
    with pytest.raises(InconsistentMarks):
        build_equations(p, CuspMarks(frozenset({cusp}), frozenset({edge})))


def test_non_manifold_rejected():
    with pytest.raises(NonManifold):
        build_equations(tc.pairing_from_signature("106060304"))


@pytest.mark.parametrize(
    "sig, volume",
    [(M21_SIGNATURE, 7.797637), (M30_SIGNATURE, 10.428602), (M22_SIGNATURE, 9.134475)],
)
def test_ansatz_volumes(sig, volume):
    sol = solve_mgk_ansatz(tc.pairing_from_signature(sig))
    assert sol.volume == pytest.approx(volume, abs=5e-6)
    assert sol.method == "ansatz"
    for e in tc.edge_classes(sol.pairing):
        total = math.fsum(sol.slot_angle(t, a, b) for t, a, b in e.slots)
        assert abs(total - 2 * math.pi) < 1e-10


def test_ansatz_cusped_tetrahedra_shape():
    sol = solve_mgk_ansatz(tc.pairing_from_signature(M21_SIGNATURE))
    thirds = [sum(abs(a - math.pi / 3) < 1e-12 for a in ang) for ang in sol.angles]
    assert sorted(thirds) == [0, 3, 3]


def test_ansatz_rejects_two_cusps_in_one_tetrahedron():
    p = tc.pairing_from_signature(M22_SIGNATURE)
    every = CuspMarks(frozenset(range(len(tc.vertex_classes(p)))))
    with pytest.raises(AnsatzInapplicable):
        solve_mgk_ansatz(p, every)
    with pytest.raises(AnsatzInapplicable):
        solve_mgk_ansatz(p, CuspMarks(zero_edges=frozenset({0})))
