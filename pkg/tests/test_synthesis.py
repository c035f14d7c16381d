import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from leadform import (
    GainSet,
    PoleSpec,
    assign_diagonal,
    build_closed_loop,
    build_graph,
    char_poly_matchings,
    solve_betas,
    spectrum,
    synthesize,
    verify_formation,
)
from leadform.errors import (
    IncompleteGains,
    PinnedInconsistent,
    PoleCountMismatch,
    PolicyMismatch,
    RowUnsolvable,
    StructuralViolation,
    ZeroFollowerPole,
)
from leadform.spectral import match_multisets

from conftest import CYCLIC_EDGES, FOUR_F, FOUR_MATRIX, random_rooted_dag, random_tree

FIVE_F = [-3, 2, -2, -1, 1]
FIVE_POLES = [-3, -3.5, -4, -5]


def chain4():
    return build_graph(4, 4, [(4, 3), (3, 2), (2, 1)])


def test_polespec_rejects_zero():
    with pytest.raises(ZeroFollowerPole):
        PoleSpec((-1.0, 0.0))


def test_polespec_warns_unstable():
    with pytest.warns(RuntimeWarning):
        PoleSpec((1.0, -2.0))


def test_assign_diagonal_five_agent(five_agent):
    gs = assign_diagonal(five_agent, FIVE_POLES)
    assert [gs.diag[i] for i in range(1, 6)] == [-3, -3.5, -4, -5, 0]
    assert gs.alphas == {1: 3, 2: 3.5, 3: 4, 4: 5, 5: 0}


def test_assign_diagonal_sorts_descending(five_agent):
    gs = assign_diagonal(five_agent, [-5, -3, -4, -3.5])
    assert [gs.diag[i] for i in range(1, 5)] == [-3, -3.5, -4, -5]


def test_assign_diagonal_override(five_agent):
    gs = assign_diagonal(five_agent, FIVE_POLES, {1: -5, 2: -4, 3: -3.5, 4: -3})
    assert [gs.diag[i] for i in range(1, 6)] == [-5, -4, -3.5, -3, 0]
    with pytest.raises(PoleCountMismatch):
        assign_diagonal(five_agent, FIVE_POLES, {1: -5, 2: -4, 3: -3.5, 4: -1})


def test_assign_diagonal_pair():
    gs = assign_diagonal(build_graph(2, 2, [(2, 1)]), [-1])
    assert gs.diag == {1: -1, 2: 0}


def test_assign_diagonal_errors(five_agent, cyclic_graph):
    with pytest.raises(StructuralViolation):
        assign_diagonal(cyclic_graph, [-4, -5])
    with pytest.raises(StructuralViolation):
        assign_diagonal(build_graph(3, 3, [(3, 1)]), [-1, -2])
    with pytest.raises(PoleCountMismatch):
        assign_diagonal(five_agent, [-1, -2])
    with pytest.raises(ZeroFollowerPole):
        assign_diagonal(five_agent, [-1, -2, 0, -3])


def test_solve_betas_chain_closed_form():
    g = chain4()
    gs = solve_betas(g, assign_diagonal(g, [-2, -3, -4], {1: -2, 2: -3, 3: -4}), [1, 2, 4, 8], "tree-unique")
    assert gs.betas == {(1, 2): 1.0, (2, 3): 1.5, (3, 4): 2.0}
    assert np.array_equal(build_closed_loop(g, gs) @ [1, 2, 4, 8], np.zeros(4))


def test_solve_betas_consensus_tree():
    g = chain4()
    diag = assign_diagonal(g, [-2, -3, -4])
    gs = solve_betas(g, diag, np.ones(4), "tree-unique")
    for (i, j), b in gs.betas.items():
        assert b == -diag.diag[i]


def test_solve_betas_five_agent_min_norm(five_agent):
    gs = solve_betas(five_agent, assign_diagonal(five_agent, FIVE_POLES), FIVE_F)
    assert gs.betas[(1, 3)] == pytest.approx(3.6, abs=1e-12)
    assert gs.betas[(1, 4)] == pytest.approx(1.8, abs=1e-12)
    assert gs.betas[(2, 5)] == pytest.approx(7.0, abs=1e-12)
    assert 2 * gs.betas[(1, 3)] + gs.betas[(1, 4)] == pytest.approx(9.0)
    # leader takes no feedback
    assert not any(i == 5 for i, _ in gs.betas)


def test_solve_betas_pinned(five_agent):
    gs = solve_betas(five_agent, assign_diagonal(five_agent, FIVE_POLES), FIVE_F, "pinned", {(1, 3): 4.0})
    assert gs.betas[(1, 3)] == 4.0
    assert gs.betas[(1, 4)] == pytest.approx(1.0)


def test_solve_betas_pinned_errors(five_agent):
    diag = assign_diagonal(five_agent, FIVE_POLES)
    with pytest.raises(PinnedInconsistent):
        solve_betas(five_agent, diag, FIVE_F, "pinned", {(1, 2): 1.0})  # not an edge
    with pytest.raises(PinnedInconsistent):
        solve_betas(five_agent, diag, FIVE_F, "pinned", {(2, 5): 1.0})  # row fully pinned, wrong value
    gs = solve_betas(five_agent, diag, FIVE_F, "pinned", {(2, 5): 7.0})
    assert gs.betas[(2, 5)] == 7.0


def test_solve_betas_policy_mismatch(five_agent):
    with pytest.raises(PolicyMismatch):
        solve_betas(five_agent, assign_diagonal(five_agent, FIVE_POLES), FIVE_F, "tree-unique")


def test_solve_betas_zero_targets():
    g = chain4()
    diag = assign_diagonal(g, [-2, -3, -4])
    with pytest.raises(RowUnsolvable):
        solve_betas(g, diag, [1, 0, 4, 8], "tree-unique")
    # min-norm: agent 1 only hears agent 2 whose target is 0
    with pytest.raises(RowUnsolvable):
        solve_betas(g, diag, [1, 0, 4, 8], "min-norm")


def test_min_norm_survives_one_zero_neighbour(five_agent):
    # agent 1 hears agents 3 and 4; zero target on 3 is fine
    F = [-3, 2, 0, -1, 1]
    gs = solve_betas(five_agent, assign_diagonal(five_agent, FIVE_POLES), F, "min-norm")
    assert gs.betas[(1, 3)] == 0.0
    assert np.max(np.abs(build_closed_loop(five_agent, gs) @ F)) < 1e-12


def test_build_closed_loop_pair():
    g = build_graph(2, 2, [(2, 1)])
    A = build_closed_loop(g, GainSet(2, 2, {1: -1.0, 2: 0.0}, {(1, 2): 1.0}))
    assert np.array_equal(A, [[-1, 1], [0, 0]])


def test_build_closed_loop_incomplete(five_agent):
    with pytest.raises(IncompleteGains):
        build_closed_loop(five_agent, assign_diagonal(five_agent, FIVE_POLES))


def test_build_closed_loop_four_agent():
    g = build_graph(4, 4, [(2, 1), (4, 1), (3, 2), (1, 3), (4, 3)])
    gs = GainSet(4, 4, {1: -3, 2: -4, 3: -4, 4: 0}, {(1, 2): 1, (1, 4): 7, (2, 3): 2, (3, 1): -3, (3, 4): -2})
    A = build_closed_loop(g, gs)
    assert np.array_equal(A, FOUR_MATRIX)
    assert not A[3].any()


def test_build_closed_loop_cyclic3b(cyclic_graph):
    gs = GainSet(3, 3, {1: -5, 2: -4, 3: 0}, {(1, 2): 5, (2, 1): 0, (2, 3): 4})
    A = build_closed_loop(cyclic_graph, gs)
    assert np.allclose(np.tril(A, -1), 0)
    assert np.allclose(spectrum(A), [-5, -4, 0])


def test_verify_four_agent():
    rep = verify_formation(FOUR_MATRIX, FOUR_F, [-5.5377, -2.7312 + 1.5140j, -2.7312 - 1.5140j], tol=1e-3)
    assert rep.kernel_residual == 0
    assert rep.spectrum_matches


def test_verify_cyclic3a():
    A = np.array([[-3, 3, 0], [-2 / 3, -6, 20 / 3], [0, 0, 0]])
    rep = verify_formation(A, np.ones(3), [-4, -5])
    assert rep.kernel_ok and rep.spectrum_matches


def test_verify_zero_matrix():
    rep = verify_formation(np.zeros((3, 3)), [1, 2, 3])
    assert rep.kernel_ok and np.allclose(rep.spectrum, 0) and rep.spectrum_matches is None


def test_verify_reports_failures():
    rep = verify_formation(np.diag([-1.0, 0]), [1, 1], [-2])
    assert not rep.kernel_ok and not rep.spectrum_matches and not rep.ok


def _random_case(seed, n, tree=False):
    rng = np.random.default_rng(seed)
    edges = random_tree(rng, n) if tree else random_rooted_dag(rng, n)
    g = build_graph(n, n, edges)
    lam = list(-rng.uniform(0.5, 8, n - 1))
    F = rng.choice([-1, 1], n) * rng.uniform(0.5, 5, n)
    return g, lam, F


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 8), st.integers(0, 2**32 - 1))
def test_spectrum_is_requested_poles(n, seed):
    g, lam, F = _random_case(seed, n)
    gs, A = synthesize(g, lam, F)
    # oracle: roots of the matching-expansion polynomial
    roots = np.roots(char_poly_matchings(A))
    _, err = match_multisets(roots, lam + [0.0])
    assert err < 1e-6
    rep = verify_formation(A, F, lam)
    assert rep.spectrum_matches and rep.kernel_ok


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 8), st.integers(0, 2**32 - 1))
def test_row_equations_hold(n, seed):
    g, lam, F = _random_case(seed, n)
    gs = solve_betas(g, assign_diagonal(g, lam), F)
    for i in g.followers:
        terms = [gs.diag[i] * F[i - 1]] + [b * F[j - 1] for j, b in gs.row(i).items()]
        assert abs(sum(terms)) <= 1e-9 * max(abs(t) for t in terms)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 8), st.integers(0, 2**32 - 1), st.floats(-10, 10).filter(lambda c: abs(c) > 1e-3))
def test_tree_unique_properties(n, seed, c):
    g, lam, F = _random_case(seed, n, tree=True)
    diag = assign_diagonal(g, lam)
    tree = solve_betas(g, diag, F, "tree-unique")
    assert tree.betas == solve_betas(g, diag, F, "min-norm").betas
    scaled = solve_betas(g, diag, c * F, "tree-unique")
    for k, b in tree.betas.items():
        assert scaled.betas[k] == pytest.approx(b, rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 8), st.integers(0, 2**32 - 1))
def test_separation(n, seed):
    g, lam, F = _random_case(seed, n)
    rng = np.random.default_rng(seed + 1)
    gs, A = synthesize(g, lam, F)
    # perturb betas on their support: spectrum unchanged, kernel broken
    pert = gs.copy()
    pert.betas = {k: b + rng.standard_normal() for k, b in gs.betas.items()}
    _, err = match_multisets(spectrum(build_closed_loop(g, pert)), lam + [0.0])
    assert err < 1e-9
    # move the poles: re-solving betas restores A F = 0
    lam2 = [x - 1.0 for x in lam]
    moved = solve_betas(g, assign_diagonal(g, lam2), F)
    rep = verify_formation(build_closed_loop(g, moved), F, lam2)
    assert rep.kernel_ok and rep.spectrum_matches
