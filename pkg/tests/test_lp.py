import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from avsrd.lp import IterationLimit, L1Projector, LinearProgram, l1_distance_to_set, solve
from avsrd.avs import hull_set


def _scipy(lp):
    A_ub, b_ub, A_eq, b_eq = [], [], [], []
    for row, s, rhs in zip(lp.A, lp.senses, lp.b):
        if s == "<=":
            A_ub.append(row), b_ub.append(rhs)
        elif s == ">=":
            A_ub.append(-row), b_ub.append(-rhs)
        else:
            A_eq.append(row), b_eq.append(rhs)
    sign = -1.0 if lp.maximize else 1.0
    bounds = [(lo, None if np.isinf(hi) else hi) for lo, hi in zip(lp.lb, lp.ub)]
    res = linprog(
        sign * lp.c,
        A_ub=np.array(A_ub) if A_ub else None,
        b_ub=b_ub or None,
        A_eq=np.array(A_eq) if A_eq else None,
        b_eq=b_eq or None,
        bounds=bounds,
        method="highs",
    )
    return res


def test_textbook_max():
    # max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18  ->  36 at (2, 6)
    lp = LinearProgram([3, 5], [[1, 0], [0, 2], [3, 2]], ["<="] * 3, [4, 12, 18], maximize=True)
    sol = solve(lp)
    assert sol.optimal
    assert sol.value == pytest.approx(36.0)
    np.testing.assert_allclose(sol.x, [2.0, 6.0], atol=1e-9)


def test_equality_and_ge_rows():
    lp = LinearProgram([1, 1, 1], [[1, 1, 0], [0, 1, 1], [1, 1, 1]], [">=", ">=", "="], [0.3, 0.6, 1.0])
    sol = solve(lp)
    assert sol.optimal and sol.value == pytest.approx(1.0)


def test_infeasible_and_unbounded():
    assert solve(LinearProgram([1, 1], [[1, 1]], ["<="], [-1.0])).status == "infeasible"
    assert solve(LinearProgram([1, 0], [[1, -1]], ["<="], [1.0], maximize=True)).status == "unbounded"


def test_bounds_only_problem():
    sol = solve(LinearProgram([1.0, -1.0], np.zeros((0, 2)), [], [], lb=[0, 0], ub=[1, 2]))
    assert sol.optimal and sol.value == pytest.approx(-2.0)


def test_free_and_shifted_bounds():
    lp = LinearProgram([1.0, 2.0], [[1, 1]], [">="], [1.0], lb=[-np.inf, -1.0], ub=[np.inf, 3.0])
    sol = solve(lp)
    ref = _scipy(lp)
    assert sol.value == pytest.approx(ref.fun, abs=1e-9)


def test_degenerate_problem_terminates():
    # Klee-Minty-like degenerate corner; Bland's rule fallback must terminate
    lp = LinearProgram(
        [-0.75, 150, -0.02, 6],
        [[0.25, -60, -0.04, 9], [0.5, -90, -0.02, 3], [0, 0, 1, 0]],
        ["<="] * 3,
        [0, 0, 1],
    )
    sol = solve(lp)
    assert sol.optimal and sol.value == pytest.approx(-0.05, abs=1e-9)


def test_bad_input():
    with pytest.raises(ValueError):
        LinearProgram([1], [[1]], ["<"], [1])
    with pytest.raises(ValueError):
        LinearProgram([1], [[np.inf]], ["<="], [1])
    with pytest.raises(ValueError):
        LinearProgram([1], [[1]], ["<="], [1], lb=[2], ub=[1])


def test_iteration_limit_raises():
    rng = np.random.default_rng(0)
    A = rng.random((6, 6))
    lp = LinearProgram(rng.random(6), A, ["<="] * 6, np.ones(6), maximize=True)
    with pytest.raises(IterationLimit):
        solve(lp, max_iter=1)


@settings(max_examples=80)
@given(st.integers(1, 6), st.integers(1, 5), st.integers(0, 2**32 - 1), st.booleans())
def test_random_lps_match_highs(n, m, seed, maximize):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(m, n))
    senses = list(rng.choice(["<=", ">=", "="], size=m))
    x0 = rng.random(n)
    b = A @ x0 + np.where(np.array(senses) == "<=", 0.5, np.where(np.array(senses) == ">=", -0.5, 0.0))
    c = rng.normal(size=n)
    lp = LinearProgram(c, A, senses, b, ub=np.full(n, 3.0), maximize=maximize)
    sol = solve(lp)
    ref = _scipy(lp)
    assert ref.status == 0 and sol.optimal
    sign = -1.0 if maximize else 1.0
    assert sol.value == pytest.approx(sign * ref.fun, abs=1e-7)
    assert sol.max_violation <= 1e-7


def _brute_l1_to_segment(q, a, b, steps=20001):
    t = np.linspace(0.0, 1.0, steps)[:, None]
    return np.abs(a + t * (b - a) - q).sum(axis=1).min()


@settings(max_examples=40)
@given(st.integers(0, 2**32 - 1))
def test_l1_projection_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    a, b, q = rng.dirichlet(np.ones(3), size=3)
    S = hull_set(np.vstack([a, b]))
    dist, proj = S.project(q)
    assert dist == pytest.approx(_brute_l1_to_segment(q, a, b), abs=2e-4)
    assert dist <= _brute_l1_to_segment(q, a, b) + 1e-9
    assert np.abs(proj - q).sum() == pytest.approx(dist, abs=1e-9)
    assert S.distance(proj) <= 1e-9


def test_projector_batch_matches_single_queries(rng):
    V = rng.dirichlet(np.ones(4), size=5)
    M = V.T
    P = L1Projector(M, np.ones((1, 5)), ["="], [1.0])
    Q = rng.dirichlet(np.ones(4), size=30)
    batch = P.distances(Q)
    single = np.array([P.project(q)[0] for q in Q])
    np.testing.assert_allclose(batch, single, atol=1e-12)
    # members of the hull are at distance zero
    inside = rng.dirichlet(np.ones(5), size=10) @ V
    assert P.distances(inside).max() <= 1e-9


def test_distance_to_vertex_set_exhaustive_grid():
    # brute force over a fine grid of convex weights for a triangle in 4 dims
    V = np.array([[0.7, 0.1, 0.1, 0.1], [0.1, 0.6, 0.2, 0.1], [0.25, 0.25, 0.25, 0.25]])
    S = hull_set(V)
    q = np.array([0.05, 0.05, 0.1, 0.8])
    best = np.inf
    k = 200
    for i, j in itertools.product(range(k + 1), repeat=2):
        if i + j <= k:
            w = np.array([i, j, k - i - j]) / k
            best = min(best, np.abs(w @ V - q).sum())
    assert l1_distance_to_set(q, S) <= best + 1e-12
    assert l1_distance_to_set(q, S) == pytest.approx(best, abs=1e-2)
