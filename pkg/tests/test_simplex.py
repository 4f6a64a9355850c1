import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from wgqkd.simplex import LPInfeasible, LPUnbounded, solve_lp


def test_textbook():
    # max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18  ->  (2, 6), 36
    sol = solve_lp([-3, -5], [[1, 0], [0, 2], [3, 2]], [4, 12, 18])
    assert sol.x == pytest.approx([2, 6])
    assert sol.objective == pytest.approx(-36)
    assert sol.slack == pytest.approx([2, 0, 0], abs=1e-12)


def test_beale_cycling_example():
    # cycles under the largest-coefficient rule without an anti-cycling rule
    c = [-0.75, 20, -0.5, 6]
    A = [[0.25, -8, -1, 9], [0.5, -12, -0.5, 3], [0, 0, 1, 0]]
    sol = solve_lp(c, A, [0, 0, 1])
    assert sol.objective == pytest.approx(-1.25)
    assert sol.x == pytest.approx([1, 0, 1, 0], abs=1e-12)


def test_equality_and_negative_rhs():
    sol = solve_lp([1, 1], [[-1, 0]], [-1], [[1, -1]], [0.5])
    assert sol.x == pytest.approx([1.0, 0.5])


def test_infeasible():
    with pytest.raises(LPInfeasible):
        solve_lp([1], [[1], [-1]], [0.1, -0.9])


def test_unbounded():
    with pytest.raises(LPUnbounded):
        solve_lp([-1, 0], [[0, 1]], [1])


def test_redundant_equalities():
    sol = solve_lp([1, 2], None, None, [[1, 1], [2, 2]], [1, 2])
    assert sol.x == pytest.approx([1, 0])


def test_badly_scaled_rows():
    # coefficients spanning 1e-12..1 as in the photon-number constraints
    A = np.array([[1.0, 1e-3, 1e-12], [-1.0, -1e-3, -1e-12], [0, 1, 0], [0, 0, 1]])
    b = np.array([2e-6, -1.5e-6, 1, 1])
    c = np.array([0, 0, -1.0])
    ours = solve_lp(c, A, b)
    ref = linprog(c, A_ub=A, b_ub=b, method="highs")
    assert ours.objective == pytest.approx(ref.fun, rel=1e-9)


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 6), st.integers(1, 8), st.integers(0, 2 ** 31 - 1))
def test_random_lps_match_highs(n, m, seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(m, n))
    x0 = rng.uniform(0, 1, n)
    b = A @ x0 + rng.uniform(0, 1, m)          # x0 is feasible
    A = np.vstack([A, np.eye(n)])               # keep it bounded
    b = np.concatenate([b, np.full(n, 5.0)])
    c = rng.normal(size=n)
    ours = solve_lp(c, A, b)
    ref = linprog(c, A_ub=A, b_ub=b, method="highs")
    assert ref.status == 0
    assert ours.objective == pytest.approx(ref.fun, abs=1e-8)
    assert np.all(A @ ours.x <= b + 1e-9) and np.all(ours.x >= -1e-12)
    # a vertex: at least n active constraints among rows and bounds
    active = np.sum(np.abs(A @ ours.x - b) < 1e-9) + np.sum(np.abs(ours.x) < 1e-12)
    assert active >= n


def test_deterministic():
    rng = np.random.default_rng(3)
    A, b, c = rng.normal(size=(6, 4)), rng.uniform(1, 2, 6), rng.normal(size=4)
    A = np.vstack([A, np.eye(4)])
    b = np.concatenate([b, np.ones(4)])
    s1, s2 = solve_lp(c, A, b), solve_lp(c, A, b)
    assert np.array_equal(s1.x, s2.x) and s1.basis == s2.basis


@pytest.mark.parametrize("l", [160, 200, 400])
def test_thin_slab_estimator_lp(l):
    # u = 0 turns each gain/error pair into a slab of width ~tail mass; a
    # degenerate pivot on a ~1e-9 entry once produced a point off the slab
    from wgqkd.channel import ChannelParams, link_budget, observe
    from wgqkd.estimator import build_lp
    from wgqkd.sources import wcs_states
    ch = ChannelParams()
    obs = [observe(s.resolve(10), ch, link_budget(ch, l), s.label) for s in wcs_states(0.05, 0.015)]
    prob = build_lp(obs)
    for var in (1, 12):
        c = np.zeros(prob.n_vars)
        c[var] = 1.0 if var == 1 else -1.0
        sol = solve_lp(c, prob.A_ub, prob.b_ub)
        viol = prob.A_ub @ sol.x - prob.b_ub
        assert np.all(viol <= 1e-15 * np.maximum(np.abs(prob.b_ub), 1e-12))
