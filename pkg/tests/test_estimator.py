import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wgqkd.channel import ChannelParams, Observation, error_n, link_budget, observe, yield_n
from wgqkd.distribution import PhotonNumberDistribution
from wgqkd.errors import DegenerateIntensities, Infeasible, MissingVacuumState, TruncationMismatch
from wgqkd.estimator import analytic_bounds_wcs, build_lp, solve_bounds_lp
from wgqkd.sources import poisson_distribution, tabular_distribution, tlss_states

GYS = ChannelParams()
VAC = PhotonNumberDistribution.point_mass(0)

# closed form evaluated at 30 digits (mpmath), GYS channel, μ = 0.5, ν = 0.05
GOLDEN = {
    0: (0.044354524139498291, 0.035176830385849397),
    50: (0.0039519711706135869, 0.035423830159161093),
    100: (0.00035373922150383635, 0.037519258548698388),
}


def closed_form_obs(mu, l, ch=GYS):
    eta = link_budget(ch, l).eta
    q = 1 - (1 - ch.y0) * math.exp(-eta * mu)
    return q, (ch.e0 * ch.y0 + ch.ed * (q - ch.y0)) / q


def wcs_obs(mu, nu, l, ch=GYS, n_cut=10):
    b = link_budget(ch, l)
    return [observe(poisson_distribution(mu, n_cut), ch, b, "signal"),
            observe(poisson_distribution(nu, n_cut), ch, b, "decoy"),
            observe(VAC.truncated(n_cut), ch, b, "vacuum")]


@pytest.mark.parametrize("l", sorted(GOLDEN))
def test_analytic_golden(l):
    qm, em = closed_form_obs(0.5, l)
    qn, en = closed_form_obs(0.05, l)
    b = analytic_bounds_wcs(qm, em, qn, en, GYS.y0, 0.5, 0.05)
    assert b.y1_lower == pytest.approx(GOLDEN[l][0], rel=1e-9)
    assert b.e1_upper == pytest.approx(GOLDEN[l][1], rel=1e-9)


def test_analytic_degenerate():
    with pytest.raises(DegenerateIntensities):
        analytic_bounds_wcs(0.1, 0.02, 0.1, 0.02, 1e-6, 0.1, 0.1)


def test_analytic_perfect_channel_valid():
    mu, nu = 0.5, 0.1
    b = analytic_bounds_wcs(1 - math.exp(-mu), 0.0, 1 - math.exp(-nu), 0.0, 0.0, mu, nu, e0=0.0)
    assert b.y1_lower <= 1.0


def test_build_lp_requires_vacuum():
    o = wcs_obs(0.5, 0.05, 10)[:2]
    with pytest.raises(MissingVacuumState):
        build_lp(o)


def test_build_lp_truncation_mismatch():
    o = wcs_obs(0.5, 0.05, 10, n_cut=12)
    with pytest.raises(TruncationMismatch):
        build_lp(o, n_cut=10)


def test_vacuum_pins_y0():
    prob = build_lp([Observation(VAC, 1e-3, 0.5, 1e-4, "vac")], n_cut=3)
    c = np.zeros(prob.n_vars)
    c[prob.y(0)] = 1
    from wgqkd.simplex import solve_lp
    assert solve_lp(c, prob.A_ub, prob.b_ub).x[0] == pytest.approx(0.9e-3)
    assert solve_lp(-c, prob.A_ub, prob.b_ub).x[0] == pytest.approx(1.1e-3)


def test_fully_determined_single_photon():
    obs = [Observation(PhotonNumberDistribution.point_mass(1), 0.02, 0.04, 0.0, "s"),
           Observation(VAC, 1e-6, 0.5, 0.0, "v")]
    b = solve_bounds_lp(build_lp(obs, 4))
    assert b.y1_lower == pytest.approx(0.02, rel=1e-12)
    assert b.e1_upper == pytest.approx(0.04, rel=1e-12)


def test_contradictory_infeasible():
    d = tabular_distribution({0: 0.5, 1: 0.5})
    obs = [Observation(d, 0.1, 0.1, 0.0, "a"), Observation(d, 0.9, 0.1, 0.0, "b"),
           Observation(VAC, 1e-6, 0.5, 0.0, "v")]
    with pytest.raises(Infeasible):
        solve_bounds_lp(build_lp(obs, 3))


@pytest.mark.parametrize("l", [0, 20, 50, 80, 100, 120, 140])
def test_lp_dominates_analytic(l):
    obs = wcs_obs(0.5, 0.05, l)
    lp = solve_bounds_lp(build_lp(obs))
    an = analytic_bounds_wcs(obs[0].gain, obs[0].qber, obs[1].gain, obs[1].qber, GYS.y0, 0.5, 0.05)
    assert lp.y1_lower >= an.y1_lower - 1e-10
    assert lp.e1_upper <= an.e1_upper + 1e-10


@pytest.mark.parametrize("l", sorted(GOLDEN))
def test_lp_at_least_golden(l):
    lp = solve_bounds_lp(build_lp(wcs_obs(0.5, 0.05, l)))
    assert lp.y1_lower >= GOLDEN[l][0] - 1e-10


@pytest.mark.parametrize("l", [0, 30, 60, 90, 120, 150])
def test_soundness_wcs(l):
    b = link_budget(GYS, l)
    lp = solve_bounds_lp(build_lp(wcs_obs(0.48, 0.05, l)))
    assert yield_n(GYS, b, 1) >= lp.y1_lower
    assert error_n(GYS, b, 1) <= lp.e1_upper


@pytest.mark.parametrize("l", [0, 50, 100, 140])
def test_soundness_tlss(l):
    b = link_budget(GYS, l)
    obs = [observe(s.resolve(10), GYS, b, s.label) for s in tlss_states()]
    lp = solve_bounds_lp(build_lp(obs))
    assert yield_n(GYS, b, 1) >= lp.y1_lower
    assert error_n(GYS, b, 1) <= lp.e1_upper


@pytest.mark.parametrize("l", [10, 60, 110])
def test_third_decoy_never_loosens(l):
    obs = wcs_obs(0.5, 0.05, l)
    two = solve_bounds_lp(build_lp(obs))
    extra = observe(poisson_distribution(0.15, 10), GYS, link_budget(GYS, l), "decoy2")
    three = solve_bounds_lp(build_lp(obs + [extra]))
    assert three.y1_lower >= two.y1_lower - 1e-12
    assert three.e1_upper <= two.e1_upper + 1e-12


@settings(max_examples=15, deadline=None)
@given(st.floats(0, 140), st.floats(1e-4, 1e-2))
def test_larger_uncertainty_never_tightens(l, rel):
    base = wcs_obs(0.5, 0.05, l)
    small = [o._replace(uncertainty=rel * o.gain) for o in base]
    big = [o._replace(uncertainty=10 * rel * o.gain) for o in base]
    a = solve_bounds_lp(build_lp(small))
    b = solve_bounds_lp(build_lp(big))
    assert b.y1_lower <= a.y1_lower + 1e-12
    assert b.e1_upper >= a.e1_upper - 1e-12


def test_bounds_in_range():
    b = solve_bounds_lp(build_lp(wcs_obs(0.5, 0.05, 160)))
    assert 0 <= b.y1_lower <= 1 and 0 <= b.e1_upper <= 1
    assert b.status == "optimal" and "active_y1" in b.diagnostics
