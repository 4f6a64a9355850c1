import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wgqkd.channel import ChannelParams
from wgqkd.errors import DomainError, NoPositiveRate
from wgqkd.estimator import BoundResult
from wgqkd.keyrate import (ProtocolParams, Scenario, binary_entropy, evaluate, key_rate,
                           max_distance, optimize_wcs_intensities, simulate_point,
                           sweep_distance, with_channel)
from wgqkd.sources import tlss_states, wcs_states

GYS = ChannelParams()
# analytic-bound path, μ = 0.48, ν = 0.05, 20 km: closed-form chain evaluated at 30 digits
R_GOLDEN_20KM = 0.00090776613741081567


def fine_grid_oracle(l, ch=GYS, proto=ProtocolParams()):
    """Exhaustive 1e-3 grid of the closed-form two-decoy rate."""
    eta = ch.eta_bob * 10 ** (-ch.alpha_db_per_km * l / 10)
    mu = np.arange(50, 1001)[:, None] / 1000
    nu = np.arange(5, 201)[None, :] / 1000
    mu, nu = np.broadcast_arrays(mu, nu)
    keep = nu <= mu / 2 + 1e-12
    mu, nu = mu[keep], nu[keep]

    def Q(m):
        return 1 - (1 - ch.y0) * np.exp(-eta * m)

    def QE(m):
        return ch.e0 * ch.y0 + ch.ed * (Q(m) - ch.y0)

    def H(x):
        x = np.clip(x, 1e-300, 1 - 1e-16)
        return -x * np.log2(x) - (1 - x) * np.log2(1 - x)

    y1 = np.clip(mu / (mu * nu - nu ** 2) * (Q(nu) * np.exp(nu) - Q(mu) * np.exp(mu) * nu ** 2 / mu ** 2
                                             - (mu ** 2 - nu ** 2) / mu ** 2 * ch.y0), 0, 1)
    e1 = np.clip((QE(nu) * np.exp(nu) - ch.e0 * ch.y0) / (y1 * nu), 0, 0.5)
    r = proto.q * (-Q(mu) * proto.f * H(QE(mu) / Q(mu)) + mu * np.exp(-mu) * y1 * (1 - H(e1)))
    i = int(np.argmax(r))
    return mu[i], nu[i], r[i]


def test_protocol_validation():
    with pytest.raises(ValueError):
        ProtocolParams(q=0)
    with pytest.raises(ValueError):
        ProtocolParams(f=0.9)


def test_binary_entropy():
    assert binary_entropy(0.5) == 1.0
    assert binary_entropy(0.0) == 0.0 and binary_entropy(1.0) == 0.0
    for x in (0.1, 0.25, 0.33):
        assert binary_entropy(x) == pytest.approx(binary_entropy(1 - x), rel=1e-14)
    with pytest.raises(DomainError):
        binary_entropy(1.2)
    with pytest.raises(DomainError):
        binary_entropy(-1e-9)


@given(st.floats(0, 1))
def test_binary_entropy_symmetric(x):
    assert binary_entropy(x) == pytest.approx(binary_entropy(1 - x), abs=1e-12)


def test_key_rate_error_free():
    b = BoundResult(0.02, 0.0)
    assert key_rate(0.03, 0.0, 0.3, b) == pytest.approx(0.5 * 0.3 * 0.02, rel=1e-15)


def test_key_rate_half_error_kills_privacy_term():
    b = BoundResult(0.02, 0.5)
    r = key_rate(0.03, 0.04, 0.3, b)
    assert r == pytest.approx(-0.5 * 0.03 * 1.22 * binary_entropy(0.04), rel=1e-15)
    assert r <= 0


def test_key_rate_golden():
    p = simulate_point(wcs_states(0.48, 0.05), GYS, ProtocolParams(), 20.0, "analytic")
    assert p.rate == pytest.approx(R_GOLDEN_20KM, rel=1e-9)


@pytest.mark.parametrize("l", [0, 40, 80, 120])
@pytest.mark.parametrize("estimator", ["lp", "analytic"])
def test_decomposition_identity(l, estimator):
    proto = ProtocolParams()
    p = simulate_point(wcs_states(0.5, 0.1), GYS, proto, l, estimator)
    lhs = p.rate + proto.q * p.q_s * proto.f * binary_entropy(p.e_s)
    rhs = proto.q * p.q1_lower * (1 - binary_entropy(min(p.e1_upper, 0.5)))
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-18)


def test_rate_bounded_by_sifted_gain():
    for l in (0, 50, 100):
        p = simulate_point(tlss_states(), GYS, ProtocolParams(), l)
        assert p.rate <= 0.5 * p.q_s and p.q1_lower <= p.q_s


def test_background_free_zero_distance():
    ch = ChannelParams(y0=0.0)
    p = simulate_point(wcs_states(0.5, 0.1), ch, ProtocolParams(), 0.0)
    assert p.e_s == pytest.approx(ch.ed, rel=1e-12)
    assert p.y1_lower > 0


@pytest.mark.parametrize("l", [0, 30, 60, 90, 120, 140])
def test_lp_rate_dominates_analytic(l):
    lp = simulate_point(wcs_states(0.48, 0.05), GYS, ProtocolParams(), l, "lp")
    an = simulate_point(wcs_states(0.48, 0.05), GYS, ProtocolParams(), l, "analytic")
    assert lp.rate >= an.rate - 1e-10


def test_missing_roles_rejected():
    with pytest.raises(ValueError):
        simulate_point(wcs_states(0.5, 0.1)[::2], GYS)


def test_tlss_beats_optimized_wcs_at_20km():
    t = simulate_point(tlss_states(), GYS, ProtocolParams(), 20.0)
    _, _, w = optimize_wcs_intensities(GYS, ProtocolParams(), 20.0)
    assert t.rate > w


def test_sweep_perfect_channel():
    perfect = ChannelParams(alpha_db_per_km=0, eta_bob=1, y0=0, ed=0)
    pts = sweep_distance(Scenario(tuple(wcs_states(0.5, 0.1)), perfect), [0.0])
    assert len(pts) == 1 and pts[0].rate > 0


def test_sweep_grid_must_increase():
    with pytest.raises(ValueError):
        sweep_distance(Scenario(tuple(wcs_states(0.5, 0.1))), [0, 10, 10])


@pytest.mark.parametrize("scenario", [
    Scenario(tuple(wcs_states(0.48, 0.05))),
    Scenario((), optimize_wcs=True),
    Scenario(tuple(tlss_states())),
], ids=["wcs", "wcs-opt", "tlss"])
def test_rates_nonincreasing(scenario):
    rates = [p.rate for p in sweep_distance(scenario, range(0, 161, 10))]
    assert all(b <= a for a, b in zip(rates, rates[1:]))


def test_wcs_lmax_window():
    lmax = max_distance(Scenario((), optimize_wcs=True))
    assert 130 <= lmax <= 150


def test_max_distance_degraded_channel():
    s = Scenario(tuple(wcs_states(0.48, 0.05)))
    assert max_distance(with_channel(s, y0=1e-4)) < max_distance(s)


def test_max_distance_no_rate():
    s = Scenario(tuple(wcs_states(0.48, 0.05)), ChannelParams(ed=0.2))
    with pytest.raises(NoPositiveRate):
        max_distance(s)


def test_max_distance_tolerance():
    s = Scenario(tuple(wcs_states(0.48, 0.05)), estimator="analytic")
    l = max_distance(s, tol_km=0.01)
    assert evaluate(s, l - 0.01).rate > 0 and evaluate(s, l + 0.01).rate <= 0


@pytest.mark.parametrize("l", [0, 50, 100, 130])
def test_optimizer_matches_exhaustive_grid(l):
    mu, nu, r = optimize_wcs_intensities(GYS, ProtocolParams(), l, estimator="analytic")
    omu, onu, orate = fine_grid_oracle(l)
    assert r >= orate * (1 - 1e-9)
    assert (mu, nu) == pytest.approx((omu, onu), abs=1.5e-3)


def test_optimizer_zero_distance_mu_window():
    mu, nu, _ = optimize_wcs_intensities(GYS, ProtocolParams(), 0.0)
    assert 0.3 < mu < 0.7 and 0.005 <= nu <= min(0.2, mu / 2)


def test_optimizer_not_below_coarse_grid():
    from wgqkd.keyrate import _coarse_grid
    mus, nus = _coarse_grid()
    best_coarse = max(simulate_point(wcs_states(m, n), GYS, ProtocolParams(), 60.0, "analytic").rate
                      for m, n in zip(mus[::7], nus[::7]))
    _, _, r = optimize_wcs_intensities(GYS, ProtocolParams(), 60.0, estimator="analytic")
    assert r >= best_coarse


def test_optimum_nonincreasing_in_distance():
    rs = [optimize_wcs_intensities(GYS, ProtocolParams(), l)[2] for l in range(0, 141, 20)]
    assert all(b <= a for a, b in zip(rs, rs[1:]))


def test_optimizer_no_positive_rate():
    with pytest.raises(NoPositiveRate):
        optimize_wcs_intensities(GYS, ProtocolParams(), 400.0)


def test_determinism():
    s = Scenario(tuple(tlss_states()))
    a, b = evaluate(s, 77.0), evaluate(s, 77.0)
    assert a == b and math.copysign(1, a.rate) == math.copysign(1, b.rate)


@pytest.mark.parametrize("l", [0, 40, 80, 120, 145])
def test_tlss_at_least_wcs_where_positive(l):
    t = simulate_point(tlss_states(), GYS, ProtocolParams(), l).rate
    w = optimize_wcs_intensities(GYS, ProtocolParams(), l, allow_nonpositive=True)[2]
    if t > 0 or w > 0:
        assert t >= w
