"""Secure key rate, scenario evaluation, distance sweeps and optimization."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import channel as ch
from .errors import DomainError, NoPositiveRate, VanishingYield
from .estimator import BoundResult, analytic_bounds_wcs, build_lp, solve_bounds_lp
from .sources import DEFAULT_N_CUT, SourceStateSpec, wcs_states


@dataclass(frozen=True)
class ProtocolParams:
    q: float = 0.5
    f: float = 1.22

    def __post_init__(self):
        if not 0 < self.q <= 1:
            raise ValueError("q must lie in (0, 1]")
        if not self.f >= 1:
            raise ValueError("f must be >= 1")


@dataclass(frozen=True)
class KeyRatePoint:
    distance_km: float
    rate: float
    q_s: float
    e_s: float
    q1_lower: float
    y1_lower: float
    e1_upper: float
    y1_true: float = math.nan
    e1_true: float = math.nan
    mu: float = math.nan
    nu: float = math.nan
    diagnostics: dict = field(default_factory=dict, compare=False, repr=False)


@dataclass(frozen=True)
class Scenario:
    """Everything needed to evaluate R(ℓ).

    With ``optimize_wcs`` set, ``sources`` is ignored and the WCS signal and
    decoy intensities are re-optimized at every distance.
    """

    sources: tuple = ()
    channel: ch.ChannelParams = ch.ChannelParams()
    protocol: ProtocolParams = ProtocolParams()
    estimator: str = "lp"
    n_cut: int = DEFAULT_N_CUT
    optimize_wcs: bool = False

    def __post_init__(self):
        object.__setattr__(self, "sources", tuple(self.sources))
        if self.estimator not in ("lp", "analytic"):
            raise ValueError(f"unknown estimator {self.estimator!r}")


def binary_entropy(x: float) -> float:
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"H2 argument {x} outside [0, 1]")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1 - x) * math.log2(1 - x)


def key_rate(q_s: float, e_s: float, p1_signal: float, bounds: BoundResult,
             protocol: ProtocolParams = ProtocolParams()) -> float:
    """R = q{-Q_s f H2(E_s) + p_1 Y_1^l [1 - H2(e_1^u)]}, unclamped.

    H2 is nondecreasing only up to 1/2, so the phase-error term uses
    min(e_1^u, 1/2): the worst case compatible with e_1 <= e_1^u.
    """
    if bounds.status != "optimal":
        raise ValueError("bounds are not optimal")
    q1 = p1_signal * bounds.y1_lower
    h_s = binary_entropy(e_s)
    h_1 = binary_entropy(min(bounds.e1_upper, 0.5))
    return protocol.q * (-q_s * protocol.f * h_s + q1 * (1.0 - h_1))


def _resolve(sources, n_cut):
    by_role = {}
    for s in sources:
        by_role.setdefault(s.role, []).append(s)
    if len(by_role.get("signal", [])) != 1:
        raise ValueError("exactly one signal state is required")
    if "vacuum-decoy" not in by_role:
        raise ValueError("a vacuum decoy is required")
    if "weak-decoy" not in by_role:
        raise ValueError("a weak decoy is required")
    return [(s, s.resolve(n_cut)) for s in sources]


def _analytic(states, obs, channel):
    sig = next(i for i, (s, _) in enumerate(states) if s.role == "signal")
    dec = next(i for i, (s, _) in enumerate(states) if s.role == "weak-decoy")
    if states[sig][0].kind != "wcs" or states[dec][0].kind != "wcs":
        raise ValueError("the analytic estimator applies to WCS sources only")
    mu = float(states[sig][0].params["mu"])
    nu = float(states[dec][0].params["mu"])
    return analytic_bounds_wcs(obs[sig].gain, obs[sig].qber, obs[dec].gain, obs[dec].qber,
                               channel.y0, mu, nu, channel.e0)


def simulate_point(sources, channel: ch.ChannelParams = ch.ChannelParams(),
                   protocol: ProtocolParams = ProtocolParams(), distance_km: float = 0.0,
                   estimator: str = "lp", n_cut: int = DEFAULT_N_CUT) -> KeyRatePoint:
    """Honest-channel observations at ``distance_km`` -> bounds -> key rate."""
    states = _resolve(sources, n_cut)
    budget = ch.link_budget(channel, distance_km)
    obs = [ch.observe(d, channel, budget, s.label) for s, d in states]
    sig = next(i for i, (s, _) in enumerate(states) if s.role == "signal")
    if estimator == "lp":
        bounds = solve_bounds_lp(build_lp(obs, n_cut))
    elif estimator == "analytic":
        try:
            bounds = _analytic(states, obs, channel)
        except VanishingYield:
            bounds = BoundResult(0.0, 1.0, "optimal", {"method": "analytic", "vanishing": True})
    else:
        raise ValueError(f"unknown estimator {estimator!r}")
    p1 = states[sig][1][1]
    q_s, e_s = obs[sig].gain, obs[sig].qber
    y1 = ch.yield_n(channel, budget, 1)
    e1 = ch.error_n(channel, budget, 1) if y1 > 0 else math.nan
    mu = nu = math.nan
    if states[sig][0].kind == "wcs":
        mu = float(states[sig][0].params["mu"])
        dec = next(s for s, _ in states if s.role == "weak-decoy")
        nu = float(dec.params["mu"]) if dec.kind == "wcs" else math.nan
    return KeyRatePoint(
        distance_km=float(distance_km),
        rate=key_rate(q_s, e_s, p1, bounds, protocol),
        q_s=q_s, e_s=e_s, q1_lower=p1 * bounds.y1_lower,
        y1_lower=bounds.y1_lower, e1_upper=bounds.e1_upper,
        y1_true=y1, e1_true=e1, mu=mu, nu=nu, diagnostics=bounds.diagnostics)


# --- WCS intensity optimization -----------------------------------------------

MU_RANGE = (0.05, 1.0)
NU_MIN, NU_MAX = 0.005, 0.2
COARSE_STEP = 0.01
REFINE_STEPS = (0.01, 0.005, 0.002, 0.001)  # every point stays on the 1e-3 lattice


def _analytic_rate_grid(channel, protocol, distance_km, mu, nu):
    """Vectorized analytic-bound key rate over arrays of (μ, ν)."""
    eta = ch.link_budget(channel, distance_km).eta
    y0, e0, ed = channel.y0, channel.e0, channel.ed

    def gain(m):
        q = 1 - (1 - y0) * np.exp(-eta * m)
        qe = e0 * y0 + ed * (q - y0)
        return q, qe / q

    q_mu, e_mu = gain(mu)
    q_nu, e_nu = gain(nu)
    with np.errstate(divide="ignore", invalid="ignore"):
        y1 = (mu / (mu * nu - nu ** 2)) * (q_nu * np.exp(nu) - q_mu * np.exp(mu) * nu ** 2 / mu ** 2
                                           - (mu ** 2 - nu ** 2) / mu ** 2 * y0)
        y1 = np.clip(y1, 0.0, 1.0)
        e1 = np.clip((e_nu * q_nu * np.exp(nu) - e0 * y0) / (y1 * nu), 0.0, 0.5)
        e1 = np.where(y1 > 0, e1, 0.5)

    def h2(x):
        with np.errstate(divide="ignore", invalid="ignore"):
            v = -x * np.log2(x) - (1 - x) * np.log2(1 - x)
        return np.where((x > 0) & (x < 1), v, 0.0)

    q1 = mu * np.exp(-mu) * y1
    return protocol.q * (-q_mu * protocol.f * h2(e_mu) + q1 * (1 - h2(e1)))


def _coarse_grid():
    mus, nus = [], []
    for mu in np.round(np.arange(MU_RANGE[0], MU_RANGE[1] + 1e-9, COARSE_STEP), 10):
        top = min(NU_MAX, mu / 2)
        for nu in np.round(np.arange(NU_MIN, top + 1e-9, COARSE_STEP), 10):
            mus.append(mu)
            nus.append(nu)
    return np.array(mus), np.array(nus)


def _wcs_rate(channel, protocol, distance_km, mu, nu, estimator, n_cut):
    return simulate_point(wcs_states(mu, nu), channel, protocol, distance_km, estimator, n_cut).rate


def optimize_wcs_intensities(channel: ch.ChannelParams = ch.ChannelParams(),
                             protocol: ProtocolParams = ProtocolParams(),
                             distance_km: float = 0.0, estimator: str = "lp",
                             n_cut: int = DEFAULT_N_CUT, allow_nonpositive: bool = False):
    """Maximize R over μ in [0.05, 1], ν in [0.005, min(0.2, μ/2)].

    The 0.01-step coarse grid is screened with the closed-form two-decoy
    rate; the ``estimator`` then refines the best grid point by a compass
    search with steps 0.01, 0.005, 0.002 and 0.001.  Ties go to smaller μ,
    then smaller ν.  Returns ``(mu, nu, rate)``.
    """
    mus, nus = _coarse_grid()
    rates = _analytic_rate_grid(channel, protocol, distance_km, mus, nus)
    # lexsort keys: last is primary
    order = np.lexsort((nus, mus, -rates))
    mu, nu = float(mus[order[0]]), float(nus[order[0]])

    cache = {}

    def rate(m, n):
        key = (round(m, 9), round(n, 9))
        if key not in cache:
            cache[key] = _wcs_rate(channel, protocol, distance_km, key[0], key[1], estimator, n_cut)
        return cache[key]

    def admissible(m, n):
        return (MU_RANGE[0] - 1e-12 <= m <= MU_RANGE[1] + 1e-12
                and NU_MIN - 1e-12 <= n <= min(NU_MAX, m / 2) + 1e-12)

    best = rate(mu, nu)
    for step in REFINE_STEPS:
        improved = True
        while improved:
            improved = False
            for dm, dn in ((-step, 0), (0, -step), (step, 0), (0, step)):
                m, n = round(mu + dm, 9), round(nu + dn, 9)
                if admissible(m, n) and rate(m, n) > best:
                    mu, nu, best = m, n, rate(m, n)
                    improved = True
                    break
    if best <= 0 and not allow_nonpositive:
        raise NoPositiveRate(f"no positive WCS key rate at {distance_km} km")
    return mu, nu, best


# --- sweeps ------------------------------------------------------------------

def evaluate(scenario: Scenario, distance_km: float) -> KeyRatePoint:
    if scenario.optimize_wcs:
        mu, nu, _ = optimize_wcs_intensities(scenario.channel, scenario.protocol, distance_km,
                                             scenario.estimator, scenario.n_cut,
                                             allow_nonpositive=True)
        sources = wcs_states(mu, nu)
    else:
        sources = scenario.sources
    return simulate_point(sources, scenario.channel, scenario.protocol, distance_km,
                          scenario.estimator, scenario.n_cut)


def sweep_distance(scenario: Scenario, l_grid) -> list[KeyRatePoint]:
    l_grid = [float(x) for x in l_grid]
    if any(b <= a for a, b in zip(l_grid, l_grid[1:])):
        raise ValueError("distance grid must be strictly increasing")
    return [evaluate(scenario, l) for l in l_grid]


def max_distance(scenario: Scenario, tol_km: float = 0.1, start_km: float = 10.0) -> float:
    """Largest ℓ with R(ℓ) > 0, to within ``tol_km``.

    Brackets the sign change by doubling from ``start_km``, then bisects.
    """
    if evaluate(scenario, 0.0).rate <= 0:
        raise NoPositiveRate("no positive key rate at zero distance")
    lo, hi = 0.0, start_km
    while evaluate(scenario, hi).rate > 0:
        lo, hi = hi, 2 * hi
        if hi > 1e5:
            raise RuntimeError("key rate stays positive beyond 1e5 km")
    while hi - lo > tol_km:
        mid = 0.5 * (lo + hi)
        if evaluate(scenario, mid).rate > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def with_channel(scenario: Scenario, **changes) -> Scenario:
    return replace(scenario, channel=replace(scenario.channel, **changes))
