"""Fiber and detector model: yields, error rates, and observed gains/QBERs."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .distribution import PhotonNumberDistribution
from .errors import TailTooHeavy, ZeroYield

GAIN_TAIL_TOL = 1e-6


@dataclass(frozen=True)
class ChannelParams:
    """Defaults are the GYS experiment's values."""

    alpha_db_per_km: float = 0.21
    eta_bob: float = 0.045
    y0: float = 1.7e-6
    e0: float = 0.5
    ed: float = 0.033

    def __post_init__(self):
        if self.alpha_db_per_km < 0:
            raise ValueError("alpha_db_per_km must be nonnegative")
        for name in ("eta_bob", "y0", "e0", "ed"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")


@dataclass(frozen=True)
class LinkBudget:
    distance_km: float
    t_ab: float
    eta: float


class Observation(NamedTuple):
    distribution: PhotonNumberDistribution
    gain: float
    qber: float
    uncertainty: float = 0.0  # measurement half-width on the gain
    label: str = ""


class GainQber(NamedTuple):
    gain: float
    qber: float
    tail_uncertainty: float


def link_budget(params: ChannelParams, distance_km: float) -> LinkBudget:
    if distance_km < 0:
        raise ValueError("distance must be nonnegative")
    t_ab = 10.0 ** (-params.alpha_db_per_km * distance_km / 10.0)
    return LinkBudget(float(distance_km), t_ab, t_ab * params.eta_bob)


def yield_n(params: ChannelParams, budget: LinkBudget, n):
    """Y_n = 1 - (1 - Y_0)(1 - η)^n; accepts scalar or array ``n``."""
    n = np.asarray(n)
    if np.any(n < 0):
        raise ValueError("photon number must be nonnegative")
    # written as Y_0 + (1 - Y_0)[1 - (1 - η)^n] so that Y_0 survives to full precision
    if budget.eta < 1.0:
        grow = -np.expm1(n * np.log1p(-budget.eta))
    else:
        grow = np.where(n > 0, 1.0, 0.0)
    out = params.y0 + (1.0 - params.y0) * grow
    return float(out) if out.ndim == 0 else out


def error_n(params: ChannelParams, budget: LinkBudget, n):
    """e_n = [e_0 Y_0 + e_d (Y_n - Y_0)] / Y_n."""
    y = np.asarray(yield_n(params, budget, n))
    if np.any(y <= 0):
        raise ZeroYield("zero yield: error rate undefined")
    out = (params.e0 * params.y0 + params.ed * (y - params.y0)) / y
    return float(out) if out.ndim == 0 else out


def gain_and_qber(dist: PhotonNumberDistribution, params: ChannelParams,
                  budget: LinkBudget) -> GainQber:
    """Q = Σ p_n Y_n and E = Σ p_n Y_n e_n / Q over the truncated support.

    The tail cannot be summed; since Y_n ≤ 1 its contribution to Q is at most
    ``tail_mass``, which is returned as ``tail_uncertainty``.
    """
    if dist.tail_mass >= GAIN_TAIL_TOL:
        raise TailTooHeavy(f"tail mass {dist.tail_mass:.3g} >= {GAIN_TAIL_TOL:g}")
    n = np.arange(len(dist.probs))
    y = yield_n(params, budget, n)
    # Y_n e_n written out so that Y_n = 0 never divides
    ye = params.e0 * params.y0 + params.ed * (y - params.y0)
    q = float(dist.probs @ y)
    qe = float(dist.probs @ ye)
    if q <= 0:
        # nothing detected; E is taken as its background limit e_0
        return GainQber(0.0, params.e0, dist.tail_mass)
    return GainQber(q, qe / q, dist.tail_mass)


def observe(dist: PhotonNumberDistribution, params: ChannelParams, budget: LinkBudget,
            label: str = "") -> Observation:
    """Honest-channel observation of one source state."""
    q, e, _ = gain_and_qber(dist, params, budget)
    return Observation(dist, q, e, 0.0, label or dist.label)
