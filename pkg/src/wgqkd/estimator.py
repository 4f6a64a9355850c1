"""Single-photon yield and error bounds from decoy-state observations.

Decision variables are the yields Y_0..Y_N and x_n = Y_n e_n, which makes
the error constraints linear.  For every state k with statistics p^(k),
observed gain Q_k, QBER E_k, tail mass τ_k and measurement half-width u_k:

    Q_k - τ_k - u_k      <= Σ p_n^(k) Y_n <= Q_k + u_k
    Q_k E_k - τ_k - u_k  <= Σ p_n^(k) x_n <= Q_k E_k + u_k

together with 0 <= x_n <= Y_n <= 1.  The tail enters one-sidedly because the
unseen n > N terms can only add detections (at most one per pulse).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import Observation
from .errors import (DegenerateIntensities, Infeasible, MissingVacuumState,
                     TruncationMismatch, VanishingYield)
from .simplex import LPInfeasible, solve_lp

# coefficients below this are folded into the tail slack
PRUNE_TOL = 1e-15


@dataclass(frozen=True)
class BoundResult:
    y1_lower: float
    e1_upper: float
    status: str = "optimal"
    diagnostics: dict = field(default_factory=dict, compare=False)


@dataclass
class LpProblem:
    n_cut: int
    A_ub: np.ndarray
    b_ub: np.ndarray
    row_names: list

    @property
    def n_vars(self):
        return 2 * (self.n_cut + 1)

    def y(self, n):
        return n

    def x(self, n):
        return self.n_cut + 1 + n

    def contains(self, y, x, tol=0.0):
        """True when the point (Y, x) satisfies every row within ``tol``."""
        z = np.concatenate([y, x])
        return bool(np.all(self.A_ub @ z <= self.b_ub + tol) and np.all(z >= -tol))


def _is_vacuum(d):
    return d.tail_mass == 0 and d.probs[0] == 1.0


def build_lp(observations, n_cut: int = 10) -> LpProblem:
    """Assemble the estimator's linear program from observed states."""
    observations = [o if isinstance(o, Observation) else Observation(*o) for o in observations]
    if not any(_is_vacuum(o.distribution) for o in observations):
        raise MissingVacuumState("the vacuum decoy is required")
    N = n_cut
    nv = 2 * (N + 1)
    rows, rhs, names = [], [], []

    def add(coef, bound, name):
        rows.append(coef)
        rhs.append(bound)
        names.append(name)

    for k, obs in enumerate(observations):
        d = obs.distribution
        if len(d.probs) > N + 1:
            raise TruncationMismatch(f"state {obs.label or k} truncated at {d.n_cut} > n_cut={N}")
        p = np.zeros(N + 1)
        p[: len(d.probs)] = d.probs
        tiny = p < PRUNE_TOL
        tau = d.tail_mass + float(p[tiny].sum())
        p[tiny] = 0.0
        u = obs.uncertainty
        label = obs.label or d.label or str(k)
        gy = np.zeros(nv)
        gy[: N + 1] = p
        gx = np.zeros(nv)
        gx[N + 1:] = p
        qe = obs.gain * obs.qber
        add(gy, obs.gain + u, f"gain<=:{label}")
        add(-gy, -(obs.gain - tau - u), f"gain>=:{label}")
        add(gx, qe + u, f"err<=:{label}")
        add(-gx, -(qe - tau - u), f"err>=:{label}")
    for n in range(N + 1):
        row = np.zeros(nv)
        row[n] = 1.0
        add(row, 1.0, f"Y{n}<=1")
    for n in range(N + 1):
        row = np.zeros(nv)
        row[N + 1 + n] = 1.0
        row[n] = -1.0
        add(row, 0.0, f"x{n}<=Y{n}")
    return LpProblem(N, np.array(rows), np.array(rhs), names)


def _optimize(problem, c):
    try:
        return solve_lp(c, problem.A_ub, problem.b_ub)
    except LPInfeasible as exc:
        raise Infeasible(f"observations admit no channel: {exc}") from None


def _active(problem, sol, tol=1e-14):
    return [name for name, s in zip(problem.row_names, sol.slack) if abs(s) <= tol]


def solve_bounds_lp(problem: LpProblem) -> BoundResult:
    """y1_lower = min Y_1; e1_upper = min(1, max x_1 / y1_lower)."""
    c = np.zeros(problem.n_vars)
    c[problem.y(1)] = 1.0
    lo = _optimize(problem, c)
    c = np.zeros(problem.n_vars)
    c[problem.x(1)] = -1.0
    hi = _optimize(problem, c)
    y1 = min(max(float(lo.x[problem.y(1)]), 0.0), 1.0)
    x1 = max(float(hi.x[problem.x(1)]), 0.0)
    e1 = min(1.0, x1 / y1) if y1 > 0 else 1.0
    return BoundResult(y1, e1, "optimal", {
        "x1_upper": x1,
        "pivots": lo.n_pivots + hi.n_pivots,
        "active_y1": _active(problem, lo),
        "active_x1": _active(problem, hi),
    })


def analytic_bounds_wcs(q_mu, e_mu, q_nu, e_nu, y0, mu, nu, e0=0.5) -> BoundResult:
    """Closed-form vacuum + weak decoy bounds for Poisson sources.

    ``e_mu`` is accepted for symmetry with the observations but the bound
    does not depend on it.
    """
    if not 0 < nu < mu:
        raise DegenerateIntensities(f"need 0 < nu < mu, got nu={nu}, mu={mu}")
    y1 = (mu / (mu * nu - nu * nu)) * (
        q_nu * math.exp(nu) - q_mu * math.exp(mu) * nu * nu / (mu * mu)
        - (mu * mu - nu * nu) / (mu * mu) * y0)
    y1 = min(max(y1, 0.0), 1.0)
    if y1 <= 0:
        raise VanishingYield("single-photon yield bound is not positive")
    e1 = (e_nu * q_nu * math.exp(nu) - e0 * y0) / (y1 * nu)
    return BoundResult(y1, min(max(e1, 0.0), 1.0), "optimal", {"method": "analytic"})
