"""Dense two-phase tableau simplex with Bland's anti-cycling rule.

Solves   minimize c·x   subject to   A_ub x <= b_ub,  A_eq x = b_eq,  x >= 0.

Meant for the small problems of the decoy estimator (tens of variables and
rows).  Every returned optimum is a basic feasible solution, i.e. a vertex.
Rows and columns are equilibrated before pivoting because the estimator's
coefficients (photon-number probabilities) span many decades.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PIVOT_TOL = 1e-8
# smallest pivot used to push a zero-level artificial out after phase one
DRIVE_TOL = 1e-6
COST_TOL = 1e-12
FEAS_TOL = 1e-12
CHECK_TOL = 1e-9


class LPInfeasible(Exception):
    pass


class LPUnbounded(Exception):
    pass


@dataclass
class LpSolution:
    x: np.ndarray
    objective: float
    basis: list
    n_pivots: int
    slack: np.ndarray  # b_ub - A_ub x


def _pivot(T, r, c):
    T[r] /= T[r, c]
    col = T[:, c].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])


def _iterate(T, basis, n_enter, max_iter, art_start=None):
    """Run Bland-rule pivots on tableau ``T`` (objective in the last row).

    Only columns below ``n_enter`` may enter.  Basic variables with index
    ``>= art_start`` are artificials held at zero: any usable entry in their
    row gives a ratio of zero, so they leave before they could grow.
    """
    pivots = 0
    m = len(basis)
    while True:
        cost = T[-1, :n_enter]
        entering = np.flatnonzero(cost < -COST_TOL)
        if entering.size == 0:
            return pivots
        c = int(entering[0])
        col = T[:m, c]
        held = []
        if art_start is not None:
            held = [i for i in range(m) if basis[i] >= art_start and abs(col[i]) > PIVOT_TOL]
        if held:
            r = min(held, key=lambda i: basis[i])
            T[r, -1] = 0.0
        else:
            rows = np.flatnonzero(col > PIVOT_TOL)
            if rows.size == 0:
                raise LPUnbounded("objective unbounded below")
            ratios = T[rows, -1] / col[rows]
            best = ratios.min()
            # ties broken by smallest basic variable index
            tied = rows[ratios <= best + 1e-15 * max(1.0, abs(best))]
            r = int(min(tied, key=lambda i: basis[i]))
        _pivot(T, r, c)
        basis[r] = c
        pivots += 1
        if pivots > max_iter:
            raise RuntimeError("simplex iteration limit reached")


def _equilibrate(A):
    col = np.abs(A).max(axis=0) if A.size else np.zeros(A.shape[1])
    col[col == 0] = 1.0
    A = A / col
    row = np.abs(A).max(axis=1)
    row[row == 0] = 1.0
    return row, col


def solve_lp(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, max_iter=10000,
             feas_tol=FEAS_TOL) -> LpSolution:
    c = np.asarray(c, dtype=float)
    n = c.size
    A_ub = np.zeros((0, n)) if A_ub is None else np.asarray(A_ub, dtype=float).reshape(-1, n)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).ravel()
    A_eq = np.zeros((0, n)) if A_eq is None else np.asarray(A_eq, dtype=float).reshape(-1, n)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
    row, col = _equilibrate(np.vstack([A_ub, A_eq]))
    sol = _solve_scaled(c * (1 / col),
                        A_ub / row[:len(b_ub), None] / col, b_ub / row[:len(b_ub)],
                        A_eq / row[len(b_ub):, None] / col, b_eq / row[len(b_ub):],
                        max_iter, feas_tol)
    x = sol.x / col
    x[x < 0] = 0.0
    scale = max(1.0, np.abs(b_ub).max(initial=0), np.abs(b_eq).max(initial=0))
    viol = max((A_ub @ x - b_ub).max(initial=0), np.abs(A_eq @ x - b_eq).max(initial=0))
    if viol > CHECK_TOL * scale:
        raise RuntimeError(f"simplex returned a point violating constraints by {viol:.3g}")
    return LpSolution(x=x, objective=float(c @ x), basis=sol.basis, n_pivots=sol.n_pivots,
                      slack=b_ub - A_ub @ x)


def _solve_scaled(c, A_ub, b_ub, A_eq, b_eq, max_iter, feas_tol):
    n = c.size
    m_ub, m_eq = len(b_ub), len(b_eq)
    m = m_ub + m_eq

    A = np.zeros((m, n + m_ub))
    A[:m_ub, :n] = A_ub
    A[:m_ub, n:] = np.eye(m_ub)
    A[m_ub:, :n] = A_eq
    b = np.concatenate([b_ub, b_eq])
    flip = b < 0
    A[flip] *= -1
    b = np.where(flip, -b, b)

    needs_art = [i for i in range(m) if i >= m_ub or flip[i]]
    n_art = len(needs_art)
    n_cols = n + m_ub + n_art
    T = np.zeros((m + 1, n_cols + 1))
    T[:m, :n + m_ub] = A
    T[:m, -1] = b
    basis = [n + i for i in range(m)]
    for k, i in enumerate(needs_art):
        T[i, n + m_ub + k] = 1.0
        basis[i] = n + m_ub + k

    pivots = 0
    if n_art:
        T[-1, n + m_ub:n_cols] = 1.0
        for i in needs_art:
            T[-1] -= T[i]
        pivots += _iterate(T, basis, n_cols, max_iter)
        infeas = -T[-1, -1]
        if infeas > feas_tol * max(1.0, np.abs(b).max()):
            raise LPInfeasible(f"phase one ended with infeasibility {infeas:.3g}")
        # drive leftover artificials out where a well-conditioned pivot exists;
        # the rest stay basic at zero and are guarded in phase two
        for r in range(m):
            if basis[r] >= n + m_ub:
                mag = np.abs(T[r, :n + m_ub])
                j = int(mag.argmax())
                if mag[j] > DRIVE_TOL:
                    _pivot(T, r, j)
                    basis[r] = j
                else:
                    T[r, -1] = 0.0
        art_start = n + m_ub
    else:
        art_start = None

    T[-1, :] = 0.0
    T[-1, :n] = c
    for r, j in enumerate(basis):
        if T[-1, j] != 0.0:
            T[-1] -= T[-1, j] * T[r]
    pivots += _iterate(T, basis, n + m_ub, max_iter, art_start)

    z = np.zeros(n_cols)
    for r, j in enumerate(basis):
        z[j] = T[r, -1]
    x = z[:n]
    return LpSolution(x=x, objective=float(c @ x), basis=list(basis), n_pivots=pivots,
                      slack=b_ub - A_ub @ x)
