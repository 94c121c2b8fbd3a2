"""Small dense linear programs via the two-phase simplex method.

Problems here have at most a few hundred variables, so a tableau held as a
dense numpy array is fast enough. Bland's rule is used for both entering
and leaving choices, which rules out cycling and makes every run
deterministic.

Problem form::

    minimize    c @ x
    subject to  A_ub @ x <= b_ub
                A_eq @ x == b_eq
                lo <= x <= hi        (lo may be -inf, hi may be +inf)
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

OPTIMAL = "Optimal"
INFEASIBLE = "Infeasible"
UNBOUNDED = "Unbounded"

PIVOT_TOL = 1e-9
COST_TOL = 1e-10
FEAS_TOL = 1e-8


class LPError(RuntimeError):
    """Raised by callers that need an optimum and did not get one."""


@dataclass
class LPProblem:
    c: np.ndarray
    A_ub: Optional[np.ndarray] = None
    b_ub: Optional[np.ndarray] = None
    A_eq: Optional[np.ndarray] = None
    b_eq: Optional[np.ndarray] = None
    lo: Optional[np.ndarray] = None
    hi: Optional[np.ndarray] = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        n = self.c.size
        self.A_ub, self.b_ub = _rows(self.A_ub, self.b_ub, n)
        self.A_eq, self.b_eq = _rows(self.A_eq, self.b_eq, n)
        self.lo = np.zeros(n) if self.lo is None else np.broadcast_to(np.asarray(self.lo, dtype=float), (n,)).copy()
        self.hi = np.full(n, np.inf) if self.hi is None else np.broadcast_to(np.asarray(self.hi, dtype=float), (n,)).copy()

    @property
    def n(self) -> int:
        return self.c.size

    def violation(self, x) -> float:
        """Largest constraint violation of ``x`` (0 when feasible)."""
        x = np.asarray(x, dtype=float)
        parts = [0.0]
        if self.A_ub.shape[0]:
            parts.append(float(np.max(self.A_ub @ x - self.b_ub)))
        if self.A_eq.shape[0]:
            parts.append(float(np.max(np.abs(self.A_eq @ x - self.b_eq))))
        parts.append(float(np.max(self.lo - x, initial=0.0)))
        parts.append(float(np.max(x - self.hi, initial=0.0)))
        return max(parts)


@dataclass
class LPSolution:
    status: str
    x: Optional[np.ndarray] = None
    value: float = np.nan
    pivots: int = 0

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL


def _rows(A, b, n):
    if A is None or np.size(A) == 0:
        return np.zeros((0, n)), np.zeros(0)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    if A.shape != (b.size, n):
        raise ValueError(f"constraint block has shape {A.shape}, expected ({b.size}, {n})")
    return A, b


def _pivot(T, basis, r, col):
    T[r] /= T[r, col]
    colv = T[:, col].copy()
    colv[r] = 0.0
    T -= np.outer(colv, T[r])
    basis[r] = col


def _simplex(T, basis, allowed, max_iter):
    """Run Bland-rule pivots on tableau ``T`` (last row = reduced costs).

    Returns (status, pivots). Only columns flagged in ``allowed`` may enter.
    """
    m = T.shape[0] - 1
    it = 0
    while it < max_iter:
        cost = T[-1, :-1]
        cand = np.flatnonzero((cost < -COST_TOL) & allowed)
        if cand.size == 0:
            return OPTIMAL, it
        col = cand[0]
        colv = T[:m, col]
        pos = colv > PIVOT_TOL
        if not np.any(pos):
            return UNBOUNDED, it
        ratios = np.full(m, np.inf)
        ratios[pos] = T[:m, -1][pos] / colv[pos]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + 1e-12 * max(1.0, abs(best)))
        r = ties[np.argmin(basis[ties])]
        _pivot(T, basis, r, col)
        it += 1
    raise LPError("simplex iteration limit reached")


def solve(prob: LPProblem, max_iter: int = 50000) -> LPSolution:
    n = prob.n
    lo, hi = prob.lo, prob.hi
    if np.any(lo > hi + FEAS_TOL) or np.any(lo == np.inf) or np.any(hi == -np.inf):
        return LPSolution(INFEASIBLE)

    # variable map: x_j = shift_j + sum_k sign * z_k with z >= 0
    cols = []  # (original index, sign)
    shift = np.zeros(n)
    ub_extra = []  # (column in z, bound)
    for j in range(n):
        if np.isfinite(lo[j]):
            shift[j] = lo[j]
            cols.append((j, 1.0))
            if np.isfinite(hi[j]):
                ub_extra.append((len(cols) - 1, hi[j] - lo[j]))
        elif np.isfinite(hi[j]):
            shift[j] = hi[j]
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    nz = len(cols)
    M = np.zeros((n, nz))
    for k, (j, sgn) in enumerate(cols):
        M[j, k] = sgn

    A_ub = prob.A_ub @ M
    b_ub = prob.b_ub - prob.A_ub @ shift
    if ub_extra:
        extra = np.zeros((len(ub_extra), nz))
        for i, (k, bound) in enumerate(ub_extra):
            extra[i, k] = 1.0
        A_ub = np.vstack([A_ub, extra])
        b_ub = np.concatenate([b_ub, [bd for _, bd in ub_extra]])
    A_eq = prob.A_eq @ M
    b_eq = prob.b_eq - prob.A_eq @ shift
    c = prob.c @ M

    m_ub, m_eq = A_ub.shape[0], A_eq.shape[0]
    m = m_ub + m_eq
    n_slack = m_ub
    # standard form rows: [A_ub I; A_eq 0] z = b
    A = np.zeros((m, nz + n_slack))
    A[:m_ub, :nz] = A_ub
    A[:m_ub, nz:] = np.eye(m_ub)
    A[m_ub:, :nz] = A_eq
    b = np.concatenate([b_ub, b_eq])
    neg = b < 0
    A[neg] *= -1
    b[neg] *= -1

    nv = nz + n_slack
    # artificials only on rows lacking a usable slack
    basis = np.full(m, -1)
    need_art = []
    for i in range(m):
        if i < m_ub and not neg[i]:
            basis[i] = nz + i
        else:
            need_art.append(i)
    na = len(need_art)
    T = np.zeros((m + 1, nv + na + 1))
    T[:m, :nv] = A
    T[:m, -1] = b
    for k, i in enumerate(need_art):
        T[i, nv + k] = 1.0
        basis[i] = nv + k
    pivots = 0

    if na:
        T[-1, nv:nv + na] = 1.0
        for i in need_art:
            T[-1] -= T[i]
        allowed = np.ones(nv + na, dtype=bool)
        status, it = _simplex(T, basis, allowed, max_iter)
        pivots += it
        if -T[-1, -1] > FEAS_TOL * max(1.0, float(np.abs(b).max(initial=0.0))):
            return LPSolution(INFEASIBLE, pivots=pivots)
        # drive zero-level artificials out of the basis
        keep = np.ones(m, dtype=bool)
        for r in range(m):
            if basis[r] >= nv:
                row = T[r, :nv]
                nzc = np.flatnonzero(np.abs(row) > PIVOT_TOL)
                if nzc.size:
                    _pivot(T, basis, r, nzc[0])
                    pivots += 1
                else:
                    keep[r] = False
        T = np.vstack([T[:m][keep], T[-1:]])
        basis = basis[keep]
        T = np.hstack([T[:, :nv], T[:, -1:]])
        m = basis.size

    T[-1] = 0.0
    T[-1, :nz] = c
    for r in range(m):
        if abs(T[-1, basis[r]]) > 0:
            T[-1] -= T[-1, basis[r]] * T[r]
    status, it = _simplex(T, basis, np.ones(nv, dtype=bool), max_iter)
    pivots += it
    if status == UNBOUNDED:
        return LPSolution(UNBOUNDED, pivots=pivots)
    z = np.zeros(nv)
    z[basis] = T[:m, -1]
    z = np.maximum(z, 0.0)
    x = shift + M @ z[:nz]
    # snap onto finite bounds to drop rounding noise
    x = np.clip(x, lo, hi)
    return LPSolution(OPTIMAL, x, float(prob.c @ x), pivots)


def linprog(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, lo=0.0, hi=np.inf, maximize=False) -> LPSolution:
    """Convenience wrapper; ``maximize`` flips the sign of the objective."""
    c = np.asarray(c, dtype=float)
    prob = LPProblem(-c if maximize else c, A_ub, b_ub, A_eq, b_eq, lo, hi)
    sol = solve(prob)
    if maximize and sol.ok:
        sol.value = -sol.value
    return sol


def require(sol: LPSolution, what: str) -> LPSolution:
    if not sol.ok:
        raise LPError(f"{what}: LP status {sol.status}")
    return sol
