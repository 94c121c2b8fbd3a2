"""Exact small-scale optimization for principal-agent instances.

Covers the Stackelberg value, the inducibility gap, the inner problems of
the four approximate-best-response objectives, a search over principal
strategies for the outer sup, and plug-in calculators for the regret-based
utility bounds.

Inner problems. For a fixed principal strategy the randomized inner
problem is a fractional knapsack: spend an expected-suboptimality budget
``delta`` to move the agent toward actions that hurt (or help) the
principal. :func:`worst_case_delta_br` solves it as an LP; the batched
evaluator used by the search solves its Lagrangian dual, which is exact
because the dual function is piecewise linear with kinks only at pairwise
crossing points of the per-signal lines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import lp
from .game import (
    TIE_TOL,
    AgentStrategy,
    GameError,
    Instance,
    PrincipalStrategy,
    posteriors_from_scheme,
)

OBJECTIVES = ("UnderR", "UnderD", "OverD", "OverR")
LOWER_BOUND_LABEL = "certified lower bound"


@dataclass
class InstanceAnalysis:
    U_star: float
    G: float
    anchors: np.ndarray
    B: float
    L: float
    diam: float
    dist_C_boundary: Optional[float]
    p0: Optional[float]
    norm_used: str
    witness: tuple
    constrained: bool
    meta: dict = field(default_factory=dict)

    @property
    def assumption_ok(self) -> bool:
        return self.G > 0

    def to_dict(self) -> dict:
        pi, rho = self.witness
        return {
            "U_star": self.U_star,
            "G": self.G,
            "B": self.B,
            "L": self.L,
            "diam": self.diam,
            "dist_C_boundary": self.dist_C_boundary,
            "p0": self.p0,
            "norm": self.norm_used,
            "constrained": self.constrained,
            "anchors": self.anchors.tolist(),
            "witness": {
                "probs": pi.probs.tolist(),
                "decisions": pi.decisions.tolist(),
                "signals": pi.signals.tolist(),
                "actions": rho.actions().tolist(),
            },
        }


# ---------------------------------------------------------------- LP pieces

def _space_rows(inst: Instance):
    """Feasibility of a single decision x as (A_eq, b_eq, lo, hi)."""
    d = inst.d
    if inst.space.kind == "simplex":
        return np.ones((1, d)), np.ones(1), np.zeros(d), np.full(d, np.inf)
    return None, None, inst.space.lo.copy(), inst.space.hi.copy()


def _center(inst: Instance) -> np.ndarray:
    if inst.space.kind == "simplex":
        return np.full(inst.d, 1.0 / inst.d)
    return 0.5 * (inst.space.lo + inst.space.hi)


def inducibility_gap(inst: Instance) -> tuple[float, np.ndarray]:
    """G = min_a max_x min_{a' != a} [v(x, a) - v(x, a')] and its maximizers."""
    n, d = inst.n_actions, inst.d
    if n == 1:
        return math.inf, _center(inst)[None, :]
    A_eq, b_eq, lo, hi = _space_rows(inst)
    if A_eq is not None:
        A_eq = np.hstack([A_eq, np.zeros((1, 1))])
    lo = np.append(lo, -np.inf)
    hi = np.append(hi, np.inf)
    c = np.zeros(d + 1)
    c[-1] = 1.0
    G = math.inf
    anchors = np.zeros((n, d))
    for a in range(n):
        others = [b for b in range(n) if b != a]
        A_ub = np.zeros((len(others), d + 1))
        b_ub = np.zeros(len(others))
        for i, b in enumerate(others):
            A_ub[i, :d] = inst.v_lin[:, b] - inst.v_lin[:, a]
            A_ub[i, d] = 1.0
            b_ub[i] = inst.v_off[a] - inst.v_off[b]
        sol = lp.require(lp.linprog(c, A_ub, b_ub, A_eq, b_eq, lo, hi, maximize=True), f"gap LP for action {a}")
        anchors[a] = inst.space.project_clip(sol.x[:d])
        G = min(G, sol.value)
    return float(G), anchors


def _polish(inst: Instance, xs: np.ndarray, acts, G: float, anchors) -> np.ndarray:
    """Nudge LP decisions so the intended action is optimal without rounding slack."""
    if not (G > 0 and math.isfinite(G)):
        return xs
    xs = xs.copy()
    for i, a in enumerate(acts):
        v = inst.v(xs[i])
        gap = float(v.max() - v[a])
        if gap > 0:
            theta = min(1.0, gap / (G + gap) * (1 + 1e-6) + 1e-15)
            xs[i] = inst.space.project_clip((1 - theta) * xs[i] + theta * anchors[a])
    return xs


def stackelberg_value(inst: Instance, gap: Optional[tuple] = None):
    """U* with ties broken for the principal, plus a witness (pi, rho).

    Witness signals are labelled by the recommended action.
    """
    n, d = inst.n_actions, inst.d
    G, anchors = gap if gap is not None else inducibility_gap(inst)
    if not inst.constrained:
        A_eq, b_eq, lo, hi = _space_rows(inst)
        best = None
        for a in range(n):
            others = [b for b in range(n) if b != a]
            A_ub = np.array([inst.v_lin[:, b] - inst.v_lin[:, a] for b in others]).reshape(len(others), d)
            b_ub = np.array([inst.v_off[a] - inst.v_off[b] for b in others])
            sol = lp.linprog(inst.u_lin[:, a], A_ub, b_ub, A_eq, b_eq, lo, hi, maximize=True)
            if sol.status == lp.INFEASIBLE:
                continue
            lp.require(sol, f"Stackelberg LP for action {a}")
            val = sol.value + inst.u_off[a]
            if best is None or val > best[0] + 1e-12:
                best = (val, a, sol.x)
        if best is None:
            raise GameError("no action can be induced by any decision")
        val, a, x = best
        x = _polish(inst, inst.space.project_clip(x)[None, :], [a], G, anchors)
        pi = PrincipalStrategy.single(x[0], signal=a)
        return float(val), (pi, AgentStrategy.pure([a], n))

    c0 = inst.mean
    nv = n * d + n  # y_a blocks then pi_a
    c = np.zeros(nv)
    for a in range(n):
        c[a * d:(a + 1) * d] = inst.u_lin[:, a]
        c[n * d + a] = inst.u_off[a]
    eq_rows, eq_b, ub_rows, ub_b = [], [], [], []
    for i in range(d):
        row = np.zeros(nv)
        row[i:n * d:d] = 1.0
        eq_rows.append(row)
        eq_b.append(c0[i])
    if inst.space.kind == "simplex":
        for a in range(n):
            row = np.zeros(nv)
            row[a * d:(a + 1) * d] = 1.0
            row[n * d + a] = -1.0
            eq_rows.append(row)
            eq_b.append(0.0)
        lo = np.zeros(nv)
    else:
        row = np.zeros(nv)
        row[n * d:] = 1.0
        eq_rows.append(row)
        eq_b.append(1.0)
        for a in range(n):
            for i in range(d):
                up = np.zeros(nv)
                up[a * d + i] = 1.0
                up[n * d + a] = -inst.space.hi[i]
                dn = np.zeros(nv)
                dn[a * d + i] = -1.0
                dn[n * d + a] = inst.space.lo[i]
                ub_rows += [up, dn]
                ub_b += [0.0, 0.0]
        lo = np.concatenate([np.full(n * d, -np.inf), np.zeros(n)])
    for a in range(n):
        for b in range(n):
            if b == a:
                continue
            row = np.zeros(nv)
            row[a * d:(a + 1) * d] = -(inst.v_lin[:, a] - inst.v_lin[:, b])
            row[n * d + a] = -(inst.v_off[a] - inst.v_off[b])
            ub_rows.append(row)
            ub_b.append(0.0)
    sol = lp.linprog(c, np.array(ub_rows) if ub_rows else None, np.array(ub_b) if ub_b else None,
                     np.array(eq_rows), np.array(eq_b), lo, np.inf, maximize=True)
    if sol.status == lp.INFEASIBLE:
        raise GameError("lifted Stackelberg LP is infeasible")
    lp.require(sol, "lifted Stackelberg LP")
    y = sol.x[:n * d].reshape(n, d)
    w = np.maximum(sol.x[n * d:], 0.0)
    acts = np.flatnonzero(w > 1e-12)
    xs = np.array([inst.space.project_clip(y[a] / w[a]) for a in acts])
    xs = _polish(inst, xs, acts, G, anchors)
    probs = w[acts] / w[acts].sum()
    pi = PrincipalStrategy(probs, xs, acts)
    return float(sol.value), (pi, AgentStrategy.pure(acts, n))


def analyze(inst: Instance) -> InstanceAnalysis:
    G, anchors = inducibility_gap(inst)
    U, wit = stackelberg_value(inst, gap=(G, anchors))
    dist = p0 = None
    if inst.constrained:
        dist = inst.space.boundary_distance(inst.mean)
        if inst.space.kind == "simplex":
            p0 = float(inst.mean.min())
    return InstanceAnalysis(
        U_star=float(U) + 0.0, G=float(G) + 0.0, anchors=anchors, B=inst.utility_bound(), L=inst.lipschitz(),
        diam=inst.space.diameter(), dist_C_boundary=dist, p0=p0, norm_used=inst.space.norm,
        witness=wit, constrained=inst.constrained, meta=dict(inst.meta),
    )


# ------------------------------------------------------------ inner problems

def _tables(inst: Instance, pi: PrincipalStrategy):
    U = inst.u(pi.decisions)
    V = inst.v(pi.decisions)
    gap = V.max(axis=1, keepdims=True) - V
    gap[gap <= TIE_TOL] = 0.0
    return U, gap


def _inner_lp(inst, pi, delta, sense):
    U, gap = _tables(inst, pi)
    k, n = U.shape
    p = pi.probs
    c = (p[:, None] * U).ravel()
    A_eq = np.zeros((k, k * n))
    for s in range(k):
        A_eq[s, s * n:(s + 1) * n] = 1.0
    A_ub = (p[:, None] * gap).ravel()[None, :]
    sol = lp.require(lp.linprog(c, A_ub, [delta], A_eq, np.ones(k), 0.0, np.inf, maximize=(sense > 0)),
                     "inner delta-best-response LP")
    rows = np.maximum(sol.x.reshape(k, n), 0.0)
    rows /= rows.sum(axis=1, keepdims=True)
    return AgentStrategy(rows), float(sol.value)


def _inner_det(inst, pi, delta, sense):
    U, gap = _tables(inst, pi)
    ok = gap <= delta + TIE_TOL
    if sense > 0:
        pick = np.where(ok, U, -np.inf).argmax(axis=1)
    else:
        pick = np.where(ok, U, np.inf).argmin(axis=1)
    rho = AgentStrategy.pure(pick, inst.n_actions)
    return rho, float(pi.probs @ U[np.arange(pi.k), pick])


def worst_case_delta_br(inst: Instance, pi: PrincipalStrategy, delta: float, randomized: bool = True):
    """Agent strategy in R_delta (or D_delta) minimizing the principal's utility."""
    if delta < 0:
        raise GameError("delta must be non-negative")
    return _inner_lp(inst, pi, delta, -1) if randomized else _inner_det(inst, pi, delta, -1)


def best_case_delta_br(inst: Instance, pi: PrincipalStrategy, delta: float, randomized: bool = True):
    """Agent strategy in R_delta (or D_delta) maximizing the principal's utility."""
    if delta < 0:
        raise GameError("delta must be non-negative")
    return _inner_lp(inst, pi, delta, 1) if randomized else _inner_det(inst, pi, delta, 1)


def _dual_value(P, U, g, delta, sense):
    """Batched Lagrangian value of the randomized inner problem.

    P (N,k), U and g (N,k,n). ``sense`` -1 for the worst case, +1 for the best.
    """
    N, k, n = U.shape
    du = U[:, :, :, None] - U[:, :, None, :]
    dg = g[:, :, :, None] - g[:, :, None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        lam = np.where(np.abs(dg) > 1e-12, sense * du / dg, 0.0)
    lam = np.where(np.isfinite(lam) & (lam > 0), lam, 0.0).reshape(N, -1)
    lam = np.concatenate([np.zeros((N, 1)), lam], axis=1)
    C = lam.shape[1]
    out = np.empty(N)
    step = max(1, int(4_000_000 // max(1, C * k * n)))
    for i in range(0, N, step):
        sl = slice(i, i + step)
        L = lam[sl][:, :, None, None]
        if sense < 0:
            inner = (U[sl][:, None] + L * g[sl][:, None]).min(axis=3)
        else:
            inner = (U[sl][:, None] - L * g[sl][:, None]).max(axis=3)
        h = (inner * P[sl][:, None, :]).sum(axis=2) + sense * lam[sl] * delta
        out[sl] = h.max(axis=1) if sense < 0 else h.min(axis=1)
    return out


def batch_objectives(inst: Instance, P, X, deltas) -> dict:
    """Inner values of all four objectives for a batch of strategies.

    P (N,k) signal probabilities, X (N,k,d) decisions. Returns a dict from
    objective name to an (N, len(deltas)) array.
    """
    P = np.asarray(P, dtype=float)
    X = np.asarray(X, dtype=float)
    U = X @ inst.u_lin + inst.u_off
    V = X @ inst.v_lin + inst.v_off
    g = V.max(axis=2, keepdims=True) - V
    g[g <= TIE_TOL] = 0.0
    out = {name: np.empty((P.shape[0], len(deltas))) for name in OBJECTIVES}
    for j, delta in enumerate(deltas):
        ok = g <= delta + TIE_TOL
        out["UnderD"][:, j] = (P * np.where(ok, U, np.inf).min(axis=2)).sum(axis=1)
        out["OverD"][:, j] = (P * np.where(ok, U, -np.inf).max(axis=2)).sum(axis=1)
        out["UnderR"][:, j] = _dual_value(P, U, g, delta, -1)
        out["OverR"][:, j] = _dual_value(P, U, g, delta, 1)
    return out


def objective_values(inst: Instance, pi: PrincipalStrategy, delta: float) -> dict:
    """The four inner values for one strategy (batched route)."""
    res = batch_objectives(inst, pi.probs[None, :], pi.decisions[None, :, :], [delta])
    return {k: float(v[0, 0]) for k, v in res.items()}


# ------------------------------------------------------------ outer search

def _scheme_tensor(c0, P, X):
    """(N,k) probs and (N,k,d) posteriors -> (N,d,k) signaling schemes."""
    with np.errstate(divide="ignore", invalid="ignore"):
        S = P[:, None, :] * np.transpose(X, (0, 2, 1)) / c0[None, :, None]
    return np.nan_to_num(S)


def _from_schemes(c0, S):
    joint = c0[None, :, None] * S
    P = joint.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        X = np.transpose(joint / P[:, None, :], (0, 2, 1))
    bad = P < 1e-15
    X[bad] = c0
    P = np.where(bad, 0.0, P)
    return P / P.sum(axis=1, keepdims=True), X


def _project_rows(space, X):
    if space.kind == "simplex":
        X = np.maximum(X, 0.0)
        s = X.sum(axis=-1, keepdims=True)
        return np.where(s > 0, X / np.where(s > 0, s, 1.0), 1.0 / X.shape[-1])
    return np.clip(X, space.lo, space.hi)


def _random_points(space, rng, shape):
    if space.kind == "simplex":
        alpha = rng.choice([0.1, 0.5, 1.0])
        return rng.dirichlet(np.full(space.d, alpha), size=shape)
    return space.lo + rng.random(shape + (space.d,)) * (space.hi - space.lo)


def _fix_mean(inst, P, X):
    """Append one correction signal per row so every row averages to the mean."""
    from .game import mean_correction

    N, k, d = X.shape
    P2 = np.zeros((N, k + 1))
    X2 = np.zeros((N, k + 1, d))
    for i in range(N):
        eta, z = mean_correction(inst.space, inst.mean, P[i] @ X[i])
        P2[i, :k] = (1 - eta) * P[i]
        P2[i, k] = eta
        X2[i, :k] = X[i]
        X2[i, k] = z
    return P2, X2


class _Pool:
    def __init__(self, inst, deltas):
        self.inst = inst
        self.deltas = list(deltas)
        self.batches = []

    def add(self, P, X):
        if P.shape[0] == 0:
            return None
        vals = batch_objectives(self.inst, P, X, self.deltas)
        self.batches.append((P, X, vals))
        return vals

    def size(self):
        return sum(b[0].shape[0] for b in self.batches)

    def best(self, name, j):
        top = None
        for bi, (P, X, vals) in enumerate(self.batches):
            i = int(np.argmax(vals[name][:, j]))
            v = vals[name][i, j]
            # strict improvement keeps the earliest candidate on ties
            if top is None or v > top[0]:
                top = (float(v), bi, i)
        _, bi, i = top
        P, X, _ = self.batches[bi]
        return top[0], P[i], X[i]


@dataclass
class SearchResult:
    deltas: list
    U_star: float
    values: dict
    certificates: dict
    n_candidates: int
    label: str = LOWER_BOUND_LABEL

    def at(self, delta) -> dict:
        j = self.deltas.index(delta)
        return {name: float(self.values[name][j]) for name in OBJECTIVES}

    def chain_ok(self, tol: float = 1e-7) -> np.ndarray:
        v = self.values
        return (
            (v["UnderR"] <= v["UnderD"] + tol)
            & (v["UnderD"] <= self.U_star + tol)
            & (self.U_star <= v["OverD"] + tol)
            & (v["OverD"] <= v["OverR"] + tol)
        )


def _to_strategy(P, X):
    keep = P > 1e-12
    return PrincipalStrategy(P[keep] / P[keep].sum(), X[keep], np.flatnonzero(keep))


def search_objectives(inst: Instance, deltas: Sequence[float], budget: int = 400, seed: int = 0,
                      analysis: Optional[InstanceAnalysis] = None, refine: bool = True) -> SearchResult:
    """Search principal strategies for all four objectives at several deltas.

    One candidate pool serves every delta and objective, so the reported
    values keep the chain order and monotonicity in delta by construction.
    ``budget`` is the number of random candidates and, for two-state
    constrained simplex instances, the grid resolution 1/budget over
    posterior pairs.
    """
    an = analysis if analysis is not None else analyze(inst)
    deltas = [float(d) for d in deltas]
    rng = np.random.default_rng(seed)
    pool = _Pool(inst, deltas)
    space = inst.space
    n = inst.n_actions

    # Stackelberg witness and its anchor-shifted variants
    pi, rho = an.witness
    acts = rho.actions()
    X0 = pi.decisions
    thetas = [0.0] + list(np.geomspace(1e-7, 1.0, 57))
    if an.G > 0 and math.isfinite(an.G):
        for dl in deltas:
            thetas += [min(1.0, dl / an.G * f + e) for f in (1.0, 1.05, 1.5, 2.0) for e in (1e-9, 1e-6, 1e-4)]
    th = np.array(sorted(set(thetas)))[:, None, None]
    Xr = (1 - th) * X0[None] + th * an.anchors[acts][None]
    Pr = np.repeat(pi.probs[None], th.shape[0], axis=0)
    if inst.constrained:
        Pr, Xr = _fix_mean(inst, Pr, Xr)
    pool.add(Pr, Xr)

    if inst.constrained:
        mu = inst.mean
        pool.add(np.ones((1, 1)), mu[None, None, :])

    # exhaustive posterior-pair grid for two-state persuasion-style instances
    if inst.constrained and space.kind == "simplex" and inst.d == 2:
        c = float(inst.mean[0])
        grid = np.unique(np.append(np.linspace(0.0, 1.0, int(budget) + 1), c))
        lo_pts, hi_pts = grid[grid <= c], grid[grid >= c]
        m1, m2 = np.meshgrid(lo_pts, hi_pts, indexing="ij")
        m1, m2 = m1.ravel(), m2.ravel()
        keep = m2 - m1 > 1e-12
        m1, m2 = m1[keep], m2[keep]
        w1 = (m2 - c) / (m2 - m1)
        P = np.stack([w1, 1 - w1], axis=1)
        X = np.stack([np.stack([m1, 1 - m1], axis=1), np.stack([m2, 1 - m2], axis=1)], axis=1)
        pool.add(P, X)
    elif not inst.constrained and space.kind == "simplex" and inst.d == 2:
        g = np.linspace(0.0, 1.0, int(budget) + 1)
        pool.add(np.ones((g.size, 1)), np.stack([g, 1 - g], axis=1)[:, None, :])

    # random candidates, spread over signal counts
    ks = list(range(1 if not inst.constrained else 2, max(inst.n_signals, n) + 2))
    per = max(1, int(budget) // len(ks))
    for k in ks:
        if inst.constrained and space.kind == "simplex":
            alpha = rng.choice([0.2, 1.0])
            S = rng.dirichlet(np.full(k, alpha), size=(per, inst.d))
            P, X = _from_schemes(inst.mean, S)
        else:
            P = rng.dirichlet(np.ones(k), size=per)
            X = _random_points(space, rng, (per, k))
            if inst.constrained:
                P, X = _fix_mean(inst, P, X)
        pool.add(P, X)

    if refine:
        trials = max(8, int(budget) // 25)
        for j in range(len(deltas)):
            for name in OBJECTIVES:
                val, P, X = pool.best(name, j)
                for scale in (0.2, 0.05, 0.01, 0.002, 4e-4):
                    Pn, Xn = _perturb(inst, rng, P, X, scale, trials)
                    if Pn is None:
                        break
                    vals = pool.add(Pn, Xn)
                    i = int(np.argmax(vals[name][:, j]))
                    if vals[name][i, j] > val:
                        val, P, X = float(vals[name][i, j]), Pn[i], Xn[i]

    values = {name: np.zeros(len(deltas)) for name in OBJECTIVES}
    certs = {name: [] for name in OBJECTIVES}
    for j in range(len(deltas)):
        for name in OBJECTIVES:
            v, P, X = pool.best(name, j)
            values[name][j] = v
            certs[name].append(_to_strategy(P, X))
    return SearchResult(deltas, an.U_star, values, certs, pool.size())


def _perturb(inst, rng, P, X, scale, count):
    k, d = X.shape
    space = inst.space
    if inst.constrained and space.kind == "simplex":
        S = _scheme_tensor(inst.mean, P[None], X[None])[0]
        S = S[None] + scale * rng.normal(size=(count, d, k))
        S = np.maximum(S, 0.0)
        rs = S.sum(axis=2, keepdims=True)
        S = np.where(rs > 0, S / np.where(rs > 0, rs, 1.0), 1.0 / k)
        return _from_schemes(inst.mean, S)
    width = space.diameter() or 1.0
    Xn = _project_rows(space, X[None] + scale * width * rng.normal(size=(count, k, d)))
    Pn = P[None] * np.exp(scale * 4 * rng.normal(size=(count, k)))
    Pn /= Pn.sum(axis=1, keepdims=True)
    if inst.constrained:
        if k > inst.n_signals + 3:
            return None, None
        Pn, Xn = _fix_mean(inst, Pn, Xn)
    return Pn, Xn


def obj_outer_search(inst: Instance, delta: float, which: str, budget: int = 400, seed: int = 0):
    """Best found value of one objective and its certificate strategy.

    The value is a certified lower bound on the sup over principal strategies.
    """
    if which not in OBJECTIVES:
        raise GameError(f"unknown objective {which!r}; expected one of {OBJECTIVES}")
    res = search_objectives(inst, [delta], budget=budget, seed=seed)
    return float(res.values[which][0]), res.certificates[which][0]


# ------------------------------------------------------- closed forms, bounds

def example51_analytic(mu0: float, delta: float) -> tuple[float, float, float]:
    """(UnderR upper bound, OverR lower bound, U*) for the two-state example."""
    if not 0 < mu0 < 0.5:
        raise GameError(f"mu0 must lie in (0, 0.5), got {mu0}")
    if delta < 0:
        raise GameError("delta must be non-negative")
    if delta > 0 and delta >= mu0 / 2:
        raise GameError(f"under bound needs delta < mu0/2 = {mu0 / 2}")
    if delta >= 1 - 2 * mu0:
        raise GameError(f"over bound needs delta < 1 - 2*mu0 = {1 - 2 * mu0}")
    u = 2 * mu0
    return u - 2 * math.sqrt(2 * mu0 * delta) + delta, u + delta, u


@dataclass
class Bound:
    value: Optional[float]
    applicable: bool
    note: str = ""


class BoundSet(dict):
    """Map from bound name to :class:`Bound`."""

    def value(self, name):
        b = self[name]
        return b.value if b.applicable else None

    def to_dict(self):
        return {k: {"value": b.value, "applicable": b.applicable, "note": b.note} for k, b in self.items()}


def theorem_bounds(an: InstanceAnalysis, delta: float) -> BoundSet:
    """Right-hand sides of the approximate-best-response bounds at ``delta``.

    Names: ``unconstrained.*`` and ``constrained.*`` are the general bounds
    (under_D, under_R, over); ``persuasion.*``, ``stackelberg.*``,
    ``contract_box.*`` and ``contract_expected.*`` are the specialised
    constants. Bounds outside their validity range are inapplicable.
    """
    out = BoundSet()
    U, G, B, L, diam = an.U_star, an.G, an.B, an.L, an.diam

    def put(name, ok, value, note):
        out[name] = Bound(value if ok else None, bool(ok), note)

    if not G > 0:
        for name in ("unconstrained", "constrained"):
            for part in ("under_D", "under_R", "over"):
                put(f"{name}.{part}", False, None, "G <= 0: no inducibility margin")
        return out
    fam = an.meta.get("family", "")

    if not an.constrained:
        ok = delta < G
        put("unconstrained.under_D", ok, U - diam * L * delta / G, "delta < G")
        put("unconstrained.under_R", ok and (B == 0 or delta < diam * G * L / (2 * B)),
            U - 2 * math.sqrt(2 * B * L * diam * delta / G), "delta < min(G, diam*G*L/(2B))")
        put("unconstrained.over", ok, U + diam * L * delta / G, "delta < G")
        if an.norm_used == "l1" and fam in ("stackelberg", ""):
            put("stackelberg.under_R", ok, U - 4 * B * math.sqrt(delta / G), "delta < G")
            put("stackelberg.over", ok, U + 2 * B * delta / G, "delta < G")
        if fam == "contract_box":
            R, P = an.meta["R"], an.meta["P"]
            put("contract_box.under_R", delta < P * G / (2 * (R + P)),
                U - 2 * math.sqrt(2 * (R + P) * P * delta / G), "delta < P*G/(2(R+P))")
            put("contract_box.over", ok, U + P * delta / G, "delta < G")
        if fam == "contract_expected":
            R = an.meta["R"]
            put("contract_expected.under_R", delta < G / 2, U - 4 * R * math.sqrt(delta / G), "delta < G/2")
            put("contract_expected.over", ok, U + R * delta / G, "delta < G")
        return out

    dist = an.dist_C_boundary
    if not dist or dist <= 0 or diam <= 0:
        for part in ("under_D", "under_R", "over"):
            put(f"constrained.{part}", False, None, "mean point on the boundary")
    else:
        K = diam * L + 2 * B * diam / dist
        ok = delta < dist * G / diam
        put("constrained.under_D", ok, U - K * delta / G, "delta < dist*G/diam")
        put("constrained.under_R", ok, U - 2 * math.sqrt(2 * B * K * delta / G), "delta < dist*G/diam")
        put("constrained.over", ok, U + K * delta / G, "delta < dist*G/diam")
    if fam == "persuasion" and an.p0 is not None and an.p0 > 0:
        p0 = an.p0
        ok = delta < G * p0 / 2
        c = 1 + 2 / p0
        put("persuasion.under_D", ok, U - 2 * B * c * delta / G, "delta < G*p0/2")
        put("persuasion.under_R", ok, U - 4 * B * math.sqrt(c * delta / G), "delta < G*p0/2")
        put("persuasion.over", ok, U + 2 * B * c * delta / G, "delta < G*p0/2")
    return out


def randomized_from_deterministic_bound(under_D_at_Delta: float, B: float, delta: float, Delta: float) -> float:
    """Lower bound on UnderR(delta) from UnderD(Delta): subtract 2*B*delta/Delta."""
    if Delta <= 0:
        raise GameError("Delta must be positive")
    return under_D_at_Delta - 2 * B * delta / Delta
