"""Independent brute-force references for the LP-based routines.

Nothing here shares code with :mod:`palab.solvers`; these are slow,
exhaustive enumerations meant for cross-checking at tiny sizes.
"""

from __future__ import annotations

import itertools

import numpy as np

from .game import DecisionSpace, Instance, PrincipalStrategy


def inner_bruteforce(inst: Instance, pi: PrincipalStrategy, delta: float, sense: str, randomized: bool = True) -> float:
    """Min (sense='min') or max of U(pi, rho) over rho within delta of the best response.

    Deterministic: all |A|^k pure maps with per-signal gap <= delta.
    Randomized: the feasible set is a product of simplices cut by one
    halfspace, so its vertices are pure maps inside the halfspace plus the
    crossings of the halfspace with edges (pure maps differing in one signal).
    """
    U = inst.u(pi.decisions)
    V = inst.v(pi.decisions)
    gap = V.max(axis=1, keepdims=True) - V
    w = pi.probs
    k, n = U.shape
    pick = min if sense == "min" else max
    best = None
    maps = list(itertools.product(range(n), repeat=k))
    rows = np.arange(k)
    for m in maps:
        m = np.array(m)
        g = gap[rows, m]
        if not randomized:
            if np.all(g <= delta + 1e-12):
                val = float(w @ U[rows, m])
                best = val if best is None else pick(best, val)
            continue
        tot = float(w @ g)
        if tot <= delta + 1e-12:
            val = float(w @ U[rows, m])
            best = val if best is None else pick(best, val)
        for s in range(k):
            for b in range(n):
                if b == m[s]:
                    continue
                m2 = m.copy()
                m2[s] = b
                tot2 = float(w @ gap[rows, m2])
                if (tot - delta) * (tot2 - delta) < 0:
                    lam = (delta - tot) / (tot2 - tot)
                    val = (1 - lam) * float(w @ U[rows, m]) + lam * float(w @ U[rows, m2])
                    best = pick(best, val) if best is not None else val
    return float(best)


def gap_grid(inst: Instance, resolution: float = 1e-4):
    """Inducibility gap by grid over a 1-simplex or a box of dimension <= 2."""
    space = inst.space
    if space.kind == "simplex":
        if space.d != 2:
            raise ValueError("grid oracle covers the 1-simplex only")
        t = np.linspace(0.0, 1.0, int(round(1 / resolution)) + 1)
        pts = np.stack([t, 1 - t], axis=1)
    else:
        axes = [np.linspace(l, h, int(round(1 / resolution)) + 1) for l, h in zip(space.lo, space.hi)]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, space.d)
    V = inst.v(pts)
    n = inst.n_actions
    per = []
    anchors = []
    for a in range(n):
        others = np.delete(V, a, axis=1)
        m = V[:, a] - others.max(axis=1) if n > 1 else np.full(len(pts), np.inf)
        i = int(np.argmax(m))
        per.append(float(m[i]))
        anchors.append(pts[i])
    return min(per), np.array(anchors)


def stackelberg_grid(inst: Instance, resolution: float = 1e-3) -> float:
    """Unconstrained Stackelberg value by grid over a 1-simplex, ties to the principal."""
    t = np.linspace(0.0, 1.0, int(round(1 / resolution)) + 1)
    pts = np.stack([t, 1 - t], axis=1)
    V = inst.v(pts)
    U = inst.u(pts)
    ok = V >= V.max(axis=1, keepdims=True) - 1e-12
    return float(np.where(ok, U, -np.inf).max())


def random_simplex_instance(rng, d=None, n=None, constrained=None) -> Instance:
    d = int(rng.integers(2, 4)) if d is None else d
    n = int(rng.integers(2, 4)) if n is None else n
    constrained = bool(rng.random() < 0.5) if constrained is None else constrained
    mean = rng.dirichlet(np.full(d, 2.0)) if constrained else None
    return Instance(DecisionSpace.simplex(d), tuple(f"a{j}" for j in range(n)),
                    rng.uniform(-1, 1, (d, n)), 0.3 * rng.uniform(-1, 1, n),
                    rng.uniform(-1, 1, (d, n)), 0.3 * rng.uniform(-1, 1, n), n + 1, mean,
                    name="random")


def random_strategy(inst: Instance, rng, k=None) -> PrincipalStrategy:
    k = int(rng.integers(1, 5)) if k is None else k
    d = inst.d
    if inst.constrained:
        k = max(k, 2)
        S = rng.dirichlet(np.ones(k), size=d)
        joint = inst.mean[:, None] * S
        p = joint.sum(axis=0)
        keep = p > 1e-9
        X = (joint[:, keep] / p[keep]).T
        return PrincipalStrategy(p[keep] / p[keep].sum(), X, np.arange(int(keep.sum())))
    p = rng.dirichlet(np.ones(k))
    X = rng.dirichlet(np.ones(d), size=k) if inst.space.kind == "simplex" else \
        inst.space.lo + rng.random((k, d)) * (inst.space.hi - inst.space.lo)
    return PrincipalStrategy(p, X, np.arange(k))
