"""Principal-side policies for the repeated game.

A policy has a ``visibility`` level and ``next(t, rho)`` returning the
round's :class:`PrincipalStrategy`. Only ``agent_mixed_strategy`` policies
receive ``rho`` (the learner's per-context action distributions, read
before the principal commits).
"""

from __future__ import annotations

import numpy as np

from . import lp
from .game import GameError, Instance, PersuasionInstance, PrincipalStrategy

NONE = "none"
HISTORY = "history"
AGENT_MIXED = "agent_mixed_strategy"


class FixedPolicy:
    visibility = NONE

    def __init__(self, pi: PrincipalStrategy, info: dict | None = None):
        self.pi = pi
        self.n_signals = pi.max_signal()
        self.info = info or {}

    def next(self, t, rho=None):
        return self.pi


def fixed_policy(pi: PrincipalStrategy) -> FixedPolicy:
    return FixedPolicy(pi)


class MeanBasedExploiter:
    """Two-phase state-to-signal map for two-state persuasion instances.

    Rounds 0 .. ceil(T/2)-1 send signal 0 in state 0 and signal 1 in state 1;
    the remaining rounds swap the two signals.
    """

    visibility = NONE
    n_signals = 2

    def __init__(self, p: PersuasionInstance, T: int | None):
        if T is None or T < 1:
            raise GameError("the two-phase exploiter needs the horizon T")
        if len(p.states) != 2:
            raise GameError("the two-phase exploiter needs exactly two states")
        self.T = int(T)
        self.switch = (self.T + 1) // 2
        mu = p.prior
        e = np.eye(2)
        self.first = PrincipalStrategy(np.array([mu[0], mu[1]]), e, np.array([0, 1]))
        self.second = PrincipalStrategy(np.array([mu[1], mu[0]]), e[::-1].copy(), np.array([0, 1]))

    def next(self, t, rho=None):
        return self.first if t < self.switch else self.second

    def signal_for(self, t, state):
        """Signal sent in round ``t`` (0-indexed) when the state is ``state``."""
        return state if t < self.switch else 1 - state


def mean_based_exploiter(p: PersuasionInstance, T: int | None) -> MeanBasedExploiter:
    return MeanBasedExploiter(p, T)


class AdaptiveExploiter:
    """Best response of the principal to the agent's current mixed strategy.

    Maximizes U(pi, rho) over strategies on ``n_signals`` signals. The
    objective is linear in (y_s, pi_s) = (pi_s x_s, pi_s); for simplex spaces
    it has a closed form (each unit of mean mass goes to the signal with the
    best weight), otherwise an LP is solved. Ties go to the lowest signal.
    """

    visibility = AGENT_MIXED

    def __init__(self, inst: Instance, n_signals: int | None = None, method: str = "auto"):
        self.inst = inst
        self.n_signals = int(n_signals or inst.n_signals)
        self.method = method
        self._memo = {}
        self._ulin = inst.u_lin.tolist()
        self._uoff = inst.u_off.tolist()

    def _weights(self, rho):
        n, d = self.inst.n_actions, self.inst.d
        W, c = [], []
        for s in range(self.n_signals):
            r = rho[s]
            W.append([sum(r[a] * self._ulin[i][a] for a in range(n)) for i in range(d)])
            c.append(sum(r[a] * self._uoff[a] for a in range(n)))
        return W, c

    def next(self, t, rho):
        if rho is None:
            raise GameError("adaptive exploiter needs the agent's mixed strategy")
        inst = self.inst
        if self.method == "lp" or inst.space.kind != "simplex":
            return self.solve_lp(rho)[0]
        W, c = self._weights(rho)
        d = inst.d
        if inst.constrained:
            key = []
            for i in range(d):
                best, arg = None, 0
                for s in range(self.n_signals):
                    val = W[s][i] + c[s]
                    if best is None or val > best + 1e-15:
                        best, arg = val, s
                key.append(arg)
            key = tuple(key)
        else:
            best, key = None, None
            for s in range(self.n_signals):
                for i in range(d):
                    val = W[s][i] + c[s]
                    if best is None or val > best + 1e-15:
                        best, key = val, (s, i)
        pi = self._memo.get(key)
        if pi is None:
            pi = self._build(key)
            self._memo[key] = pi
        return pi

    def _build(self, key):
        inst = self.inst
        d = inst.d
        if not inst.constrained:
            s, i = key
            x = np.zeros(d)
            x[i] = 1.0
            return PrincipalStrategy.single(x, signal=s)
        c0 = inst.mean
        sigs = sorted(set(key))
        probs, xs = [], []
        for s in sigs:
            y = np.array([c0[i] if key[i] == s else 0.0 for i in range(d)])
            if y.sum() <= 0:
                continue
            probs.append(y.sum())
            xs.append(y / y.sum())
        keep = [s for s in sigs if sum(c0[i] for i in range(d) if key[i] == s) > 0]
        return PrincipalStrategy(np.array(probs) / np.sum(probs), np.array(xs), np.array(keep))

    def value(self, pi: PrincipalStrategy, rho) -> float:
        """U(pi, rho) where rho rows are indexed by signal label."""
        u = self.inst.u(pi.decisions)
        rows = np.array([rho[s] for s in pi.signals])
        return float(pi.probs @ np.sum(rows * u, axis=1))

    def solve_lp(self, rho):
        """General LP route; returns (strategy, value)."""
        inst = self.inst
        K, d = self.n_signals, inst.d
        W, c = self._weights(rho)
        nv = K * d + K
        obj = np.zeros(nv)
        for s in range(K):
            obj[s * d:(s + 1) * d] = W[s]
            obj[K * d + s] = c[s]
        eq, eqb, ub, ubb = [], [], [], []
        row = np.zeros(nv)
        row[K * d:] = 1.0
        eq.append(row)
        eqb.append(1.0)
        if inst.constrained:
            for i in range(d):
                row = np.zeros(nv)
                row[i:K * d:d] = 1.0
                eq.append(row)
                eqb.append(inst.mean[i])
        if inst.space.kind == "simplex":
            for s in range(K):
                row = np.zeros(nv)
                row[s * d:(s + 1) * d] = 1.0
                row[K * d + s] = -1.0
                eq.append(row)
                eqb.append(0.0)
            lo = np.zeros(nv)
        else:
            for s in range(K):
                for i in range(d):
                    up = np.zeros(nv)
                    up[s * d + i] = 1.0
                    up[K * d + s] = -inst.space.hi[i]
                    dn = np.zeros(nv)
                    dn[s * d + i] = -1.0
                    dn[K * d + s] = inst.space.lo[i]
                    ub += [up, dn]
                    ubb += [0.0, 0.0]
            lo = np.concatenate([np.full(K * d, -np.inf), np.zeros(K)])
        sol = lp.require(lp.linprog(obj, np.array(ub) if ub else None, np.array(ubb) if ubb else None,
                                    np.array(eq), np.array(eqb), lo, np.inf, maximize=True),
                         "adaptive exploiter LP")
        y = sol.x[:K * d].reshape(K, d)
        w = np.maximum(sol.x[K * d:], 0.0)
        keep = np.flatnonzero(w > 1e-12)
        xs = np.array([inst.space.project_clip(y[s] / w[s]) for s in keep])
        pi = PrincipalStrategy(w[keep] / w[keep].sum(), xs, keep)
        return pi, float(sol.value)


def adaptive_exploiter(inst: Instance, n_signals: int | None = None) -> AdaptiveExploiter:
    return AdaptiveExploiter(inst, n_signals)
