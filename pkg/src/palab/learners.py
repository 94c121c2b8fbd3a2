"""Agent-side algorithms and regret accounting.

Learners keep per-round work in plain Python floats: the action sets are
tiny and simulations run for 10^5+ rounds, so numpy call overhead would
dominate. Every learner exposes

* ``dist()``      current mixed strategy (list of floats),
* ``choose(u)``   sample by inversion from a uniform draw ``u`` (or from its
                  own counter-based stream when ``u`` is None),
* ``feed(a, fb)`` update with a scalar reward (bandit) or a reward vector
                  (full information).

:class:`PerContext` turns a single-context learner into a contextual one by
running an independent copy per signal.
"""

from __future__ import annotations

import math
from typing import Callable, Optional, Sequence

import numpy as np

from .game import AgentStrategy, GameError, Instance, PrincipalStrategy, exact_best_response
from .rng import LEARNER_STREAM, CounterRNG

BANDIT = "bandit"
FULL_INFO = "full_info"


def _sample(p, u: float) -> int:
    acc = 0.0
    for i, pi in enumerate(p):
        acc += pi
        if u < acc:
            return i
    for i in range(len(p) - 1, -1, -1):
        if p[i] > 0:
            return i
    return len(p) - 1


def _softmax(scores, eta):
    m = max(scores)
    w = [math.exp(eta * (s - m)) for s in scores]
    z = sum(w)
    return [x / z for x in w]


class _Base:
    mode = BANDIT

    def __init__(self, n_arms: int, r_range=(0.0, 1.0), seed: int = 0, context: int = 0):
        if n_arms < 1:
            raise GameError("need at least one arm")
        lo, hi = float(r_range[0]), float(r_range[1])
        if not hi > lo:
            hi = lo + 1.0
        self.n = int(n_arms)
        self.lo, self.scale = lo, hi - lo
        self.t = 0
        self._p = None
        self.rng = CounterRNG(seed, LEARNER_STREAM + context)

    def _rescale(self, r: float) -> float:
        x = (r - self.lo) / self.scale
        if x < -1e-9 or x > 1 + 1e-9:
            raise GameError(f"reward {r} outside declared range [{self.lo}, {self.lo + self.scale}]")
        return min(max(x, 0.0), 1.0)

    def choose(self, u: Optional[float] = None) -> int:
        if u is None:
            u = self.rng.random()
        return _sample(self.dist(), u)


class Exp3(_Base):
    """Exp3 with anytime rates eta_t = sqrt(ln n/(n t)), gamma_t = min(1, sqrt(n ln n/t)).

    Rewards are rescaled from the declared range to [0, 1]. Given a reward
    vector it falls back to a full-information exponential-weights update.
    """

    def __init__(self, n_arms, r_range=(0.0, 1.0), horizon_hint=None, seed=0, context=0, mode=BANDIT):
        super().__init__(n_arms, r_range, seed, context)
        self.mode = mode
        self.S = [0.0] * self.n

    def dist(self):
        if self._p is None:
            n = self.n
            if n == 1:
                self._p = [1.0]
            else:
                t = self.t + 1
                ln = math.log(n)
                if self.mode == BANDIT:
                    eta = math.sqrt(ln / (n * t))
                    gam = min(1.0, math.sqrt(n * ln / t))
                else:
                    eta, gam = math.sqrt(ln / t), 0.0
                q = _softmax(self.S, eta)
                self._p = [(1 - gam) * x + gam / n for x in q]
        return self._p

    def feed(self, a: int, fb) -> None:
        if isinstance(fb, (list, tuple, np.ndarray)):
            for i, r in enumerate(fb):
                self.S[i] += self._rescale(r)
        else:
            p = self.dist()
            self.S[a] += self._rescale(fb) / p[a]
        self.t += 1
        self._p = None


def stationary(Q) -> list:
    """Stationary distribution p = p Q of a row-stochastic matrix.

    Direct solve; on failure, power iteration from uniform (which keeps the
    uniform distribution for the identity matrix).
    """
    n = len(Q)
    if n == 1:
        return [1.0]
    if n == 2:
        a, b = Q[0][1], Q[1][0]
        s = a + b
        if s <= 1e-15:
            return [0.5, 0.5]
        return [b / s, a / s]
    M = np.asarray(Q, dtype=float)
    A = M.T - np.eye(n)
    A[-1] = 1.0
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    try:
        if abs(np.linalg.det(A)) < 1e-12:
            raise np.linalg.LinAlgError
        p = np.linalg.solve(A, rhs)
        if np.all(p >= -1e-10) and np.all(np.isfinite(p)):
            p = np.maximum(p, 0.0)
            return (p / p.sum()).tolist()
    except np.linalg.LinAlgError:
        pass
    p = np.full(n, 1.0 / n)
    for _ in range(100000):
        nxt = p @ M
        if np.max(np.abs(nxt - p)) < 1e-12:
            p = nxt
            break
        p = nxt
    if not np.all(np.isfinite(p)) or p.sum() <= 0:
        return [1.0 / n] * n
    return (p / p.sum()).tolist()


class SwapLearner(_Base):
    """Blum-Mansour reduction over ``n`` internal exponential-weights learners.

    Internal learner i proposes a distribution q_i; the played distribution is
    the stationary p of the matrix with rows q_i, and learner i is credited
    with p_i times the (estimated) reward vector. In bandit mode the estimate
    is importance weighted and every q_i mixes in gamma_t/n exploration.
    """

    def __init__(self, n_arms, r_range=(0.0, 1.0), horizon_hint=None, mode=FULL_INFO, seed=0, context=0):
        super().__init__(n_arms, r_range, seed, context)
        if mode not in (BANDIT, FULL_INFO):
            raise GameError(f"unknown feedback mode {mode!r}")
        self.mode = mode
        self.S = [[0.0] * self.n for _ in range(self.n)]

    def _rates(self):
        t = self.t + 1
        ln = math.log(self.n)
        if self.mode == BANDIT:
            return math.sqrt(ln / (self.n * t)), min(1.0, math.sqrt(self.n * ln / t))
        return math.sqrt(ln / t), 0.0

    def internal(self):
        n = self.n
        eta, gam = self._rates()
        return [[(1 - gam) * x + gam / n for x in _softmax(row, eta)] for row in self.S]

    def dist(self):
        if self._p is None:
            self._p = [1.0] if self.n == 1 else stationary(self.internal())
        return self._p

    def feed(self, a: int, fb) -> None:
        p = self.dist()
        if self.mode == FULL_INFO:
            if not isinstance(fb, (list, tuple, np.ndarray)):
                raise GameError("full-information swap learner needs a reward vector")
            vec = [self._rescale(r) for r in fb]
            for i in range(self.n):
                w = p[i]
                row = self.S[i]
                for j in range(self.n):
                    row[j] += w * vec[j]
        else:
            if isinstance(fb, (list, tuple, np.ndarray)):
                fb = fb[a]
            est = self._rescale(fb) / p[a]
            for i in range(self.n):
                self.S[i][a] += p[i] * est
        self.t += 1
        self._p = None


class FTLThreshold(_Base):
    """Follow the leader on cumulative realized rewards, uniform on ties.

    An arm trailing the leader by any positive amount is never played, so the
    rule is gamma-mean-based for every gamma > 0.
    """

    mode = FULL_INFO

    def __init__(self, n_arms, gamma=0.01, seed=0, context=0, tie_tol=1e-9):
        super().__init__(n_arms, (0.0, 1.0), seed, context)
        self.gamma = gamma
        self.tie_tol = tie_tol
        self.sigma = [0.0] * self.n

    def dist(self):
        if self._p is None:
            m = max(self.sigma)
            lead = [1.0 if s >= m - self.tie_tol else 0.0 for s in self.sigma]
            k = sum(lead)
            self._p = [x / k for x in lead]
        return self._p

    def feed(self, a, fb):
        if not isinstance(fb, (list, tuple, np.ndarray)):
            raise GameError("mean-based learners need full-information reward vectors")
        for i, r in enumerate(fb):
            self.sigma[i] += r
        self.t += 1
        self._p = None


class MWU(FTLThreshold):
    """Exponential weights on cumulative realized rewards, eta = sqrt(ln n / T)."""

    def __init__(self, n_arms, horizon, gamma=None, seed=0, context=0):
        super().__init__(n_arms, gamma, seed, context)
        if horizon is None or horizon < 1:
            raise GameError("mwu needs the horizon")
        self.eta = math.sqrt(math.log(max(self.n, 2)) / horizon)

    def dist(self):
        if self._p is None:
            self._p = _softmax(self.sigma, self.eta)
        return self._p


class PerContext:
    """Independent copy of a base learner per context (signal)."""

    def __init__(self, factory: Callable[[int], object], contexts: int):
        self.copies = [factory(s) for s in range(contexts)]
        self.mode = self.copies[0].mode if self.copies else BANDIT

    @property
    def n_contexts(self):
        return len(self.copies)

    def _get(self, s):
        if not 0 <= s < len(self.copies):
            raise GameError(f"unknown context {s}")
        return self.copies[s]

    def dist(self, s):
        return self._get(s).dist()

    def choose(self, s, u=None):
        return self._get(s).choose(u)

    def feed(self, s, a, fb):
        self._get(s).feed(a, fb)

    def mixed_strategy(self):
        """Current action distribution of every context (read by adaptive principals)."""
        return [c.dist() for c in self.copies]


def per_context_wrapper(base_factory, contexts: int) -> PerContext:
    return PerContext(base_factory, contexts)


def exp3(n_arms, horizon_hint=None, rng_seed=0, r_range=(0.0, 1.0), context=0, mode=BANDIT) -> Exp3:
    return Exp3(n_arms, r_range, horizon_hint, rng_seed, context, mode)


def swap_regret_learner(n_arms, horizon_hint=None, mode=FULL_INFO, rng_seed=0, r_range=(0.0, 1.0), context=0):
    return SwapLearner(n_arms, r_range, horizon_hint, mode, rng_seed, context)


def mean_based_learner(n_arms, gamma, variant="ftl_threshold", rng_seed=0, contexts=1, horizon=None) -> PerContext:
    if not 0 < gamma < 1:
        raise GameError("gamma must lie in (0, 1)")
    if variant == "ftl_threshold":
        return PerContext(lambda s: FTLThreshold(n_arms, gamma, rng_seed, s), contexts)
    if variant == "mwu":
        return PerContext(lambda s: MWU(n_arms, horizon, gamma, rng_seed, s), contexts)
    raise GameError(f"unknown mean-based variant {variant!r}")


# -------------------------------------------------------------- static agents

class StaticAgent:
    """Agent that responds to the principal's current strategy directly.

    It sees pi^t, so it is a privileged agent in the repeated game. Kinds:
    ``exact`` (tie rule), ``quantal`` (lam), ``inaccurate_belief`` (eps),
    ``adversarial`` and ``favorable`` (delta, randomized).
    """

    mode = "static"

    def __init__(self, kind: str, **params):
        if kind not in ("exact", "quantal", "inaccurate_belief", "adversarial", "favorable"):
            raise GameError(f"unknown static agent kind {kind!r}")
        if kind == "quantal" and not params.get("lam", 0) > 0:
            raise GameError("quantal response needs lam > 0")
        if kind == "inaccurate_belief" and params.get("eps", 0) < 0:
            raise GameError("eps must be non-negative")
        if kind in ("adversarial", "favorable") and params.get("delta", 0) < 0:
            raise GameError("delta must be non-negative")
        self.kind = kind
        self.params = params

    def strategy(self, inst: Instance, pi: PrincipalStrategy) -> AgentStrategy:
        k = self.kind
        if k == "exact":
            return exact_best_response(inst, pi, self.params.get("tie", "favorable"))
        if k == "quantal":
            lam = float(self.params["lam"])
            V = lam * inst.v(pi.decisions)
            W = np.exp(V - V.max(axis=1, keepdims=True))
            return AgentStrategy(W / W.sum(axis=1, keepdims=True))
        if k == "inaccurate_belief":
            eps = float(self.params.get("eps", 0.0))
            xs = np.array([perturb_belief(inst, x, eps) for x in pi.decisions])
            shifted = PrincipalStrategy(pi.probs, xs, pi.signals)
            return exact_best_response(inst, shifted, self.params.get("tie", "first"))
        from .solvers import best_case_delta_br, worst_case_delta_br

        fn = worst_case_delta_br if k == "adversarial" else best_case_delta_br
        rho, _ = fn(inst, pi, float(self.params.get("delta", 0.0)), bool(self.params.get("randomized", True)))
        return rho


def perturb_belief(inst: Instance, x, eps: float) -> np.ndarray:
    """Move eps/2 mass from the largest coordinate to the smallest (simplex only)."""
    if inst.space.kind != "simplex":
        raise GameError("inaccurate beliefs are defined on the simplex")
    x = np.asarray(x, dtype=float).copy()
    if eps <= 0 or x.size < 2:
        return x
    hi, lo = int(np.argmax(x)), int(np.argmin(x))
    if hi == lo:
        return x
    m = min(eps / 2, x[hi])
    x[hi] -= m
    x[lo] += m
    return x


def static_agent(kind: str, **params) -> StaticAgent:
    return StaticAgent(kind, **params)


# ---------------------------------------------------------------- regret ledger

class RegretLedger:
    """Running sums for contextual external and swap regret.

    Per context s: ``tot[s][a']`` sums r[a'] over rounds with context s, and
    ``got[s]`` sums the reward of the played action. Per cell (s, a): the
    same sums restricted to rounds where ``a`` was played.
    """

    def __init__(self, n_contexts: int, n_actions: int, keep_rounds: bool = False):
        self.K, self.n = n_contexts, n_actions
        self.tot = [[0.0] * n_actions for _ in range(n_contexts)]
        self.got = [0.0] * n_contexts
        self.cell = [[[0.0] * n_actions for _ in range(n_actions)] for _ in range(n_contexts)]
        self.cell_got = [[0.0] * n_actions for _ in range(n_contexts)]
        self.rounds = 0
        self.keep = keep_rounds
        self.records = [] if keep_rounds else None

    def record(self, s: int, a: int, r) -> None:
        if r is None or len(r) != self.n:
            raise GameError("ledger needs the full expected-reward vector every round")
        tot, cell = self.tot[s], self.cell[s][a]
        for j in range(self.n):
            rj = r[j]
            tot[j] += rj
            cell[j] += rj
        self.got[s] += r[a]
        self.cell_got[s][a] += r[a]
        self.rounds += 1
        if self.keep:
            self.records.append((s, a, tuple(r)))

    def creg(self) -> float:
        return sum(max(0.0, max(self.tot[s]) - self.got[s]) for s in range(self.K))

    def csreg(self) -> float:
        out = 0.0
        for s in range(self.K):
            for a in range(self.n):
                out += max(0.0, max(self.cell[s][a]) - self.cell_got[s][a])
        return out

    def per_context(self) -> list:
        return [max(0.0, max(self.tot[s]) - self.got[s]) for s in range(self.K)]


def measure_regret(ledger) -> tuple[float, float]:
    """(creg, csreg) from a ledger or from an (s, a, R) triple of arrays."""
    if isinstance(ledger, RegretLedger):
        return ledger.creg(), ledger.csreg()
    s, a, R = ledger
    return regret_from_arrays(s, a, R)


def regret_from_arrays(s, a, R) -> tuple[float, float]:
    s = np.asarray(s, dtype=int)
    a = np.asarray(a, dtype=int)
    R = np.asarray(R, dtype=float)
    if R.ndim != 2 or R.shape[0] != s.size or np.any(~np.isfinite(R)):
        raise GameError("ledger needs the full expected-reward vector every round")
    n = R.shape[1]
    K = int(s.max()) + 1 if s.size else 0
    got = R[np.arange(s.size), a]
    tot = np.zeros((K, n))
    np.add.at(tot, s, R)
    played = np.bincount(s, weights=got, minlength=K)
    creg = float(np.sum(np.maximum(0.0, tot.max(axis=1) - played)))
    cell = np.zeros((K, n, n))
    np.add.at(cell, (s, a), R)
    cell_got = np.zeros((K, n))
    np.add.at(cell_got, (s, a), got)
    csreg = float(np.sum(np.maximum(0.0, cell.max(axis=2) - cell_got)))
    return creg, csreg
