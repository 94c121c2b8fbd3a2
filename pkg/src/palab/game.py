"""Game representation for generalized principal-agent problems.

The principal picks a finite distribution over (signal, decision) pairs,
the agent maps signals to action distributions, and both utilities are
affine in the principal's decision::

    u(x, a) = u_off[a] + x @ u_lin[:, a]
    v(x, a) = v_off[a] + x @ v_lin[:, a]

Bayesian persuasion embeds by taking decisions to be posterior beliefs on
the probability simplex, with the mean of the decisions pinned to the
prior (Bayes plausibility).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

FEAS_TOL = 1e-9
MEAN_TOL = 1e-8
TIE_TOL = 1e-12
DROP_TOL = 1e-12


class GameError(ValueError):
    """Invalid game data or an operation applied to incompatible objects."""


class DimensionError(GameError):
    def __init__(self, axis: str, expected, got):
        self.axis = axis
        self.expected = expected
        self.got = got
        super().__init__(f"dimension mismatch on {axis}: expected {expected}, got {got}")


@dataclass(frozen=True)
class DecisionSpace:
    """Convex compact decision set: a probability simplex or an axis box.

    Norm pairing is fixed per kind: simplex uses l1, box uses l-infinity.
    """

    kind: str
    d: int
    lo: Optional[np.ndarray] = None
    hi: Optional[np.ndarray] = None

    @classmethod
    def simplex(cls, d: int) -> "DecisionSpace":
        if int(d) < 1:
            raise GameError("simplex dimension must be positive")
        return cls("simplex", int(d))

    @classmethod
    def box(cls, lo, hi) -> "DecisionSpace":
        lo = np.asarray(lo, dtype=float).ravel()
        hi = np.asarray(hi, dtype=float).ravel()
        if lo.shape != hi.shape:
            raise DimensionError("box bounds", lo.shape, hi.shape)
        if np.any(lo > hi) or not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise GameError("box needs finite bounds with lo <= hi")
        lo.setflags(write=False)
        hi.setflags(write=False)
        return cls("box", lo.size, lo, hi)

    @property
    def norm(self) -> str:
        return "l1" if self.kind == "simplex" else "linf"

    def contains(self, x, tol: float = FEAS_TOL) -> bool:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.d,):
            return False
        if self.kind == "simplex":
            return bool(np.all(x >= -tol) and abs(x.sum() - 1.0) <= tol)
        return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))

    def vertices(self) -> np.ndarray:
        """All extreme points (box: 2**d corners, so only for small d)."""
        if self.kind == "simplex":
            return np.eye(self.d)
        corners = np.array(np.meshgrid(*[[0, 1]] * self.d, indexing="ij")).reshape(self.d, -1).T
        return self.lo + corners * (self.hi - self.lo)

    def diameter(self) -> float:
        if self.kind == "simplex":
            return 2.0 if self.d > 1 else 0.0
        return float(np.max(self.hi - self.lo)) if self.d else 0.0

    def boundary_distance(self, c) -> float:
        """Distance from ``c`` to the relative boundary, in the paired norm.

        Simplex: reaching the face ``x_i = 0`` in l1 costs ``2 * c_i``.
        """
        c = np.asarray(c, dtype=float)
        if self.kind == "simplex":
            return 2.0 * float(c.min()) if self.d > 1 else 0.0
        return float(np.min(np.minimum(c - self.lo, self.hi - c)))

    def ray_exit(self, start, target) -> float:
        """Largest t >= 0 with ``start + t*(target - start)`` still feasible.

        Returns ``inf`` when the direction is zero.
        """
        start = np.asarray(start, dtype=float)
        direction = np.asarray(target, dtype=float) - start
        if np.max(np.abs(direction)) <= 1e-15:
            return np.inf
        if self.kind == "simplex":
            neg = direction < -1e-15
            if not np.any(neg):
                return np.inf
            return float(np.min(np.maximum(start[neg], 0.0) / -direction[neg]))
        ts = []
        up = direction > 1e-15
        down = direction < -1e-15
        if np.any(up):
            ts.append(np.min((self.hi[up] - start[up]) / direction[up]))
        if np.any(down):
            ts.append(np.min((self.lo[down] - start[down]) / direction[down]))
        return float(max(min(ts), 0.0))

    def project_clip(self, x) -> np.ndarray:
        """Remove rounding noise from a point that is feasible up to tolerance."""
        x = np.asarray(x, dtype=float)
        if self.kind == "simplex":
            x = np.maximum(x, 0.0)
            return x / x.sum()
        return np.clip(x, self.lo, self.hi)


@dataclass(frozen=True)
class Instance:
    """A generalized principal-agent game ``(space, actions, u, v, constraint)``.

    ``mean`` is ``None`` (unconstrained) or the point every principal strategy
    must average to. ``meta`` carries provenance such as the family name and
    contract constants; it does not affect any computation here.
    """

    space: DecisionSpace
    actions: tuple
    u_lin: np.ndarray
    u_off: np.ndarray
    v_lin: np.ndarray
    v_off: np.ndarray
    n_signals: int
    mean: Optional[np.ndarray] = None
    name: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        d, n = self.space.d, len(self.actions)
        for label, arr, shape in (
            ("u_lin", self.u_lin, (d, n)),
            ("v_lin", self.v_lin, (d, n)),
            ("u_off", self.u_off, (n,)),
            ("v_off", self.v_off, (n,)),
        ):
            a = np.asarray(arr, dtype=float)
            if a.shape != shape:
                raise DimensionError(label, shape, a.shape)
            if not np.all(np.isfinite(a)):
                raise GameError(f"{label} has non-finite entries")
            a = a.copy()
            a.setflags(write=False)
            object.__setattr__(self, label, a)
        if n < 1:
            raise GameError("need at least one action")
        if len(set(self.actions)) != n:
            raise GameError("action names must be unique")
        object.__setattr__(self, "actions", tuple(self.actions))
        if self.n_signals < n:
            raise GameError(f"n_signals={self.n_signals} is below |A|={n}")
        if self.mean is not None:
            c0 = np.asarray(self.mean, dtype=float).copy()
            if c0.shape != (d,):
                raise DimensionError("mean constraint", (d,), c0.shape)
            if not self.space.contains(c0):
                raise GameError("mean constraint point is not in the decision space")
            c0.setflags(write=False)
            object.__setattr__(self, "mean", c0)

    @property
    def n_actions(self) -> int:
        return len(self.actions)

    @property
    def d(self) -> int:
        return self.space.d

    @property
    def constrained(self) -> bool:
        return self.mean is not None

    def u(self, x) -> np.ndarray:
        """Principal utility of every action at decision(s) ``x`` (..., d)."""
        return np.asarray(x, dtype=float) @ self.u_lin + self.u_off

    def v(self, x) -> np.ndarray:
        """Agent utility of every action at decision(s) ``x`` (..., d)."""
        return np.asarray(x, dtype=float) @ self.v_lin + self.v_off

    def utility_bound(self) -> float:
        """B = max |u(x, a)| over the space (attained at a vertex)."""
        if self.space.kind == "simplex":
            return float(np.max(np.abs(self.u_lin + self.u_off)))
        lo, hi = self.space.lo, self.space.hi
        top = self.u_off + np.maximum(lo[:, None] * self.u_lin, hi[:, None] * self.u_lin).sum(0)
        bot = self.u_off + np.minimum(lo[:, None] * self.u_lin, hi[:, None] * self.u_lin).sum(0)
        return float(max(np.max(np.abs(top)), np.max(np.abs(bot))))

    def agent_range(self) -> tuple[float, float]:
        """Smallest and largest value of v over the space and actions."""
        if self.space.kind == "simplex":
            vals = self.v_lin + self.v_off
            return float(vals.min()), float(vals.max())
        lo, hi = self.space.lo, self.space.hi
        top = self.v_off + np.maximum(lo[:, None] * self.v_lin, hi[:, None] * self.v_lin).sum(0)
        bot = self.v_off + np.minimum(lo[:, None] * self.v_lin, hi[:, None] * self.v_lin).sum(0)
        return float(bot.min()), float(top.max())

    def lipschitz(self) -> float:
        """Largest dual norm of a principal utility gradient column."""
        if self.space.norm == "l1":
            return float(np.max(np.abs(self.u_lin))) if self.u_lin.size else 0.0
        return float(np.max(np.abs(self.u_lin).sum(axis=0)))


@dataclass(frozen=True)
class PersuasionInstance:
    """Bayesian persuasion with finite states, given by state-action tables."""

    states: tuple
    actions: tuple
    prior: np.ndarray
    sender_u: np.ndarray
    receiver_v: np.ndarray
    n_signals: int
    name: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        k, n = len(self.states), len(self.actions)
        prior = np.asarray(self.prior, dtype=float).copy()
        if prior.shape != (k,):
            raise DimensionError("prior", (k,), prior.shape)
        if np.any(prior < 0) or abs(prior.sum() - 1.0) > FEAS_TOL:
            raise GameError("prior must be a probability vector")
        prior.setflags(write=False)
        object.__setattr__(self, "prior", prior)
        for label in ("sender_u", "receiver_v"):
            a = np.asarray(getattr(self, label), dtype=float).copy()
            if a.shape != (k, n):
                raise DimensionError(label, (k, n), a.shape)
            a.setflags(write=False)
            object.__setattr__(self, label, a)
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "actions", tuple(self.actions))
        if self.n_signals < n:
            raise GameError(f"n_signals={self.n_signals} is below |A|={n}")

    @property
    def p0(self) -> float:
        return float(self.prior.min())

    def to_generalized(self) -> Instance:
        k, n = len(self.states), len(self.actions)
        return Instance(
            space=DecisionSpace.simplex(k),
            actions=self.actions,
            u_lin=self.sender_u,
            u_off=np.zeros(n),
            v_lin=self.receiver_v,
            v_off=np.zeros(n),
            n_signals=self.n_signals,
            mean=self.prior,
            name=self.name,
            meta={"family": "persuasion", "states": list(self.states), **self.meta},
        )


@dataclass(frozen=True)
class PrincipalStrategy:
    """Finite distribution over signals with one decision per signal.

    ``signals`` holds integer labels; they are the contexts a learning agent
    sees, so they survive dropping zero-probability entries.
    """

    probs: np.ndarray
    decisions: np.ndarray
    signals: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float).ravel().copy()
        x = np.atleast_2d(np.asarray(self.decisions, dtype=float)).copy()
        s = np.asarray(self.signals, dtype=int).ravel().copy()
        if x.shape[0] != p.size:
            raise DimensionError("signals (decision rows)", p.size, x.shape[0])
        if s.size != p.size:
            raise DimensionError("signals (labels)", p.size, s.size)
        if len(set(s.tolist())) != s.size or np.any(s < 0):
            raise GameError("signal labels must be distinct non-negative integers")
        if np.any(p < -FEAS_TOL) or abs(p.sum() - 1.0) > FEAS_TOL:
            raise GameError(f"signal probabilities must sum to 1 (got {p.sum():.12g})")
        for a in (p, x, s):
            a.setflags(write=False)
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "decisions", x)
        object.__setattr__(self, "signals", s)

    @classmethod
    def from_pairs(cls, pairs: Sequence, signals: Optional[Sequence[int]] = None):
        probs = [float(p) for p, _ in pairs]
        xs = [np.atleast_1d(np.asarray(x, dtype=float)) for _, x in pairs]
        if signals is None:
            signals = range(len(pairs))
        return cls(np.array(probs), np.array(xs), np.array(list(signals)))

    @classmethod
    def single(cls, x, signal: int = 0):
        return cls(np.ones(1), np.atleast_2d(np.asarray(x, dtype=float)), np.array([signal]))

    @property
    def k(self) -> int:
        return self.probs.size

    @property
    def mean(self) -> np.ndarray:
        return self.probs @ self.decisions

    def max_signal(self) -> int:
        return int(self.signals.max()) + 1

    def validate(self, inst: Instance) -> None:
        if self.decisions.shape[1] != inst.d:
            raise DimensionError("decision dimension", inst.d, self.decisions.shape[1])
        for i, x in enumerate(self.decisions):
            if not inst.space.contains(x):
                raise GameError(f"decision of signal {int(self.signals[i])} is infeasible")
        if inst.mean is not None:
            err = float(np.max(np.abs(self.mean - inst.mean)))
            if err > MEAN_TOL:
                raise GameError(f"mean constraint violated by {err:.3g}")


@dataclass(frozen=True)
class AgentStrategy:
    """Row-stochastic map from signal rows to action distributions.

    Row ``i`` responds to the ``i``-th entry of the principal strategy it is
    paired with (not to the signal label).
    """

    rows: np.ndarray

    def __post_init__(self):
        r = np.atleast_2d(np.asarray(self.rows, dtype=float)).copy()
        if np.any(r < -FEAS_TOL) or np.any(np.abs(r.sum(axis=1) - 1.0) > FEAS_TOL):
            raise GameError("each agent strategy row must be a probability distribution")
        r = np.maximum(r, 0.0)
        r.setflags(write=False)
        object.__setattr__(self, "rows", r)

    @classmethod
    def pure(cls, actions: Sequence[int], n_actions: int) -> "AgentStrategy":
        rows = np.zeros((len(actions), n_actions))
        rows[np.arange(len(actions)), list(actions)] = 1.0
        return cls(rows)

    @property
    def deterministic(self) -> bool:
        return bool(np.all(np.isclose(self.rows.max(axis=1), 1.0, atol=FEAS_TOL)))

    def actions(self) -> np.ndarray:
        return self.rows.argmax(axis=1)


def _check_pair(inst: Instance, pi: PrincipalStrategy, rho: AgentStrategy) -> None:
    if pi.decisions.shape[1] != inst.d:
        raise DimensionError("decision dimension", inst.d, pi.decisions.shape[1])
    if rho.rows.shape[0] != pi.k:
        raise DimensionError("signals", pi.k, rho.rows.shape[0])
    if rho.rows.shape[1] != inst.n_actions:
        raise DimensionError("actions", inst.n_actions, rho.rows.shape[1])


def principal_utility(inst: Instance, pi: PrincipalStrategy, rho: AgentStrategy) -> float:
    """U(pi, rho) = sum_s pi_s sum_a rho(a|s) u(x_s, a)."""
    _check_pair(inst, pi, rho)
    return float(pi.probs @ np.sum(rho.rows * inst.u(pi.decisions), axis=1))


def agent_utility(inst: Instance, pi: PrincipalStrategy, rho: AgentStrategy) -> float:
    """V(pi, rho) = sum_s pi_s sum_a rho(a|s) v(x_s, a)."""
    _check_pair(inst, pi, rho)
    return float(pi.probs @ np.sum(rho.rows * inst.v(pi.decisions), axis=1))


def best_response_set(inst: Instance, x, delta: float = 0.0) -> frozenset:
    """Indices of the delta-optimal actions at decision ``x``.

    Ties within 1e-12 are all reported; breaking them is the caller's job.
    """
    if delta < 0:
        raise GameError("delta must be non-negative")
    x = np.asarray(x, dtype=float)
    if not inst.space.contains(x):
        raise GameError("decision is not in the decision space")
    vals = inst.v(x)
    return frozenset(np.flatnonzero(vals >= vals.max() - delta - TIE_TOL).tolist())


def exact_best_response(inst: Instance, pi: PrincipalStrategy, tie: str = "favorable") -> AgentStrategy:
    """A deterministic best response, ties broken for or against the principal.

    ``tie`` is ``"favorable"``, ``"adversarial"`` or ``"first"``.
    """
    v = inst.v(pi.decisions)
    u = inst.u(pi.decisions)
    ok = v >= v.max(axis=1, keepdims=True) - TIE_TOL
    if tie == "favorable":
        pick = np.where(ok, u, -np.inf).argmax(axis=1)
    elif tie == "adversarial":
        pick = np.where(ok, u, np.inf).argmin(axis=1)
    elif tie == "first":
        pick = ok.argmax(axis=1)
    else:
        raise GameError(f"unknown tie rule {tie!r}")
    return AgentStrategy.pure(pick, inst.n_actions)


def agent_suboptimality(inst: Instance, pi: PrincipalStrategy, rho: AgentStrategy) -> float:
    """V(pi, rho*) - V(pi, rho): how far ``rho`` is from best responding."""
    v = inst.v(pi.decisions)
    return float(pi.probs @ (v.max(axis=1) - np.sum(rho.rows * v, axis=1)))


def scheme_to_decomposition(p: PersuasionInstance, scheme) -> PrincipalStrategy:
    """Signaling scheme (|states| x |signals|, rows sum to 1) -> posteriors.

    Posterior of signal s is mu0 * scheme[:, s] / pi_s; signals sent with
    probability below 1e-12 are dropped but keep their column index as label.
    """
    scheme = np.asarray(scheme, dtype=float)
    if scheme.ndim != 2 or scheme.shape[0] != len(p.states):
        raise DimensionError("scheme rows (states)", len(p.states), scheme.shape[0] if scheme.ndim else 0)
    if np.any(scheme < -FEAS_TOL) or np.any(np.abs(scheme.sum(axis=1) - 1.0) > FEAS_TOL):
        raise GameError("scheme rows must be probability distributions")
    probs, posts, keep = posteriors_from_scheme(p.prior, np.maximum(scheme, 0.0))
    return PrincipalStrategy(probs, posts, keep)


def decomposition_to_scheme(p: PersuasionInstance, pi: PrincipalStrategy, n_columns: Optional[int] = None) -> np.ndarray:
    """Posteriors -> signaling scheme with scheme(s|w) = pi_s mu_s(w) / mu0(w).

    Columns are indexed by signal label. States with zero prior get an
    arbitrary row (all mass on the first listed signal).
    """
    if pi.decisions.shape[1] != len(p.states):
        raise DimensionError("posterior dimension", len(p.states), pi.decisions.shape[1])
    err = float(np.max(np.abs(pi.mean - p.prior)))
    if err > 1e-6:
        raise GameError(f"Bayes plausibility violated by {err:.3g}")
    width = max(pi.max_signal(), n_columns or 0)
    scheme = np.zeros((len(p.states), width))
    pos = p.prior > 0
    joint = (pi.probs[:, None] * pi.decisions).T
    scheme[np.ix_(pos, pi.signals)] = joint[pos] / p.prior[pos, None]
    scheme[~pos, pi.signals[0]] = 1.0
    scheme = np.maximum(scheme, 0.0)
    return scheme / scheme.sum(axis=1, keepdims=True)


def mean_correction(space: DecisionSpace, c0, mu) -> tuple[float, np.ndarray]:
    """Weight ``eta`` and point ``z`` on the ray from ``mu`` through ``c0``.

    ``z`` is where the ray leaves the space, so ``(1 - eta) * mu + eta * z``
    equals ``c0``. Returns ``(0, c0)`` when ``mu`` already equals ``c0``.
    """
    c0 = np.asarray(c0, dtype=float)
    mu = np.asarray(mu, dtype=float)
    t = space.ray_exit(mu, c0)
    if not np.isfinite(t):
        return 0.0, c0.copy()
    t = max(t, 1.0)
    z = space.project_clip(mu + t * (c0 - mu))
    return 1.0 / t, z


def with_mean(space: DecisionSpace, c0, pi: PrincipalStrategy) -> PrincipalStrategy:
    """Append the ray-correction signal so that ``pi`` averages to ``c0``."""
    eta, z = mean_correction(space, c0, pi.mean)
    if eta <= 0.0:
        return pi
    probs = np.append((1.0 - eta) * pi.probs, eta)
    xs = np.vstack([pi.decisions, z])
    labels = np.append(pi.signals, pi.max_signal())
    return PrincipalStrategy(probs, xs, labels)


def posteriors_from_scheme(c0, scheme) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Posterior decomposition of a scheme around the prior ``c0``.

    Returns (probs, posteriors, kept column indices); columns sent with
    probability below 1e-12 are dropped.
    """
    joint = np.asarray(c0, dtype=float)[:, None] * scheme
    probs = joint.sum(axis=0)
    keep = np.flatnonzero(probs >= DROP_TOL)
    posts = (joint[:, keep] / probs[keep]).T
    return probs[keep] / probs[keep].sum(), posts, keep
