"""Perturbation constructions on principal strategies.

Each construction moves decisions toward the anchor points ``y_a`` (where
action ``a`` beats every other action by the inducibility gap G) and, for
mean-constrained instances, restores the mean with one extra signal placed
where the ray from the perturbed mean through the target leaves the space.
Outputs may use more signals than ``inst.n_signals``; the returned
parameters record when that happens.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .game import (
    TIE_TOL,
    AgentStrategy,
    GameError,
    Instance,
    PrincipalStrategy,
    agent_suboptimality,
    mean_correction,
)
from .solvers import InstanceAnalysis


@dataclass(frozen=True)
class RobustSchemeParams:
    theta: float
    eta: float
    z: np.ndarray
    eps: float
    n_signals_used: int
    expanded: bool


def _correct(inst: Instance, probs, xs, labels):
    """Append the ray-correction signal when the instance pins the mean."""
    if not inst.constrained:
        return probs, xs, labels, 0.0, None
    mu = probs @ xs
    if np.max(np.abs(mu - inst.mean)) <= 1e-15:
        return probs, xs, labels, 0.0, inst.mean.copy()
    eta, z = mean_correction(inst.space, inst.mean, mu)
    if eta <= 0:
        return probs, xs, labels, 0.0, z
    probs = np.append((1 - eta) * probs, eta)
    xs = np.vstack([xs, z])
    labels = np.append(labels, int(np.max(labels)) + 1)
    return probs, xs, labels, eta, z


def _margins(inst, xs, acts):
    out = np.empty(len(acts))
    for i, a in enumerate(acts):
        v = inst.v(xs[i])
        rest = np.delete(v, a)
        out[i] = v[a] - rest.max() if rest.size else math.inf
    return out


def build_robust_scheme(inst: Instance, an: InstanceAnalysis, pi_opt: PrincipalStrategy,
                        rho_opt: AgentStrategy, delta: float, eps: float | None = None):
    """Shift each decision toward the anchor of its recommended action.

    With theta = delta/G + eps every recommended action beats all others by
    more than ``delta`` at the shifted decision. Returns (strategy, params).
    """
    G = an.G
    if not G > 0:
        raise GameError("robust scheme needs a positive inducibility gap")
    if delta < 0 or delta >= G:
        raise GameError(f"robust scheme needs 0 <= delta < G = {G:.6g}, got {delta}")
    if eps is None:
        eps = 1e-3 * G
    if eps <= 0:
        raise GameError("eps must be positive")
    acts = rho_opt.actions()
    theta = min(1.0, delta / G + eps)
    for attempt in range(2):
        xs = (1 - theta) * pi_opt.decisions + theta * an.anchors[acts]
        xs = np.array([inst.space.project_clip(x) for x in xs])
        if np.all(_margins(inst, xs, acts) > delta + 1e-9):
            break
        if attempt == 0:
            theta = min(1.0, theta + 1e-9 * max(1.0, theta))
    else:
        raise GameError("robust scheme margin check failed after retry")
    probs, xs, labels, eta, z = _correct(inst, pi_opt.probs.copy(), xs, pi_opt.signals.copy())
    out = PrincipalStrategy(probs, xs, labels)
    used = int(out.max_signal())
    params = RobustSchemeParams(theta, eta, z if z is not None else np.array([]), eps, used, used > inst.n_signals)
    return out, params


def embed_exact_br(inst: Instance, an: InstanceAnalysis, pi: PrincipalStrategy, rho: AgentStrategy):
    """Split each signal by the agent's action and make that action exactly optimal.

    Signal (s, a) carries weight pi_s * rho(a|s) and decision
    (1 - t) x_s + t y_a with t = gap/(G + gap), where gap is the
    suboptimality of a at x_s. Labels are ``signal*|A| + a``; the mean
    correction signal, if any, comes last and the agent best responds there
    (ties for the principal). Returns (pi', rho', info).
    """
    G = an.G
    if not G > 0:
        raise GameError("embedding needs a positive inducibility gap")
    n = inst.n_actions
    V = inst.v(pi.decisions)
    gaps = V.max(axis=1, keepdims=True) - V
    gaps[gaps <= TIE_TOL] = 0.0
    probs, xs, labels, acts = [], [], [], []
    for i in range(pi.k):
        for a in range(n):
            w = pi.probs[i] * rho.rows[i, a]
            if w <= 0:
                continue
            g = gaps[i, a]
            t = g / (G + g) if g > 0 else 0.0
            probs.append(w)
            xs.append(inst.space.project_clip((1 - t) * pi.decisions[i] + t * an.anchors[a]))
            labels.append(int(pi.signals[i]) * n + a)
            acts.append(a)
    probs = np.array(probs)
    probs /= probs.sum()
    xs = np.array(xs)
    labels = np.array(labels)
    probs, xs, labels, eta, z = _correct(inst, probs, xs, labels)
    if eta > 0:
        v = inst.v(z)
        ok = v >= v.max() - TIE_TOL
        acts.append(int(np.where(ok, inst.u(z), -np.inf).argmax()))
    out = PrincipalStrategy(probs, xs, labels)
    rho2 = AgentStrategy.pure(acts, n)
    V2 = inst.v(xs)
    margin = float(np.min(V2[np.arange(len(acts)), acts] - V2.max(axis=1)))
    info = {
        "delta": float(pi.probs @ np.sum(rho.rows * gaps, axis=1)),
        "eta": eta,
        "min_margin": margin,
        "n_signals_used": int(out.max_signal()),
    }
    return out, rho2, info


def filter_to_delta_optimal(inst: Instance, pi: PrincipalStrategy, rho: AgentStrategy, Delta: float):
    """Renormalize each row of ``rho`` onto the Delta-optimal actions.

    Rows with no mass there become uniform over them; their positions are
    returned in ``flagged``.
    """
    if Delta <= 0:
        raise GameError("Delta must be positive")
    V = inst.v(pi.decisions)
    ok = V >= V.max(axis=1, keepdims=True) - Delta - TIE_TOL
    rows = np.where(ok, rho.rows, 0.0)
    mass = rows.sum(axis=1)
    flagged = np.flatnonzero(mass <= 0).tolist()
    for i in flagged:
        rows[i] = ok[i] / ok[i].sum()
    mass = rows.sum(axis=1, keepdims=True)
    return AgentStrategy(rows / mass), flagged


def filter_bound(inst: Instance, an: InstanceAnalysis, pi: PrincipalStrategy, rho: AgentStrategy, Delta: float) -> float:
    """2 B delta / Delta with delta the measured suboptimality of ``rho``."""
    return 2 * an.B * agent_suboptimality(inst, pi, rho) / Delta


def embed_constant(an: InstanceAnalysis) -> float:
    """Utility loss per unit of delta/G in the exact-best-response embedding."""
    if an.constrained:
        return an.diam * an.L + 2 * an.B * an.diam / an.dist_C_boundary
    return an.diam * an.L
