"""Repeated principal-agent game engine.

Each round: an adaptive policy reads the learner's mixed strategy, the
policy commits to a strategy, nature draws the signal (in persuasion mode a
state first, then a signal from the scheme implied by the posteriors), the
agent acts, feedback is routed by the learner's mode, and the regret ledger
records the expected reward vector v(x_s, .) of the realized signal.

All randomness comes from counter-based draws keyed by (seed, replica,
stream, round), so every round can be replayed in isolation and replica
results do not depend on scheduling.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import constructions, learners, principals, solvers
from .game import (
    GameError,
    Instance,
    PersuasionInstance,
    PrincipalStrategy,
    decomposition_to_scheme,
)
from .rng import AGENT_STREAM, ENV_STREAM, hash_key, uniform_array

GENERALIZED = "generalized"
PERSUASION = "persuasion"
WORKERS_ENV = "PALAB_WORKERS"

LEARNER_KINDS = ("exp3", "swap", "ftl_threshold", "mwu")
STATIC_KINDS = ("exact", "quantal", "inaccurate_belief", "adversarial", "favorable")
POLICY_KINDS = ("fixed", "robust_fixed", "mean_exploiter", "adaptive")


@dataclass
class SimConfig:
    instance: object
    policy: dict
    learner: dict
    T: int
    seed: int = 0
    mode: str = GENERALIZED
    replicas: int = 1

    def __post_init__(self):
        if int(self.T) < 1:
            raise GameError("T must be at least 1")
        self.T = int(self.T)
        if self.mode not in (GENERALIZED, PERSUASION):
            raise GameError(f"unknown mode {self.mode!r}")
        if self.mode == PERSUASION and not isinstance(self.instance, PersuasionInstance):
            raise GameError("persuasion mode needs a persuasion instance")
        if self.policy.get("kind") not in POLICY_KINDS:
            raise GameError(f"unknown policy kind {self.policy.get('kind')!r}; expected one of {POLICY_KINDS}")
        kind = self.learner.get("kind")
        if kind not in LEARNER_KINDS + STATIC_KINDS:
            raise GameError(f"unknown learner kind {kind!r}; expected one of {LEARNER_KINDS + STATIC_KINDS}")
        if int(self.replicas) < 1:
            raise GameError("replicas must be at least 1")

    @property
    def generalized(self) -> Instance:
        inst = self.instance
        return inst.to_generalized() if isinstance(inst, PersuasionInstance) else inst


@dataclass
class RunLog:
    T: int
    n_actions: int
    s: np.ndarray
    omega: np.ndarray
    x_index: np.ndarray
    a: np.ndarray
    u: np.ndarray
    v: np.ndarray
    R: np.ndarray
    u_exp: np.ndarray
    creg: float
    csreg: float
    info: dict = field(default_factory=dict)

    @property
    def avg_u(self) -> float:
        return float(self.u.mean())

    @property
    def avg_u_exp(self) -> float:
        return float(self.u_exp.mean())

    @property
    def avg_v(self) -> float:
        return float(self.v.mean())

    def summary(self) -> dict:
        return {
            "T": self.T,
            "avg_u": self.avg_u,
            "avg_u_expected": self.avg_u_exp,
            "avg_v": self.avg_v,
            "creg": self.creg,
            "csreg": self.csreg,
            "creg_per_round": self.creg / self.T,
            "csreg_per_round": self.csreg / self.T,
            **{k: v for k, v in self.info.items() if isinstance(v, (int, float, str))},
        }

    def write_csv(self, path) -> None:
        n = self.n_actions
        head = "t,s,omega,x_index,a,u,v," + ",".join(f"r_{j}" for j in range(n))
        lines = [head]
        for t in range(self.T):
            row = [str(t), str(int(self.s[t])), str(int(self.omega[t])), str(int(self.x_index[t])),
                   str(int(self.a[t])), repr(float(self.u[t])), repr(float(self.v[t]))]
            row += [repr(float(x)) for x in self.R[t]]
            lines.append(",".join(row))
        with open(path, "w", newline="\n") as f:
            f.write("\n".join(lines) + "\n")


def _cum(p):
    out, acc = [], 0.0
    for x in p:
        acc += x
        out.append(acc)
    return out


def _draw(cum, u):
    for i, c in enumerate(cum):
        if u < c:
            return i
    for i in range(len(cum) - 1, -1, -1):
        if i == 0 or cum[i] > cum[i - 1]:
            return i
    return len(cum) - 1


class _Compiled:
    """Per-strategy lookup tables for the inner loop."""

    __slots__ = ("pi", "cum", "labels", "rows_by_state", "r", "uexp", "static")

    def __init__(self, inst: Instance, pi: PrincipalStrategy, pers: Optional[PersuasionInstance]):
        self.pi = pi
        self.cum = _cum(pi.probs.tolist())
        self.labels = [int(s) for s in pi.signals]
        self.r = inst.v(pi.decisions).tolist()
        self.uexp = inst.u(pi.decisions).tolist()
        self.rows_by_state = None
        self.static = None
        if pers is not None:
            scheme = decomposition_to_scheme(pers, pi)
            cols = [int(s) for s in pi.signals]
            self.rows_by_state = [_cum(scheme[w, cols].tolist()) for w in range(len(pers.states))]


def _range_for(cfg: SimConfig):
    if cfg.mode == PERSUASION:
        p = cfg.instance
        return float(p.receiver_v.min()), float(p.receiver_v.max())
    return cfg.generalized.agent_range()


def make_agent(cfg: SimConfig, K: int, replica: int = 0):
    lc = cfg.learner
    kind = lc["kind"]
    params = dict(lc.get("params", {}))
    inst = cfg.generalized
    n = inst.n_actions
    lseed = int(lc.get("seed", 0))
    if kind in STATIC_KINDS:
        return learners.StaticAgent(kind, **params)
    rr = _range_for(cfg)
    if kind == "exp3":
        mode = lc.get("feedback_mode", learners.BANDIT)
        return learners.PerContext(lambda s: learners.Exp3(n, rr, cfg.T, lseed, s, mode), K)
    if kind == "swap":
        mode = lc.get("feedback_mode", learners.FULL_INFO)
        return learners.PerContext(lambda s: learners.SwapLearner(n, rr, cfg.T, mode, lseed, s), K)
    if lc.get("feedback_mode", learners.FULL_INFO) != learners.FULL_INFO:
        raise GameError("mean-based learners need full-information feedback")
    gamma = float(params.get("gamma", 0.01))
    return learners.mean_based_learner(n, gamma, kind, lseed, K, horizon=cfg.T)


def make_policy(cfg: SimConfig, analysis=None, replica: int = 0):
    pc = cfg.policy
    kind = pc["kind"]
    params = dict(pc.get("params", {}))
    inst = cfg.generalized
    if kind == "mean_exploiter":
        if not isinstance(cfg.instance, PersuasionInstance):
            raise GameError("the two-phase exploiter needs a persuasion instance")
        return principals.MeanBasedExploiter(cfg.instance, cfg.T)
    if kind == "adaptive":
        return principals.AdaptiveExploiter(inst, params.get("n_signals"))
    an = analysis if analysis is not None else solvers.analyze(inst)
    if kind == "fixed":
        return principals.FixedPolicy(_strategy_param(inst, an, params.get("strategy", "stackelberg")))
    # robust_fixed
    pi_opt, rho_opt = an.witness
    info = {}
    if "margin" in params:
        margin = float(params["margin"])
    else:
        delta = params.get("delta", "pilot")
        if delta == "pilot":
            # Short pilot runs against robust schemes estimate the regret
            # rate; creg grows like sqrt(T), so per-round regret is rescaled.
            frac = float(params.get("pilot_fraction", 1 / 16))
            Tp = max(64, int(cfg.T * frac))
            margin = 0.5 * an.G
            for it in range(int(params.get("pilot_rounds", 2))):
                pilot = SimConfig(cfg.instance, {"kind": "robust_fixed", "params": {"margin": margin}},
                                  cfg.learner, Tp, hash_key(cfg.seed, 0x5EED, it), cfg.mode)
                log = run(pilot, replica, record=False, analysis=an)
                delta = log.creg / Tp * math.sqrt(Tp / cfg.T)
                margin = _balanced_margin(an, delta)
            info["pilot_T"] = Tp
        delta = float(delta)
        info["delta_estimate"] = delta
        margin = _balanced_margin(an, delta)
    margin = min(margin, 0.9 * an.G)
    pi, par = constructions.build_robust_scheme(inst, an, pi_opt, rho_opt, margin, params.get("eps"))
    info.update({"delta": margin, "theta": par.theta, "eta": par.eta})
    return principals.FixedPolicy(pi, info)


def _balanced_margin(an, delta: float) -> float:
    """Margin balancing the loss K*margin/G against 2*B*delta/margin."""
    K = constructions.embed_constant(an)
    if K <= 0 or an.B <= 0:
        return min(delta, 0.9 * an.G)
    return min(max(math.sqrt(2 * an.B * delta * an.G / K), delta), 0.9 * an.G)


def _strategy_param(inst: Instance, an, spec) -> PrincipalStrategy:
    if spec == "stackelberg":
        return an.witness[0]
    if spec == "no_info":
        if inst.constrained:
            return PrincipalStrategy.single(inst.mean)
        raise GameError("no_info strategy needs a mean-constrained instance")
    if isinstance(spec, dict):
        pi = PrincipalStrategy(np.array(spec["probs"], dtype=float), np.array(spec["decisions"], dtype=float),
                               np.array(spec.get("signals", range(len(spec["probs"])))))
        pi.validate(inst)
        return pi
    raise GameError(f"unknown strategy {spec!r}")


def run(cfg: SimConfig, replica: int = 0, record: bool = True, analysis=None) -> RunLog:
    """Play ``cfg.T`` rounds for one replica."""
    inst = cfg.generalized
    pers = cfg.instance if cfg.mode == PERSUASION else None
    n = inst.n_actions
    T = cfg.T
    policy = make_policy(cfg, analysis, replica)
    K = max(inst.n_signals, policy.n_signals)
    agent = make_agent(cfg, K, replica)
    static = isinstance(agent, learners.StaticAgent)
    bandit = (not static) and agent.mode == learners.BANDIT
    adaptive = policy.visibility == principals.AGENT_MIXED
    lseed = int(cfg.learner.get("seed", 0))

    steps = np.arange(T)
    u_state = uniform_array(cfg.seed, replica, ENV_STREAM, steps, 0).tolist()
    u_sig = uniform_array(cfg.seed, replica, ENV_STREAM, steps, 1).tolist()
    u_act = uniform_array(cfg.seed, replica, AGENT_STREAM, lseed, steps).tolist()

    if pers is not None:
        prior_cum = _cum(pers.prior.tolist())
        Us = pers.sender_u.tolist()
        Vs = pers.receiver_v.tolist()

    ledger = learners.RegretLedger(K, n)
    cache = {}
    s_log = [0] * T
    w_log = [-1] * T
    i_log = [0] * T
    a_log = [0] * T
    u_log = [0.0] * T
    v_log = [0.0] * T
    ue_log = [0.0] * T
    R_log = [None] * T if record else None

    for t in range(T):
        try:
            rho = agent.mixed_strategy() if adaptive else None
            pi = policy.next(t, rho)
            comp = cache.get(id(pi))
            if comp is None or comp.pi is not pi:
                comp = _Compiled(inst, pi, pers)
                if static:
                    comp.static = [_cum(row) for row in agent.strategy(inst, pi).rows.tolist()]
                cache[id(pi)] = comp
            if pers is not None:
                w = _draw(prior_cum, u_state[t])
                i = _draw(comp.rows_by_state[w], u_sig[t])
            else:
                w = -1
                i = _draw(comp.cum, u_sig[t])
            s = comp.labels[i]
            if static:
                a = _draw(comp.static[i], u_act[t])
            else:
                a = agent.choose(s, u_act[t])
            r = comp.r[i]
            ue = comp.uexp[i][a]
            if pers is not None:
                uu, vv, vec = Us[w][a], Vs[w][a], Vs[w]
            else:
                uu, vv, vec = ue, r[a], r
            if not static:
                agent.feed(s, a, vv if bandit else vec)
            ledger.record(s, a, r)
        except GameError as exc:
            raise GameError(f"round {t}: {exc}") from exc
        s_log[t], w_log[t], i_log[t], a_log[t] = s, w, i, a
        u_log[t], v_log[t], ue_log[t] = uu, vv, ue
        if record:
            R_log[t] = r

    info = dict(getattr(policy, "info", {}))
    info["contexts"] = K
    if isinstance(policy, principals.FixedPolicy):
        info["fixed_strategy"] = policy.pi
    R = np.array(R_log) if record else np.zeros((0, n))
    return RunLog(T, n, np.array(s_log), np.array(w_log), np.array(i_log), np.array(a_log),
                  np.array(u_log), np.array(v_log), R, np.array(ue_log),
                  ledger.creg(), ledger.csreg(), info)


# -------------------------------------------------------------- replicas

def _run_one(args):
    cfg, replica, record = args
    log = run(cfg, replica, record)
    return log


def workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


@dataclass
class ReplicaSummary:
    logs: list
    avg_u: np.ndarray
    avg_u_exp: np.ndarray
    creg: np.ndarray
    csreg: np.ndarray
    T: int

    @property
    def n(self):
        return len(self.logs)

    def stat(self, which: str = "avg_u_exp") -> dict:
        x = getattr(self, which)
        se = float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0
        m = float(x.mean())
        return {"mean": m, "median": float(np.median(x)), "se": se, "ci95": (m - 1.96 * se, m + 1.96 * se)}


def run_many(jobs, record: bool = True) -> list:
    """Run (config, replica) jobs; results come back in job order."""
    jobs = [(cfg, r, record) for cfg, r in jobs]
    nw = min(workers(), len(jobs))
    if nw > 1:
        import multiprocessing as mp

        with mp.get_context("spawn").Pool(nw) as pool:
            return pool.map(_run_one, jobs)
    return [_run_one(j) for j in jobs]


def run_replicas(cfg: SimConfig, record: bool = True, replica_ids=None) -> ReplicaSummary:
    """Run replicas 0..cfg.replicas-1 and reduce them in index order."""
    ids = list(range(cfg.replicas)) if replica_ids is None else list(replica_ids)
    return summarize(run_many([(cfg, r) for r in ids], record))


def summarize(logs) -> ReplicaSummary:
    return ReplicaSummary(
        logs,
        np.array([lg.avg_u for lg in logs]),
        np.array([lg.avg_u_exp for lg in logs]),
        np.array([lg.creg for lg in logs]),
        np.array([lg.csreg for lg in logs]),
        logs[0].T,
    )


# ---------------------------------------------------------------- checks

THEOREMS = ("regret_lower", "swap_upper", "fixed_exact", "mean_based_gain")
PASS, FAIL, INAPPLICABLE = "pass", "fail", "inapplicable"


@dataclass
class BoundReport:
    theorem: str
    status: str
    measured: float
    rhs: Optional[float]
    se: float
    margin: Optional[float]
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status == PASS

    def to_dict(self) -> dict:
        return {"theorem": self.theorem, "status": self.status, "measured": self.measured,
                "rhs": self.rhs, "se": self.se, "margin": self.margin, **self.details}


def _lower_name(an) -> str:
    fam = an.meta.get("family", "")
    if fam == "persuasion" and an.p0 is not None and an.p0 > 0:
        return "persuasion.under_R"
    if fam in ("contract_box", "contract_expected"):
        return f"{fam}.under_R"
    if fam == "stackelberg" and not an.constrained:
        return "stackelberg.under_R"
    return ("constrained" if an.constrained else "unconstrained") + ".under_R"


def _upper_name(an) -> str:
    return _lower_name(an).replace("under_R", "over")


def _empirical(log: RunLog) -> PrincipalStrategy:
    pi = log.info.get("fixed_strategy")
    if pi is None:
        raise GameError("the exact check needs a fixed principal strategy")
    counts = np.bincount(log.x_index, minlength=pi.k).astype(float)
    keep = counts > 0
    return PrincipalStrategy(counts[keep] / counts.sum(), pi.decisions[keep], pi.signals[keep])


def bound_check(result, analysis, theorem: str, threshold: float = 0.25, k_se: float = 3.0,
                instance=None) -> BoundReport:
    """Compare measured average utility with a theorem right-hand side.

    The right-hand side is evaluated per replica at the measured regret of
    that replica and then averaged; the comparison allows ``k_se`` standard
    errors of the replica mean.
    """
    if theorem not in THEOREMS:
        raise GameError(f"unknown check {theorem!r}; expected one of {THEOREMS}")
    summ = summarize([result]) if isinstance(result, RunLog) else result
    T = summ.T
    st = summ.stat("avg_u_exp")
    m, se = st["mean"], st["se"]
    an = analysis
    det = {"T": T, "replicas": summ.n, "U_star": an.U_star, "G": an.G,
           "creg_per_round": float(summ.creg.mean() / T), "csreg_per_round": float(summ.csreg.mean() / T)}

    if theorem in ("regret_lower", "swap_upper"):
        lower = theorem == "regret_lower"
        name = _lower_name(an) if lower else _upper_name(an)
        regs = (summ.creg if lower else summ.csreg) / T
        vals = []
        for dlt in regs:
            b = solvers.theorem_bounds(an, float(dlt)).get(name)
            if b is None or not b.applicable:
                det.update(bound=name, note=b.note if b else "no such bound")
                return BoundReport(theorem, INAPPLICABLE, m, None, se, None, det)
            vals.append(b.value)
        rhs = float(np.mean(vals))
        det["bound"] = name
        if lower:
            margin = m - (rhs - k_se * se)
        else:
            margin = (rhs + k_se * se) - m
        return BoundReport(theorem, PASS if margin >= 0 else FAIL, m, rhs, se, margin, det)

    if theorem == "fixed_exact":
        inst = instance
        if inst is None:
            raise GameError("the exact check needs the instance")
        worst = np.inf
        for log in summ.logs:
            pi = _empirical(log)
            _, val = solvers.worst_case_delta_br(inst, pi, log.creg / log.T)
            worst = min(worst, log.avg_u_exp - val)
        return BoundReport(theorem, PASS if worst >= -1e-9 else FAIL, m, m - worst, se, worst, det)

    # mean_based_gain
    floor = max(threshold, an.U_star + 10 * se)
    margin = m - floor if se > 0 or summ.n == 1 else m - threshold
    det.update(threshold=threshold, z_over_U_star=(m - an.U_star) / se if se > 0 else None)
    ok = m >= threshold and (m > an.U_star + 10 * se)
    return BoundReport(theorem, PASS if ok else FAIL, m, floor, se, margin, det)
