"""The acceptance suite: twelve numbered checks plus a negative control.

Each check returns a :class:`CheckResult`; ``run_all`` prints one line per
check. Long simulation checks are driven by the spec files shipped in
``palab/data/specs/acceptance`` so that every number can be reproduced with
``palab run``.
"""

from __future__ import annotations

import dataclasses
import filecmp
import math
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import constructions, experiments, io, learners, oracles, sim, solvers
from .game import (
    AgentStrategy,
    PersuasionInstance,
    agent_suboptimality,
    agent_utility,
    best_response_set,
    exact_best_response,
    principal_utility,
)
from .instances import PRESETS, example_5_1, load_preset, theorem_3_7_instance

DATA = Path(__file__).parent / "data"
SPEC_DIR = DATA / "specs"
ACCEPT_DIR = SPEC_DIR / "acceptance"


@dataclass
class CheckResult:
    key: str
    title: str
    passed: bool
    detail: str = ""
    seconds: float = 0.0
    budget: float = math.inf
    values: dict = field(default_factory=dict)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        slow = "" if self.seconds <= self.budget else f" (over {self.budget:g}s budget)"
        return f"[{tag}] {self.key:>2} {self.title}: {self.detail} [{self.seconds:.1f}s{slow}]"


def _gen(inst):
    return inst.to_generalized() if isinstance(inst, PersuasionInstance) else inst


def _all_presets():
    return {name: _gen(load_preset(name)) for name in PRESETS}


# ------------------------------------------------------------------ checks

def check_stackelberg_values():
    u1 = solvers.analyze(_gen(example_5_1(0.3))).U_star
    u2 = solvers.analyze(_gen(theorem_3_7_instance(0.04))).U_star
    ok = abs(u1 - 0.6) <= 1e-9 and abs(u2) <= 1e-9
    return ok, f"U*(example_5_1, 0.3) = {u1:.12f}, U*(mean-based instance, 0.04) = {u2:.3g}", {"u1": u1, "u2": u2}


def check_inducibility_gap():
    inst = _gen(example_5_1(0.3))
    G, anchors = solvers.inducibility_gap(inst)
    Gg, _ = oracles.gap_grid(inst, 1e-4)
    anchors_ok = np.allclose(anchors, [[1.0, 0.0], [0.0, 1.0]], atol=1e-9)
    ok = abs(G - 1) <= 1e-6 and abs(G - Gg) <= 1e-6 and anchors_ok
    return ok, f"G = {G:.9f}, grid G = {Gg:.9f}, anchors degenerate: {anchors_ok}", {"G": G, "grid": Gg}


def _lp_cases(seed=11, n_random=40):
    rng = np.random.default_rng(seed)
    cases = []
    for inst in _all_presets().values():
        if inst.d <= 3 and inst.n_actions <= 3:
            cases.append(inst)
    cases += [oracles.random_simplex_instance(rng) for _ in range(n_random)]
    return cases, rng


def check_lp_vs_bruteforce():
    cases, rng = _lp_cases()
    worst, n = 0.0, 0
    for inst in cases:
        pis = [solvers.analyze(inst).witness[0]] + [oracles.random_strategy(inst, rng) for _ in range(2)]
        for pi in pis:
            for dl in (0.0, 0.01, 0.1, 0.5):
                for randomized in (True, False):
                    _, lo = solvers.worst_case_delta_br(inst, pi, dl, randomized)
                    _, hi = solvers.best_case_delta_br(inst, pi, dl, randomized)
                    blo = oracles.inner_bruteforce(inst, pi, dl, "min", randomized)
                    bhi = oracles.inner_bruteforce(inst, pi, dl, "max", randomized)
                    worst = max(worst, abs(lo - blo), abs(hi - bhi))
                    n += 2
    return worst <= 1e-6, f"{n} inner problems on {len(cases)} instances, max |LP - enumeration| = {worst:.2e}", \
        {"max_err": worst}


def check_example51_sandwich():
    worst_up, worst_lo, rows = -np.inf, -np.inf, []
    for mu in (0.1, 0.3):
        res = solvers.search_objectives(_gen(example_5_1(mu)), [0.005, 0.02], budget=1000)
        for j, dl in enumerate((0.005, 0.02)):
            up, lo, _ = solvers.example51_analytic(mu, dl)
            ur, orr = res.values["UnderR"][j], res.values["OverR"][j]
            worst_up = max(worst_up, ur - (up + 1e-6))
            worst_lo = max(worst_lo, (lo - 2e-3) - orr)
            rows.append((mu, dl, ur, up, orr, lo))
    ok = worst_up <= 0 and worst_lo <= 0
    txt = "; ".join(f"mu0={m} d={d}: UnderR {a:.5f} <= {b:.5f}, OverR {c:.5f} >= {e:.5f}" for m, d, a, b, c, e in rows)
    return ok, txt, {"rows": rows}


def check_objective_chain():
    rng = np.random.default_rng(23)
    insts = list(_all_presets().values()) + [oracles.random_simplex_instance(rng) for _ in range(50)]
    deltas = [0.0, 0.005, 0.02, 0.1]
    bad = []
    for i, inst in enumerate(insts):
        res = solvers.search_objectives(inst, deltas, budget=200, seed=i)
        if not res.chain_ok().all():
            bad.append(inst.name or str(i))
    return not bad, f"{len(insts)} instances x {len(deltas)} deltas, chain violations: {len(bad)}", {"bad": bad}


def _spec_report(name, out_dir=None):
    spec = io.load_spec(ACCEPT_DIR / f"{name}.json")
    return experiments.run_spec(spec, out_dir)


def check_regret_sublinear():
    rep = _spec_report("regret_sublinear")
    Ts = np.array([r["T"] for r in rep["results"]], dtype=float)
    med = np.array([r["creg_per_round"]["median"] for r in rep["results"]])
    dec = bool(np.all(np.diff(med) < 0))
    slope = float(np.polyfit(np.log(Ts), np.log(med * Ts), 1)[0]) if np.all(med > 0) else float("nan")
    ok = dec and 0.4 <= slope <= 0.75
    txt = "median creg/T " + ", ".join(f"{m:.3e}" for m in med) + f"; log-log slope {slope:.3f}"
    return ok, txt, {"median_rate": med.tolist(), "slope": slope}


def _check_from(rep, theorem):
    for r in rep["results"]:
        for c in r["checks"]:
            if c["theorem"] == theorem:
                return c
    raise KeyError(theorem)


def check_robust_lower():
    rep = _spec_report("robust_fixed_lower")
    c = _check_from(rep, "regret_lower")
    ok = c["status"] == sim.PASS
    return ok, (f"mean u {c['measured']:.4f} >= bound {c['rhs']:.4f} - 3 SE ({c['se']:.4f}), "
                f"creg/T {c['creg_per_round']:.2e}"), c


def check_swap_upper():
    rep = _spec_report("swap_upper")
    c = _check_from(rep, "swap_upper")
    ok = c["status"] == sim.PASS
    return ok, (f"mean u {c['measured']:.4f} <= cap {c['rhs']:.4f} + 3 SE ({c['se']:.4f}), "
                f"csreg/T {c['csreg_per_round']:.2e}"), c


def check_mean_based():
    rep = _spec_report("mean_based_gain")
    c = _check_from(rep, "mean_based_gain")
    ok = c["status"] == sim.PASS
    return ok, (f"mean sender utility {c['measured']:.4f} (need >= {c['threshold']} and > U* + 10 SE, "
                f"SE {c['se']:.4f})"), c


def check_constructions():
    rng = np.random.default_rng(31)
    worst_margin, worst_embed, worst_filter, n = np.inf, -np.inf, -np.inf, 0
    while n < 50:
        inst = oracles.random_simplex_instance(rng)
        an = solvers.analyze(inst)
        if not an.G > 0:
            continue
        pi = oracles.random_strategy(inst, rng)
        rho = AgentStrategy(rng.dirichlet(np.ones(inst.n_actions), size=pi.k))
        delta = agent_suboptimality(inst, pi, rho)
        pi2, rho2, info = constructions.embed_exact_br(inst, an, pi, rho)
        worst_margin = min(worst_margin, info["min_margin"])
        lhs = principal_utility(inst, pi2, rho2)
        rhs = principal_utility(inst, pi, rho) - constructions.embed_constant(an) * delta / an.G - 1e-6
        worst_embed = max(worst_embed, rhs - lhs)
        Delta = float(rng.choice([0.05, 0.2, 0.5]))
        rho3, _ = constructions.filter_to_delta_optimal(inst, pi, rho, Delta)
        shift = abs(principal_utility(inst, pi, rho3) - principal_utility(inst, pi, rho))
        worst_filter = max(worst_filter, shift - (2 * an.B * delta / Delta + 1e-9))
        n += 1
    ok = worst_margin >= -1e-9 and worst_embed <= 0 and worst_filter <= 0
    return ok, (f"50 pairs: min best-response margin {worst_margin:.2e}, worst embed slack {worst_embed:.2e}, "
                f"worst filter slack {worst_filter:.2e}"), {}


def check_static_agents():
    inst = _gen(example_5_1(0.3))
    pi = solvers.analyze(inst).witness[0]
    rho = learners.StaticAgent("quantal", lam=100.0).strategy(inst, pi)
    best = agent_utility(inst, pi, exact_best_response(inst, pi))
    gap = best - agent_utility(inst, pi, rho)
    cap = (1 + math.log(2 * 100)) / 100
    rng = np.random.default_rng(41)
    for _ in range(50):
        p = oracles.random_strategy(inst, rng)
        rho = learners.StaticAgent("quantal", lam=100.0).strategy(inst, p)
        gap = max(gap, agent_utility(inst, p, exact_best_response(inst, p)) - agent_utility(inst, p, rho))
    member = True
    for _ in range(200):
        cand = inst if rng.random() < 0.3 else oracles.random_simplex_instance(rng)
        p = oracles.random_strategy(cand, rng)
        eps = float(rng.choice([0.0, 0.01, 0.05, 0.2]))
        acts = learners.StaticAgent("inaccurate_belief", eps=eps).strategy(cand, p).actions()
        for x, a in zip(p.decisions, acts):
            member &= int(a) in best_response_set(cand, x, 2 * eps)
    ok = gap <= cap and member
    return ok, f"largest quantal V-gap {gap:.4f} <= {cap:.4f}; inaccurate-belief actions within 2*eps: {member}", \
        {"gap": gap, "cap": cap}


def check_determinism():
    specs = sorted(SPEC_DIR.glob("*.json"))
    bad = []
    with tempfile.TemporaryDirectory() as tmp:
        for path in specs:
            spec = io.load_spec(path)
            dirs = []
            for k in range(2):
                d = Path(tmp) / f"{path.stem}_{k}"
                experiments.run_spec(spec, d)
                dirs.append(d)
            files = sorted(p.relative_to(dirs[0]) for p in dirs[0].rglob("*") if p.is_file())
            for f in files:
                if not filecmp.cmp(dirs[0] / f, dirs[1] / f, shallow=False):
                    bad.append(f"{path.stem}/{f}")
    return not bad, f"{len(specs)} shipped specs run twice, differing files: {len(bad)}", {"bad": bad}


def negative_control():
    """The exact fixed-strategy check must fail when the analysis uses a wrong utility matrix."""
    real = example_5_1(0.3)
    spoiled = dataclasses.replace(real, sender_u=np.array([[2.0, 0.0], [2.0, 0.0]]))
    cfg = sim.SimConfig(real, {"kind": "robust_fixed", "params": {"margin": 0.1}},
                        {"kind": "exact"}, 4096, 0, sim.PERSUASION)
    log = sim.run(cfg)
    gen = _gen(spoiled)
    rep = sim.bound_check(log, solvers.analyze(gen), "fixed_exact", instance=gen)
    return rep.status == sim.FAIL, f"perturbed-utility fixture gives status {rep.status!r} (expected 'fail')", \
        rep.to_dict()


CHECKS = [
    ("1", "Stackelberg values", check_stackelberg_values, 1),
    ("2", "inducibility gap", check_inducibility_gap, 1),
    ("3", "LP vs brute force", check_lp_vs_bruteforce, 30),
    ("4", "two-state example sandwich", check_example51_sandwich, 120),
    ("5", "objective chain", check_objective_chain, 120),
    ("6", "regret sublinearity", check_regret_sublinear, 120),
    ("7", "robust fixed scheme lower bound", check_robust_lower, 300),
    ("8", "swap-regret upper cap", check_swap_upper, 600),
    ("9", "mean-based exploitation", check_mean_based, 300),
    ("10", "construction guarantees", check_constructions, 60),
    ("11", "static approximate agents", check_static_agents, 10),
    ("12", "determinism", check_determinism, 60),
    ("neg", "negative control", negative_control, 60),
]


def run_check(key: str) -> CheckResult:
    for k, title, fn, budget in CHECKS:
        if k == key:
            t = time.perf_counter()
            ok, detail, values = fn()
            return CheckResult(k, title, bool(ok), detail, time.perf_counter() - t, budget, values)
    raise KeyError(f"unknown check {key!r}; available: {[c[0] for c in CHECKS]}")


def run_all(keys=None, printer=print) -> list:
    out = []
    for k, *_ in CHECKS:
        if keys and k not in keys:
            continue
        res = run_check(k)
        if printer:
            printer(res.line())
        out.append(res)
    return out
