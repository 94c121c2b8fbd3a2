import math

import numpy as np
import pytest

from palab import sim, solvers
from palab.game import AgentStrategy, GameError, principal_utility
from palab.learners import StaticAgent, regret_from_arrays
from palab.sim import SimConfig


def cfg_for(inst, T, learner=None, policy=None, **kw):
    return SimConfig(inst, policy or {"kind": "fixed"}, learner or {"kind": "exp3"}, T, **kw)


def test_single_round_is_deterministic(ex51):
    a = sim.run(cfg_for(ex51, 1, seed=4))
    b = sim.run(cfg_for(ex51, 1, seed=4))
    assert a.T == 1 and a.s.tolist() == b.s.tolist() and a.a.tolist() == b.a.tolist()
    assert a.creg >= 0 and a.csreg >= a.creg - 1e-12


def test_exact_agent_earns_stackelberg_value(ex51):
    T = 10_000
    log = sim.run(cfg_for(ex51, T, {"kind": "exact"}, seed=1))
    sd = math.sqrt(0.6 * 0.4 / T)
    assert abs(log.avg_u_exp - 0.6) <= 3 * sd
    assert log.creg == pytest.approx(0.0, abs=1e-9)


def test_persuasion_and_generalized_modes_agree(ex51):
    T = 20_000
    g = sim.run(cfg_for(ex51, T, {"kind": "exact"}, seed=2))
    p = sim.run(cfg_for(ex51, T, {"kind": "exact"}, seed=2, mode=sim.PERSUASION))
    sd = math.sqrt(0.24 / T)
    assert abs(g.avg_u_exp - p.avg_u_exp) <= 5 * sd
    # in persuasion mode states are drawn and the realized sender payoff is logged
    assert set(np.unique(p.omega)) <= {0, 1} and np.all(g.omega == -1)
    assert abs(p.avg_u - p.avg_u_exp) <= 5 * sd


def test_persuasion_mode_needs_persuasion_instance(ex51g):
    with pytest.raises(GameError):
        cfg_for(ex51g, 10, mode=sim.PERSUASION)


def test_config_validation(ex51):
    with pytest.raises(GameError, match="T must"):
        cfg_for(ex51, 0)
    with pytest.raises(GameError, match="policy"):
        cfg_for(ex51, 5, policy={"kind": "greedy"})
    with pytest.raises(GameError, match="learner"):
        cfg_for(ex51, 5, learner={"kind": "ucb"})
    with pytest.raises(GameError, match="replicas"):
        cfg_for(ex51, 5, replicas=0)


def test_replicas_are_reproducible_and_distinct(ex51):
    c = cfg_for(ex51, 500, seed=7, replicas=3)
    a = sim.run_replicas(c)
    b = sim.run_replicas(c)
    assert np.array_equal(a.avg_u_exp, b.avg_u_exp)
    assert len(set(a.avg_u_exp.tolist())) > 1
    # a single replica replays exactly in isolation
    one = sim.run(c, replica=2)
    assert np.array_equal(one.a, a.logs[2].a)


def test_parallel_workers_give_identical_results(ex51, monkeypatch):
    c = cfg_for(ex51, 400, seed=3, replicas=2)
    serial = sim.run_replicas(c)
    monkeypatch.setenv(sim.WORKERS_ENV, "2")
    assert sim.workers() == 2
    par = sim.run_replicas(c)
    for x, y in zip(serial.logs, par.logs):
        assert np.array_equal(x.a, y.a) and np.array_equal(x.u, y.u)


def test_creg_equals_gap_to_best_response(ex51, ex51g):
    log = sim.run(cfg_for(ex51, 5000, seed=5))
    pi = log.info["fixed_strategy"]
    V = ex51g.v(pi.decisions)
    counts = np.zeros_like(V)
    np.add.at(counts, (log.x_index, log.a), 1.0)
    n_s = counts.sum(axis=1)
    rho_bar = counts / np.maximum(n_s, 1)[:, None]
    # empirical signal frequencies times the per-signal loss against the best response
    gap = float((n_s / log.T) @ (V.max(axis=1) - np.sum(rho_bar * V, axis=1)))
    assert log.creg == pytest.approx(log.T * gap, abs=1e-9)
    assert (log.creg, log.csreg) == pytest.approx(regret_from_arrays(log.s, log.a, log.R), abs=1e-9)


def test_csv_output(ex51, tmp_path):
    log = sim.run(cfg_for(ex51, 20, seed=1))
    path = tmp_path / "r.csv"
    log.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,s,omega,x_index,a,u,v,r_0,r_1"
    assert len(lines) == 21
    assert float(lines[5].split(",")[5]) == log.u[4]


def test_utilities_bounded(ex51):
    log = sim.run(cfg_for(ex51, 2000, seed=9, mode=sim.PERSUASION))
    an = solvers.analyze(ex51.to_generalized())
    assert np.all(np.abs(log.u) <= an.B + 1e-12)
    assert np.all(np.abs(log.R) <= 1 + 1e-12)


def test_signal_frequencies_chi_square(ex51, ex51_an):
    T = 20_000
    log = sim.run(cfg_for(ex51, T, {"kind": "exact"}, seed=11))
    pi = log.info["fixed_strategy"]
    obs = np.bincount(log.x_index, minlength=pi.k)
    exp = T * pi.probs
    chi2 = float(np.sum((obs - exp) ** 2 / exp))
    # 0.999 quantile for one degree of freedom
    assert chi2 < 10.83


def test_principal_utility_matches_expected_log(ex51, ex51g):
    log = sim.run(cfg_for(ex51, 3000, {"kind": "exact"}, seed=2))
    pi = sim._empirical(log)
    rho = StaticAgent("exact").strategy(ex51g, log.info["fixed_strategy"])
    rows = rho.rows[[list(log.info["fixed_strategy"].signals).index(s) for s in pi.signals]]
    assert log.avg_u_exp == pytest.approx(principal_utility(ex51g, pi, AgentStrategy(rows)), abs=1e-12)


def test_robust_fixed_policy_info(ex51):
    log = sim.run(cfg_for(ex51, 2000, policy={"kind": "robust_fixed", "params": {"margin": 0.05}}))
    assert log.info["delta"] == pytest.approx(0.05)
    assert log.info["fixed_strategy"].k == 3


def test_mean_exploiter_needs_persuasion(ex51g):
    with pytest.raises(GameError):
        sim.run(cfg_for(ex51g, 10, {"kind": "ftl_threshold"}, policy={"kind": "mean_exploiter"}))


def test_adaptive_policy_runs(ex51):
    log = sim.run(cfg_for(ex51, 300, policy={"kind": "adaptive"}))
    assert log.T == 300 and "fixed_strategy" not in log.info


def test_mean_based_learner_rejects_bandit_feedback(ex51):
    with pytest.raises(GameError):
        sim.run(cfg_for(ex51, 5, {"kind": "ftl_threshold", "feedback_mode": "bandit"}))


# ------------------------------------------------------------ bound checks

def test_bound_check_unknown_theorem(ex51, ex51_an):
    log = sim.run(cfg_for(ex51, 10))
    with pytest.raises(GameError, match="unknown check"):
        sim.bound_check(log, ex51_an, "thm_9")


def test_bound_check_inapplicable_at_large_regret(ex51, ex51_an):
    log = sim.run(cfg_for(ex51, 50))
    summ = sim.summarize([log])
    summ.creg = np.array([0.5 * log.T])
    rep = sim.bound_check(summ, ex51_an, "regret_lower")
    assert rep.status == sim.INAPPLICABLE and rep.rhs is None
    assert not rep.passed


def test_bound_check_zero_regret(ex51, ex51_an):
    log = sim.run(cfg_for(ex51, 2000, {"kind": "exact"}, seed=3))
    rep = sim.bound_check(log, ex51_an, "regret_lower")
    assert rep.rhs == pytest.approx(0.6)
    assert rep.details["bound"] == "persuasion.under_R"
    rep = sim.bound_check(log, ex51_an, "fixed_exact", instance=ex51.to_generalized())
    assert rep.passed
    with pytest.raises(GameError):
        sim.bound_check(log, ex51_an, "fixed_exact")


def test_bound_report_dict(ex51, ex51_an):
    rep = sim.bound_check(sim.run(cfg_for(ex51, 100)), ex51_an, "swap_upper")
    d = rep.to_dict()
    assert d["theorem"] == "swap_upper" and d["status"] in (sim.PASS, sim.FAIL)
    assert d["bound"] == "persuasion.over"
