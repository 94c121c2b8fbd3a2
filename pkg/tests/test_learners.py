import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from palab import learners
from palab.game import AgentStrategy, GameError, PrincipalStrategy, exact_best_response
from palab.learners import FTLThreshold, MWU, Exp3, PerContext, RegretLedger, SwapLearner


def play(learner, rewards, T):
    """Bandit loop on deterministic per-arm rewards; returns the action list."""
    acts = []
    for t in range(T):
        a = learner.choose()
        acts.append(a)
        learner.feed(a, rewards[a])
    return acts


def test_exp3_single_arm():
    l = Exp3(1)
    assert l.dist() == [1.0]
    assert all(a == 0 for a in play(l, [0.3], 20))


def test_exp3_concentrates_on_better_arm():
    l = Exp3(2, seed=3)
    T = 4000
    acts = play(l, [1.0, 0.0], T)
    tail = acts[3 * T // 4:]
    assert tail.count(0) / len(tail) >= 0.95


def test_exp3_reward_range():
    l = Exp3(2, r_range=(-1.0, 1.0))
    l.feed(0, -1.0)
    l.feed(1, 1.0)
    with pytest.raises(GameError, match="outside"):
        l.feed(0, 1.5)


def test_exp3_full_info_vector():
    l = Exp3(2, mode=learners.FULL_INFO)
    for _ in range(200):
        l.feed(0, [0.0, 1.0])
    assert l.dist()[1] > 0.99


def test_exp3_counter_stream_is_reproducible():
    a = play(Exp3(3, seed=11), [0.2, 0.5, 0.9], 300)
    b = play(Exp3(3, seed=11), [0.2, 0.5, 0.9], 300)
    c = play(Exp3(3, seed=12), [0.2, 0.5, 0.9], 300)
    assert a == b and a != c


def test_stationary_examples():
    assert learners.stationary(np.eye(3).tolist()) == pytest.approx([1 / 3] * 3)
    assert learners.stationary([[0.9, 0.1], [0.5, 0.5]]) == pytest.approx([5 / 6, 1 / 6])
    Q = np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]])
    p = np.array(learners.stationary(Q.tolist()))
    assert np.allclose(p @ Q, p) and p.sum() == pytest.approx(1.0)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(2, 5))
def test_stationary_fixed_point(seed, n):
    Q = np.random.default_rng(seed).dirichlet(np.ones(n), size=n)
    p = np.array(learners.stationary(Q.tolist()))
    assert np.all(p >= 0)
    assert np.allclose(p @ Q, p, atol=1e-9)


def test_swap_learner_full_info():
    l = SwapLearner(3)
    assert l.dist() == pytest.approx([1 / 3] * 3)
    for _ in range(500):
        l.feed(l.choose(), [0.1, 0.9, 0.4])
    assert l.dist()[1] > 0.95
    with pytest.raises(GameError):
        l.feed(0, 0.5)


def test_swap_learner_bandit_mode():
    l = SwapLearner(2, mode=learners.BANDIT, seed=5)
    acts = play(l, [0.0, 1.0], 4000)
    assert acts[3000:].count(1) / 1000 >= 0.9
    with pytest.raises(GameError):
        SwapLearner(2, mode="partial")


def test_ftl_ties_and_leader():
    l = FTLThreshold(3)
    assert l.dist() == pytest.approx([1 / 3] * 3)
    l.feed(0, [1.0, 1.0, 0.0])
    assert l.dist() == pytest.approx([0.5, 0.5, 0.0])
    l.feed(0, [0.0, 1e-6, 0.0])
    assert l.dist() == [0.0, 1.0, 0.0]
    with pytest.raises(GameError):
        l.feed(0, 0.3)


def test_mwu():
    l = MWU(2, horizon=100)
    assert l.eta == pytest.approx(math.sqrt(math.log(2) / 100))
    l.feed(0, [10.0, 0.0])
    p = l.dist()
    assert p[0] == pytest.approx(1 / (1 + math.exp(-10 * l.eta)))
    with pytest.raises(GameError):
        MWU(2, horizon=None)


def test_mean_based_factory():
    pc = learners.mean_based_learner(3, 0.01, contexts=2)
    assert pc.n_contexts == 2 and pc.mode == learners.FULL_INFO
    with pytest.raises(GameError):
        learners.mean_based_learner(3, 0.0)
    with pytest.raises(GameError):
        learners.mean_based_learner(3, 0.1, variant="hedge")


def test_per_context_independence():
    pc = PerContext(lambda s: FTLThreshold(2, context=s), 2)
    pc.feed(0, 0, [1.0, 0.0])
    assert pc.dist(0) == [1.0, 0.0]
    assert pc.dist(1) == [0.5, 0.5]
    assert pc.mixed_strategy() == [[1.0, 0.0], [0.5, 0.5]]
    with pytest.raises(GameError, match="context"):
        pc.dist(2)


# ------------------------------------------------------------- regret ledger

def ledger_of(rounds, K=1, n=2):
    led = RegretLedger(K, n)
    for s, a, r in rounds:
        led.record(s, a, r)
    return led


def test_regret_zero_for_best_fixed_action():
    led = ledger_of([(0, 1, [0.2, 0.8]), (0, 1, [0.5, 0.6]), (1, 0, [1.0, 0.0])], K=2)
    assert learners.measure_regret(led) == (0.0, 0.0)


def test_regret_hand_examples():
    r1, r2 = [1.0, 0.0], [0.0, 1.0]
    assert learners.measure_regret(ledger_of([(0, 0, r1), (0, 0, r2)])) == (0.0, 0.0)
    # mistakes in both rounds: the best fixed action earns 1, the played sequence 0
    creg, csreg = learners.measure_regret(ledger_of([(0, 1, r1), (0, 0, r2)]))
    assert creg == pytest.approx(1.0)
    assert csreg == pytest.approx(2.0)


def test_regret_from_arrays_matches_ledger(rng):
    T = 300
    s = rng.integers(0, 3, T)
    a = rng.integers(0, 2, T)
    R = rng.uniform(-1, 1, size=(T, 2))
    led = ledger_of(zip(s.tolist(), a.tolist(), R.tolist()), K=3)
    assert learners.measure_regret((s, a, R)) == pytest.approx(learners.measure_regret(led), abs=1e-9)


def test_ledger_needs_full_vector():
    with pytest.raises(GameError):
        RegretLedger(1, 2).record(0, 0, [1.0])
    with pytest.raises(GameError):
        learners.regret_from_arrays([0], [0], [[np.nan, 1.0]])


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10**6), K=st.integers(1, 3), n=st.integers(2, 4))
def test_swap_dominates_external(seed, K, n):
    rng = np.random.default_rng(seed)
    T = 50
    s, a = rng.integers(0, K, T), rng.integers(0, n, T)
    R = rng.uniform(0, 1, size=(T, n))
    led = ledger_of(zip(s.tolist(), a.tolist(), R.tolist()), K, n)
    creg, csreg = learners.measure_regret(led)
    assert 0 <= creg <= csreg + 1e-12
    assert creg == pytest.approx(sum(led.per_context()))


def test_two_context_exp3_regret_scale():
    T, n, K = 20000, 2, 2
    pc = PerContext(lambda s: Exp3(n, seed=9, context=s), K)
    led = RegretLedger(K, n)
    rew = [[0.8, 0.3], [0.1, 0.6]]
    rng = np.random.default_rng(0)
    for t in range(T):
        s = int(rng.integers(K))
        a = pc.choose(s)
        pc.feed(s, a, rew[s][a])
        led.record(s, a, rew[s])
    assert led.creg() <= 10 * math.sqrt(n * K * T)
    assert led.creg() / T < 0.05


# ------------------------------------------------------------ static agents

def test_quantal_limit_is_best_response(ex51g):
    pi = PrincipalStrategy(np.array([0.5, 0.5]), np.array([[0.7, 0.3], [0.1, 0.9]]), np.array([0, 1]))
    q = learners.static_agent("quantal", lam=1e6).strategy(ex51g, pi)
    assert np.allclose(q.rows, exact_best_response(ex51g, pi).rows)
    q0 = learners.static_agent("quantal", lam=1e-9).strategy(ex51g, pi)
    assert np.allclose(q0.rows, 0.5, atol=1e-6)


def test_inaccurate_belief(ex51g):
    pi = PrincipalStrategy(np.array([0.5, 0.5]), np.array([[0.52, 0.48], [0.1, 0.9]]), np.array([0, 1]))
    exact = learners.static_agent("inaccurate_belief", eps=0.0).strategy(ex51g, pi)
    assert np.allclose(exact.rows, exact_best_response(ex51g, pi, "first").rows)
    shifted = learners.static_agent("inaccurate_belief", eps=0.1).strategy(ex51g, pi)
    assert np.allclose(shifted.rows[0], [0, 1])
    assert np.allclose(learners.perturb_belief(ex51g, [0.52, 0.48], 0.1), [0.47, 0.53])


def test_static_agent_validation():
    for kind, kw in [("quantal", {}), ("inaccurate_belief", {"eps": -1}), ("adversarial", {"delta": -0.1}),
                     ("oracle", {})]:
        with pytest.raises(GameError):
            learners.static_agent(kind, **kw)


def test_adversarial_and_favorable_bracket(ex51g, ex51_an):
    pi = ex51_an.witness[0]
    from palab.game import principal_utility

    lo = principal_utility(ex51g, pi, learners.static_agent("adversarial", delta=0.05).strategy(ex51g, pi))
    hi = principal_utility(ex51g, pi, learners.static_agent("favorable", delta=0.05).strategy(ex51g, pi))
    ex = principal_utility(ex51g, pi, learners.static_agent("exact").strategy(ex51g, pi))
    assert lo <= ex + 1e-9 <= hi + 2e-9
    assert isinstance(learners.static_agent("exact").strategy(ex51g, pi), AgentStrategy)
