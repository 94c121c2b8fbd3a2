import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from palab import oracles, principals
from palab.game import GameError, PrincipalStrategy, principal_utility, AgentStrategy
from palab.instances import example_5_1, stackelberg_bimatrix, theorem_3_7_instance


def test_fixed_policy_returns_same_object(ex51_an):
    pi = ex51_an.witness[0]
    pol = principals.fixed_policy(pi)
    assert pol.visibility == principals.NONE
    assert all(pol.next(t) is pi for t in range(5))


def test_exploiter_phases(mb):
    pol = principals.mean_based_exploiter(mb, 10)
    assert pol.switch == 5
    assert [pol.signal_for(0, w) for w in (0, 1)] == [0, 1]
    assert [pol.signal_for(5, w) for w in (0, 1)] == [1, 0]
    assert pol.next(4) is pol.first and pol.next(5) is pol.second
    assert pol.first is not pol.second
    assert not np.allclose(pol.first.decisions[0], pol.second.decisions[0])
    for pi in (pol.first, pol.second):
        pi.validate(mb.to_generalized())


def test_exploiter_odd_horizon(mb):
    pol = principals.mean_based_exploiter(mb, 7)
    phases = [pol.next(t) is pol.first for t in range(7)]
    assert phases == [True] * 4 + [False] * 3


def test_exploiter_errors(mb):
    with pytest.raises(GameError, match="horizon"):
        principals.mean_based_exploiter(mb, None)
    three = example_5_1(0.3)
    from palab.game import PersuasionInstance

    p3 = PersuasionInstance(("x", "y", "z"), ("a", "b"), np.ones(3) / 3, np.zeros((3, 2)), np.zeros((3, 2)), 2)
    with pytest.raises(GameError, match="two states"):
        principals.mean_based_exploiter(p3, 4)
    assert principals.mean_based_exploiter(three, 1).switch == 1


def rho_rows(rng, k, n):
    return rng.dirichlet(np.ones(n), size=k).tolist()


def test_adaptive_always_a(ex51g):
    pol = principals.adaptive_exploiter(ex51g)
    rho = [[1.0, 0.0]] * pol.n_signals
    pi = pol.next(0, rho)
    pi.validate(ex51g)
    assert pol.value(pi, rho) == pytest.approx(1.0)


def test_adaptive_needs_rho(ex51g):
    with pytest.raises(GameError):
        principals.adaptive_exploiter(ex51g).next(0, None)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_adaptive_closed_form_matches_lp_and_probe(seed):
    rng = np.random.default_rng(seed)
    inst = oracles.random_simplex_instance(rng, constrained=bool(seed % 2))
    pol = principals.AdaptiveExploiter(inst)
    rho = rho_rows(rng, pol.n_signals, inst.n_actions)
    pi = pol.next(0, rho)
    pi.validate(inst)
    v = pol.value(pi, rho)
    _, v_lp = pol.solve_lp(rho)
    assert v == pytest.approx(v_lp, abs=1e-8)
    R = AgentStrategy(np.array(rho))
    for _ in range(200):
        q = oracles.random_strategy(inst, rng, k=pol.n_signals)
        q = PrincipalStrategy(q.probs, q.decisions, np.arange(q.k))
        assert principal_utility(inst, q, AgentStrategy(R.rows[:q.k])) <= v + 1e-9


def test_adaptive_example_rho(ex51g):
    pol = principals.adaptive_exploiter(ex51g)
    rho = [[0.5, 0.5]] * pol.n_signals
    v = pol.value(pol.next(0, rho), rho)
    # the sender earns 1 on action a in every state, so any scheme earns 1/2
    assert v == pytest.approx(0.5)
    rho = [[0.2, 0.8], [0.9, 0.1], [0.5, 0.5]]
    pi = pol.next(0, rho)
    assert pol.value(pi, rho) == pytest.approx(0.9)
    assert list(pi.signals) == [1]


def test_adaptive_box_instance_uses_lp():
    U = np.array([[1.0, 0.0], [0.0, 1.0]])
    inst = stackelberg_bimatrix(U, U.copy())
    pol = principals.AdaptiveExploiter(inst, method="lp")
    rho = [[0.0, 1.0]] * pol.n_signals
    pi = pol.next(0, rho)
    assert pol.value(pi, rho) == pytest.approx(1.0)


def test_adaptive_memoizes(ex51g):
    pol = principals.adaptive_exploiter(ex51g)
    rho = [[1.0, 0.0]] * pol.n_signals
    assert pol.next(0, rho) is pol.next(1, rho)


def test_adaptive_mean_based_instance():
    g = theorem_3_7_instance(0.04).to_generalized()
    pol = principals.adaptive_exploiter(g)
    rho = [[0.0, 0.0, 1.0]] * pol.n_signals
    assert pol.value(pol.next(0, rho), rho) == pytest.approx(0.0)
