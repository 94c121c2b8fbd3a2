import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from palab import oracles, solvers
from palab.game import AgentStrategy, DecisionSpace, GameError, Instance, PrincipalStrategy, principal_utility
from palab.instances import dominated_fixture, example_5_1, stackelberg_bimatrix, theorem_3_7_instance


def test_stackelberg_values(ex51_an, mb):
    assert ex51_an.U_star == pytest.approx(0.6, abs=1e-9)
    assert solvers.analyze(mb.to_generalized()).U_star == pytest.approx(0.0, abs=1e-9)


def test_witness_attains_value(ex51g, ex51_an):
    pi, rho = ex51_an.witness
    assert principal_utility(ex51g, pi, rho) == pytest.approx(0.6, abs=1e-6)
    pi.validate(ex51g)


def test_constant_utility_instance():
    inst = Instance(DecisionSpace.simplex(2), ("a", "b"), np.zeros((2, 2)), np.full(2, 0.7),
                    np.array([[1.0, 0.0], [0.0, 1.0]]), np.zeros(2), 2)
    assert solvers.analyze(inst).U_star == pytest.approx(0.7)


def test_gap_example(ex51g):
    G, anchors = solvers.inducibility_gap(ex51g)
    assert G == pytest.approx(1.0, abs=1e-9)
    assert np.allclose(anchors, [[1, 0], [0, 1]])
    Gg, _ = oracles.gap_grid(ex51g, 1e-4)
    assert G == pytest.approx(Gg, abs=1e-6)


def test_gap_mean_based_instance(mb):
    g = mb.to_generalized()
    G, anchors = solvers.inducibility_gap(g)
    Gg, _ = oracles.gap_grid(g, 1e-4)
    assert G > 0
    assert G == pytest.approx(Gg, abs=1e-4)
    # frozen from the grid oracle
    assert G == pytest.approx(0.2, abs=1e-9)
    V = g.v(anchors)
    for a in range(3):
        assert V[a, a] - np.delete(V[a], a).max() >= G - 1e-9


def test_gap_nonpositive_for_duplicate_columns():
    G, _ = solvers.inducibility_gap(dominated_fixture())
    assert G <= 0


def test_gap_single_action_is_infinite():
    inst = Instance(DecisionSpace.simplex(2), ("a",), np.zeros((2, 1)), np.zeros(1), np.zeros((2, 1)),
                    np.zeros(1), 1)
    assert math.isinf(solvers.inducibility_gap(inst)[0])


def test_inner_examples(ex51g, ex51_an):
    pi = ex51_an.witness[0]
    _, v = solvers.worst_case_delta_br(ex51g, pi, 0.0)
    assert v == pytest.approx(0.0, abs=1e-6)
    rho, v = solvers.best_case_delta_br(ex51g, pi, 0.1)
    assert v == pytest.approx(0.7, abs=1e-6)
    assert isinstance(rho, AgentStrategy)
    _, v = solvers.best_case_delta_br(ex51g, pi, 0.0)
    assert v == pytest.approx(0.6, abs=1e-6)


def test_inner_large_delta_unconstrained(ex51g, ex51_an):
    pi = ex51_an.witness[0]
    _, v = solvers.worst_case_delta_br(ex51g, pi, 2 * ex51_an.B + 1)
    assert v == pytest.approx(float(pi.probs @ ex51g.u(pi.decisions).min(axis=1)))


def test_no_info_mean_based_inner(mb):
    g = mb.to_generalized()
    _, v = solvers.best_case_delta_br(g, PrincipalStrategy.single([0.5, 0.5]), 0.0)
    assert v == pytest.approx(0.0, abs=1e-9)


def test_underR_stays_below_analytic_on_grid(ex51g):
    up = 0.6 - 2 * math.sqrt(2 * 0.3 * 0.01) + 0.01
    assert up == pytest.approx(0.4550, abs=1e-4)
    for m1 in np.linspace(0, 0.3, 31):
        for m2 in np.linspace(0.3, 1, 71):
            if m2 - m1 < 1e-9:
                continue
            w = (m2 - 0.3) / (m2 - m1)
            pi = PrincipalStrategy(np.array([w, 1 - w]), np.array([[m1, 1 - m1], [m2, 1 - m2]]), np.array([0, 1]))
            assert solvers.worst_case_delta_br(ex51g, pi, 0.01)[1] <= up + 1e-9


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), delta=st.sampled_from([0.0, 0.01, 0.1, 0.5]), rand=st.booleans())
def test_inner_matches_bruteforce(seed, delta, rand):
    rng = np.random.default_rng(seed)
    inst = oracles.random_simplex_instance(rng)
    pi = oracles.random_strategy(inst, rng)
    lo = solvers.worst_case_delta_br(inst, pi, delta, rand)[1]
    hi = solvers.best_case_delta_br(inst, pi, delta, rand)[1]
    assert lo == pytest.approx(oracles.inner_bruteforce(inst, pi, delta, "min", rand), abs=1e-7)
    assert hi == pytest.approx(oracles.inner_bruteforce(inst, pi, delta, "max", rand), abs=1e-7)


def test_batch_matches_single(ex51g, rng):
    pis = [oracles.random_strategy(ex51g, rng, k=3) for _ in range(5)]
    k = max(p.k for p in pis)
    P = np.zeros((5, k))
    X = np.tile(ex51g.mean, (5, k, 1))
    for i, p in enumerate(pis):
        P[i, :p.k] = p.probs
        X[i, :p.k] = p.decisions
    vals = solvers.batch_objectives(ex51g, P, X, [0.0, 0.05])
    for i, p in enumerate(pis):
        for j, dl in enumerate([0.0, 0.05]):
            assert vals["UnderR"][i, j] == pytest.approx(solvers.worst_case_delta_br(ex51g, p, dl)[1], abs=1e-9)
            assert vals["OverD"][i, j] == pytest.approx(solvers.best_case_delta_br(ex51g, p, dl, False)[1], abs=1e-9)


def test_search_delta_zero_collapses(ex51g):
    res = solvers.search_objectives(ex51g, [0.0], budget=200)
    assert res.chain_ok().all()
    assert res.values["OverR"][0] == pytest.approx(0.6, abs=1e-6)
    # sup is approached, not attained
    assert res.values["UnderD"][0] < 0.6
    assert res.values["UnderD"][0] > 0.6 - 1e-3
    assert res.label == "certified lower bound"


def test_search_regression_value(ex51g):
    res = solvers.search_objectives(ex51g, [0.02], budget=1000)
    v = res.values["UnderR"][0]
    lo = 0.6 - 2 * math.sqrt(2 * (1 + 2 / 0.3) * 0.02)
    hi = 0.6 - 2 * math.sqrt(2 * 0.3 * 0.02) + 0.02
    assert lo <= v <= hi + 1e-9
    # pinned from the grid run
    assert v == pytest.approx(0.4009109769386226, abs=1e-9)


def test_search_monotone_in_delta(ex51g):
    res = solvers.search_objectives(ex51g, [0.0, 0.01, 0.05], budget=200)
    for name in ("UnderR", "UnderD"):
        assert np.all(np.diff(res.values[name]) <= 1e-12)
    for name in ("OverR", "OverD"):
        assert np.all(np.diff(res.values[name]) >= -1e-12)


def test_obj_outer_search_rejects_unknown(ex51g):
    with pytest.raises(GameError):
        solvers.obj_outer_search(ex51g, 0.0, "Under", 10)
    val, cert = solvers.obj_outer_search(ex51g, 0.02, "OverR", 200)
    assert val == pytest.approx(0.62, abs=1e-6)
    cert.validate(ex51g)


def test_example51_analytic():
    a, b, c = solvers.example51_analytic(0.3, 0.02)
    assert a == pytest.approx(0.6 - 2 * math.sqrt(0.012) + 0.02)
    assert a == pytest.approx(0.40091, abs=1e-5)
    assert (b, c) == pytest.approx((0.62, 0.6))
    assert solvers.example51_analytic(0.3, 0.0) == pytest.approx((0.6, 0.6, 0.6))
    assert solvers.example51_analytic(0.1, 0.04) == pytest.approx((0.2 - 2 * math.sqrt(0.008) + 0.04, 0.24, 0.2))
    with pytest.raises(GameError, match="mu0"):
        solvers.example51_analytic(0.6, 0.01)
    with pytest.raises(GameError):
        solvers.example51_analytic(0.3, 0.2)


def test_theorem_bounds_example(ex51_an):
    assert ex51_an.diam == 2 and ex51_an.L == 1 and ex51_an.B == 1
    assert ex51_an.dist_C_boundary == pytest.approx(0.6)
    b = solvers.theorem_bounds(ex51_an, 0.001)
    assert b.value("constrained.over") == pytest.approx(0.6 + (2 + 2 * 2 / 0.6) * 0.001)
    assert b.value("constrained.over") == pytest.approx(0.60867, abs=1e-5)
    assert b.value("persuasion.under_R") == pytest.approx(0.6 - 4 * math.sqrt((1 + 2 / 0.3) * 0.001))


def test_theorem_bounds_collapse_at_zero(ex51_an):
    for name, b in solvers.theorem_bounds(ex51_an, 0.0).items():
        assert b.applicable
        assert b.value == pytest.approx(0.6), name


def test_theorem_bounds_inapplicable(ex51_an):
    b = solvers.theorem_bounds(ex51_an, 0.5)
    assert not b["persuasion.under_R"].applicable
    assert b.value("persuasion.under_R") is None


def test_stackelberg_bound_and_grid():
    U = np.array([[2.0, 4.0], [1.0, 3.0]]) / 4
    V = np.array([[1.0, 0.0], [0.0, 2.0]]) / 2
    inst = stackelberg_bimatrix(U, V)
    an = solvers.analyze(inst)
    assert an.U_star == pytest.approx(oracles.stackelberg_grid(inst, 1e-3), abs=2e-3)
    b = solvers.theorem_bounds(an, 0.01)
    assert b.value("stackelberg.under_R") == pytest.approx(an.U_star - 4 * an.B * math.sqrt(0.01 / an.G))


def test_randomized_from_deterministic_bound():
    assert solvers.randomized_from_deterministic_bound(0.5, 1.0, 0.01, 0.1) == pytest.approx(0.3)
    with pytest.raises(GameError):
        solvers.randomized_from_deterministic_bound(0.5, 1.0, 0.01, 0.0)


@pytest.mark.parametrize("gam", [0.0025, 0.01, 0.04])
def test_mean_based_over_is_linear_in_gamma(gam):
    inst = theorem_3_7_instance(gam).to_generalized()
    res = solvers.search_objectives(inst, [gam], budget=400)
    # searched OverR(gamma) = 2 * gamma on every tested gamma (pinned from the search)
    assert res.values["OverR"][0] == pytest.approx(2 * gam, abs=1e-9)
