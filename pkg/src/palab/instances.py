"""Canonical instance builders and the named preset catalog.

Presets are addressed as ``name`` or ``name:key=value,key=value`` (for
example ``example5_1:mu0=0.3``). Each preset also ships as a JSON fixture
under ``palab/data/presets``.
"""

from __future__ import annotations

import math

import numpy as np

from .game import DecisionSpace, GameError, Instance, PersuasionInstance


def example_5_1(mu0: float = 0.3, n_signals: int = 3) -> PersuasionInstance:
    """Two states {Good, Bad}; the sender always wants action a."""
    mu0 = float(mu0)
    if not 0 < mu0 < 0.5:
        raise GameError(f"example_5_1 needs 0 < mu0 < 0.5, got {mu0}")
    return PersuasionInstance(
        states=("Good", "Bad"),
        actions=("a", "b"),
        prior=np.array([mu0, 1 - mu0]),
        sender_u=np.array([[1.0, 0.0], [1.0, 0.0]]),
        receiver_v=np.array([[1.0, 0.0], [-1.0, 0.0]]),
        n_signals=n_signals,
        name=f"example5_1(mu0={mu0:g})",
    )


def theorem_3_7_instance(gamma: float = 0.04, n_signals: int = 4) -> PersuasionInstance:
    """Two states, three actions; exploitable by a two-phase scheme."""
    gamma = float(gamma)
    if not 0 < gamma < 1:
        raise GameError(f"theorem_3_7_instance needs 0 < gamma < 1, got {gamma}")
    r = math.sqrt(gamma)
    return PersuasionInstance(
        states=("A", "B"),
        actions=("L", "M", "R"),
        prior=np.array([0.5, 0.5]),
        sender_u=np.array([[0.0, -2.0, -2.0], [0.0, 0.0, 2.0]]),
        receiver_v=np.array([[r, -1.0, 0.0], [-1.0, 1.0, 0.0]]),
        n_signals=n_signals,
        name=f"theorem_3_7(gamma={gamma:g})",
    )


def stackelberg_bimatrix(u_matrix, v_matrix, actions=None, name: str = "stackelberg") -> Instance:
    """Leader mixes over rows (|B| pure actions); follower picks a column."""
    U = np.asarray(u_matrix, dtype=float)
    V = np.asarray(v_matrix, dtype=float)
    if U.ndim != 2 or U.shape != V.shape:
        raise GameError(f"payoff matrices must share a 2-d shape, got {U.shape} and {V.shape}")
    m, n = U.shape
    acts = tuple(actions) if actions is not None else tuple(f"c{j}" for j in range(n))
    return Instance(DecisionSpace.simplex(m), acts, U, np.zeros(n), V, np.zeros(n), n_signals=n,
                    name=name, meta={"family": "stackelberg"})


def contract_instance(p_matrix, rewards, costs, remedy: str = "box_payment", P_cap=None, R=None,
                      name: str = "contract") -> Instance:
    """Contract design with payments on outcomes.

    ``box_payment``: the decision is the payment vector x in [0, P]^d.
    ``expected_payment``: the decision is the vector of expected payments per
    action, in [0, R]^|A|; only offered when every action has an outcome no
    other action can produce, so that every such vector is implementable.
    """
    Pm = np.asarray(p_matrix, dtype=float)
    r = np.asarray(rewards, dtype=float)
    c = np.asarray(costs, dtype=float)
    if Pm.ndim != 2 or Pm.shape[1] != r.size or Pm.shape[0] != c.size:
        raise GameError(f"shapes disagree: p {Pm.shape}, rewards {r.shape}, costs {c.shape}")
    if np.any(Pm < -1e-12) or np.any(np.abs(Pm.sum(axis=1) - 1) > 1e-9):
        raise GameError("outcome matrix rows must be probability vectors")
    if np.any(c < 0):
        raise GameError("costs must be nonnegative")
    n, d = Pm.shape
    acts = tuple(f"a{j}" for j in range(n))
    rt = Pm @ r
    if remedy == "box_payment":
        if P_cap is None or P_cap <= 0:
            raise GameError("box_payment needs a positive payment cap P")
        P = float(P_cap)
        Rv = float(np.max(np.abs(r))) if R is None else float(R)
        space = DecisionSpace.box(np.zeros(d), np.full(d, P))
        return Instance(space, acts, -Pm.T, rt, Pm.T.copy(), -c, n_signals=n, name=name,
                        meta={"family": "contract_box", "R": Rv, "P": P})
    if remedy == "expected_payment":
        excl = [np.any((Pm[a] > 0) & (np.delete(Pm, a, axis=0) <= 0).all(axis=0)) for a in range(n)]
        if not all(excl):
            raise GameError("expected_payment needs an exclusive outcome for every action; "
                            "use remedy box_payment for this outcome matrix")
        Rv = float(np.max(np.abs(rt))) if R is None else float(R)
        if Rv <= 0:
            raise GameError("expected_payment needs a positive payment range R")
        space = DecisionSpace.box(np.zeros(n), np.full(n, Rv))
        eye = np.eye(n)
        return Instance(space, acts, -eye, rt, eye.copy(), -c, n_signals=n, name=name,
                        meta={"family": "contract_expected", "R": Rv})
    raise GameError(f"unknown remedy {remedy!r}; expected box_payment or expected_payment")


def dominated_fixture() -> Instance:
    """Negative control: the second action is never strictly optimal."""
    U = np.array([[1.0, 0.0], [0.0, 1.0]])
    V = np.array([[1.0, 1.0], [0.0, 0.0]])
    return stackelberg_bimatrix(U, V, name="dominated")


def _stackelberg_demo() -> Instance:
    U = np.array([[2.0, 4.0], [1.0, 3.0]]) / 4
    V = np.array([[1.0, 0.0], [0.0, 2.0]]) / 2
    return stackelberg_bimatrix(U, V, name="stackelberg_demo")


def _contract_box_demo(P=1.0) -> Instance:
    p = np.array([[0.8, 0.2, 0.0], [0.1, 0.3, 0.6]])
    return contract_instance(p, [0.0, 0.5, 1.0], [0.0, 0.1], "box_payment", P_cap=P, name="contract_box_demo")


def _contract_expected_demo() -> Instance:
    p = np.array([[0.8, 0.2, 0.0], [0.0, 0.4, 0.6]])
    return contract_instance(p, [0.0, 0.5, 1.0], [0.0, 0.1], "expected_payment", R=1.0,
                             name="contract_expected_demo")


PRESETS = {
    "example5_1": (example_5_1, {"mu0": 0.3}),
    "theorem_3_7": (theorem_3_7_instance, {"gamma": 0.04}),
    "stackelberg_demo": (_stackelberg_demo, {}),
    "contract_box_demo": (_contract_box_demo, {"P": 1.0}),
    "contract_expected_demo": (_contract_expected_demo, {}),
    "dominated": (dominated_fixture, {}),
}

_ALIASES = {"γ": "gamma", "μ0": "mu0", "mu_0": "mu0"}


def parse_preset(text: str):
    """Split ``name:k=v,...`` into (name, kwargs) with float values."""
    name, _, rest = text.partition(":")
    name = name.strip()
    if name not in PRESETS:
        raise GameError(f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}")
    kw = {}
    for part in filter(None, (p.strip() for p in rest.split(","))):
        k, eq, v = part.partition("=")
        if not eq:
            raise GameError(f"preset parameter {part!r} is not key=value")
        k = _ALIASES.get(k.strip(), k.strip())
        if k not in PRESETS[name][1]:
            raise GameError(f"preset {name!r} has no parameter {k!r}")
        try:
            kw[k] = float(v)
        except ValueError:
            raise GameError(f"preset parameter {k!r} needs a number, got {v!r}") from None
    return name, kw


def load_preset(text: str):
    name, kw = parse_preset(text)
    fn, defaults = PRESETS[name]
    return fn(**{**defaults, **kw})
