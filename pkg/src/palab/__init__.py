"""Principal-agent problems played against learning agents.

Exact small-scale solvers for the Stackelberg value and the approximate
best-response objectives, perturbation constructions, a zoo of learning and
static agents, and a repeated-game simulator with regret accounting.
"""

from .game import (
    AgentStrategy,
    DecisionSpace,
    DimensionError,
    GameError,
    Instance,
    PersuasionInstance,
    PrincipalStrategy,
    agent_utility,
    best_response_set,
    decomposition_to_scheme,
    principal_utility,
    scheme_to_decomposition,
)
from .instances import contract_instance, example_5_1, load_preset, stackelberg_bimatrix, theorem_3_7_instance
from .solvers import analyze, inducibility_gap, stackelberg_value

__version__ = "0.1.0"

__all__ = [
    "AgentStrategy",
    "DecisionSpace",
    "DimensionError",
    "GameError",
    "Instance",
    "PersuasionInstance",
    "PrincipalStrategy",
    "agent_utility",
    "analyze",
    "best_response_set",
    "contract_instance",
    "decomposition_to_scheme",
    "example_5_1",
    "inducibility_gap",
    "load_preset",
    "principal_utility",
    "scheme_to_decomposition",
    "stackelberg_bimatrix",
    "stackelberg_value",
    "theorem_3_7_instance",
]
