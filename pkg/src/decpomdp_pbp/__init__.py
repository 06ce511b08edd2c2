"""Person-by-person solver for finite Dec-POMDPs with delayed sharing."""

from .dp import EquilibriumReport, NonConvergenceError, best_response, pbp_iterate, verify_equilibrium
from .info import InfoRealization, StrategyProfile, enumerate_info, extend_info
from .model import (
    InvalidProblemError,
    ProblemFormatError,
    ProblemSpec,
    build_paper_example,
    build_random_example,
    build_separated_example,
    load_problem,
    make_problem,
    save_problem,
    separated_scenario,
)

__all__ = [
    "EquilibriumReport", "InfoRealization", "InvalidProblemError", "NonConvergenceError",
    "ProblemFormatError", "ProblemSpec", "StrategyProfile", "best_response",
    "build_paper_example", "build_random_example", "build_separated_example",
    "enumerate_info", "extend_info", "load_problem", "make_problem", "pbp_iterate",
    "save_problem", "separated_scenario", "verify_equilibrium",
]
