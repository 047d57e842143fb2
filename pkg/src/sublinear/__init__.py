"""Sub-linear expectations, G-normal expectations and limit-theorem checks."""

from .core import GParams, check_axioms, event_prob, lower_expect, upper_expect
from .functions import TestFunction, catalog, parse_function
from .gheat import g_expect, g_function, is_mean_certain, lattice_expect, solve_gheat
from .sampler import ScenarioStrategy, moment_report, sample_batch

__all__ = [
    "GParams",
    "TestFunction",
    "ScenarioStrategy",
    "catalog",
    "check_axioms",
    "event_prob",
    "g_expect",
    "g_function",
    "is_mean_certain",
    "lattice_expect",
    "lower_expect",
    "moment_report",
    "parse_function",
    "sample_batch",
    "solve_gheat",
    "upper_expect",
]
