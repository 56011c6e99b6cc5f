"""Limits, bounds and exit codes."""

from loo_verifier.core.rules.defaults import (
    DEFAULT_FUZZ_BUDGET,
    DEFAULT_GHOST_FUEL,
    DEFAULT_INSTANTIATION_CAP,
    DEFAULT_MONITOR_BUDGET,
    DEFAULT_RUN_BUDGET,
    DEFAULT_SOLVER_TIMEOUT_MS,
    EXIT_BUDGET,
    EXIT_DATA,
    EXIT_FAILED,
    EXIT_OK,
    EXIT_STUCK,
    EXIT_USAGE,
)

__all__ = [
    # Budgets
    "DEFAULT_FUZZ_BUDGET",
    "DEFAULT_GHOST_FUEL",
    "DEFAULT_INSTANTIATION_CAP",
    "DEFAULT_MONITOR_BUDGET",
    "DEFAULT_RUN_BUDGET",
    "DEFAULT_SOLVER_TIMEOUT_MS",
    # Exit codes
    "EXIT_BUDGET",
    "EXIT_DATA",
    "EXIT_FAILED",
    "EXIT_OK",
    "EXIT_STUCK",
    "EXIT_USAGE",
]
