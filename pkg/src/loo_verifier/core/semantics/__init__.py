"""Operational semantics, scoped execution and assertion satisfaction."""

from loo_verifier.core.semantics.machine import (
    initial_state,
    is_terminal,
    run_to_completion,
    small_step,
    wf_state,
)
from loo_verifier.core.semantics.program import LinkedProgram, link, lookup_method
from loo_verifier.core.semantics.satisfaction import protected, protected_from, sat, sat_deep
from loo_verifier.core.semantics.scoped import bounded_star, bounded_star_fin, summarize
from loo_verifier.core.semantics.stack import depth, pop, push, restrict

__all__ = [
    # Linking
    "LinkedProgram",
    "link",
    "lookup_method",
    # Machine
    "initial_state",
    "is_terminal",
    "run_to_completion",
    "small_step",
    "wf_state",
    # Stack
    "depth",
    "pop",
    "push",
    "restrict",
    # Scoped execution
    "bounded_star",
    "bounded_star_fin",
    "summarize",
    # Satisfaction
    "protected",
    "protected_from",
    "sat",
    "sat_deep",
]
