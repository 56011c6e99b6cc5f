"""Entailment between assertions, decided with z3."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import z3

from loo_verifier.core.models.assertion import Assertion, conjuncts
from loo_verifier.core.models.enums import Tri
from loo_verifier.core.models.proof import Assumption
from loo_verifier.core.models.syntax import ModuleDef
from loo_verifier.core.rules.defaults import DEFAULT_SOLVER_TIMEOUT_MS
from loo_verifier.core.logic.encoding import Encoder, SymbolicState, check_unsat
from loo_verifier.core.semantics.assertion_ops import normalize_assertion
from loo_verifier.shared.formatters import format_assertion

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EntailmentQuery:
    module: ModuleDef
    hypothesis: Assertion
    goal: Assertion

    def __str__(self) -> str:
        return f"{format_assertion(self.hypothesis)} ==> {format_assertion(self.goal)}"


def syntactically_entails(hypothesis: Assertion, goal: Assertion) -> bool:
    """Every conjunct of the goal is, up to normal form, a conjunct of the hypothesis."""
    have = {repr(c) for c in conjuncts(normalize_assertion(hypothesis))}
    return all(repr(c) in have for c in conjuncts(normalize_assertion(goal)))


def assumption_formula(encoder: Encoder, assumption: Assumption, st: SymbolicState) -> z3.BoolRef:
    """A trusted `A -> A'` as a hypothesis-side fact."""
    return z3.Implies(
        encoder.holds(assumption.hypothesis, st, under=False),
        encoder.holds(assumption.conclusion, st, under=True),
    )


def entails(
    module: ModuleDef,
    hypothesis: Assertion,
    goal: Assertion,
    assumptions: Sequence[Assumption] = (),
    timeout_ms: int = DEFAULT_SOLVER_TIMEOUT_MS,
) -> Tri:
    """Whether every state satisfying `hypothesis` satisfies `goal`.

    YES is sound for the declared field types of `module`. NO is given only
    when the solver finds a counter-model and no approximation was needed
    (no quantifiers, ghost fields or protection atoms);
    otherwise a satisfiable query answers UNKNOWN.

    Args:
        module: The internal module, for classes, field types and ghosts
        hypothesis: Assumed assertion
        goal: Assertion to establish
        assumptions: Trusted lemmas added as facts
        timeout_ms: Solver timeout

    Returns:
        Tri.YES, Tri.NO or Tri.UNKNOWN
    """
    if syntactically_entails(hypothesis, goal):
        return Tri.YES

    encoder = Encoder(module)
    encoder.prepare(hypothesis, goal, *(a.hypothesis for a in assumptions), *(a.conclusion for a in assumptions))
    st = SymbolicState()
    facts = [encoder.holds(hypothesis, st, under=True)]
    facts.extend(assumption_formula(encoder, a, st) for a in assumptions)
    facts.append(z3.Not(encoder.holds(goal, st, under=False)))
    facts.extend(encoder.axioms())

    result = check_unsat(facts, timeout_ms)
    if result == z3.unsat:
        answer = Tri.YES
    elif result == z3.sat and encoder.exact and not assumptions:
        answer = Tri.NO
    else:
        answer = Tri.UNKNOWN
    logger.debug("entails %s: %s", EntailmentQuery(module, hypothesis, goal), answer.value)
    return answer


def answer(query: EntailmentQuery, timeout_ms: int = DEFAULT_SOLVER_TIMEOUT_MS) -> Tri:
    return entails(query.module, query.hypothesis, query.goal, timeout_ms=timeout_ms)
