"""Proof checking for the triple and quadruple logics."""

from loo_verifier.core.logic.entailment import EntailmentQuery, answer, entails
from loo_verifier.core.logic.obligations import (
    BundleChecker,
    check_invariant_obligation,
    check_method_obligation,
    check_module,
    obligation_for,
)
from loo_verifier.core.logic.rules import RuleChecker
from loo_verifier.core.logic.underlying import check_ul_triple

__all__ = [
    # Entailment
    "EntailmentQuery",
    "answer",
    "entails",
    # Underlying logic
    "check_ul_triple",
    # Rules and obligations
    "BundleChecker",
    "RuleChecker",
    "check_invariant_obligation",
    "check_method_obligation",
    "check_module",
    "obligation_for",
]
