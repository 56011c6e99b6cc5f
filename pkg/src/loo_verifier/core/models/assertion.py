"""Assertion syntax.

The core forms are expression truth, class membership, negation,
conjunction, bounded universal quantification, externality and the two
protection forms. `internal`, disjunction, implication and existential
quantification are encoded through negation when parsed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TypeAlias

from loo_verifier.core.models.syntax import Expr, Lit, Var
from loo_verifier.core.models.values import FALSE, TRUE


@dataclass(frozen=True, slots=True)
class AExpr:
    """Holds when the expression evaluates to true."""

    expr: Expr


@dataclass(frozen=True, slots=True)
class HasClass:
    """`e : C`; C may also be a scalar type or the `external` marker."""

    expr: Expr
    cls: str


@dataclass(frozen=True, slots=True)
class Not:
    body: Assertion


@dataclass(frozen=True, slots=True)
class And:
    left: Assertion
    right: Assertion


@dataclass(frozen=True, slots=True)
class All:
    var: str
    cls: str
    body: Assertion


@dataclass(frozen=True, slots=True)
class External:
    expr: Expr


@dataclass(frozen=True, slots=True)
class ProtectedFrom:
    expr: Expr
    source: Expr


@dataclass(frozen=True, slots=True)
class Protected:
    expr: Expr


Assertion: TypeAlias = AExpr | HasClass | Not | And | All | External | ProtectedFrom | Protected

A_TRUE = AExpr(Lit(TRUE))
A_FALSE = AExpr(Lit(FALSE))


def conj(*parts: Assertion) -> Assertion:
    """Right-associated conjunction, dropping literal `true`."""
    kept = [p for p in parts if p != A_TRUE]
    if not kept:
        return A_TRUE
    result = kept[-1]
    for p in reversed(kept[:-1]):
        result = And(p, result)
    return result


def conjuncts(assertion: Assertion) -> list[Assertion]:
    if isinstance(assertion, And):
        return conjuncts(assertion.left) + conjuncts(assertion.right)
    if assertion == A_TRUE:
        return []
    return [assertion]


def disj(left: Assertion, right: Assertion) -> Assertion:
    return Not(And(Not(left), Not(right)))


def implies(left: Assertion, right: Assertion) -> Assertion:
    return Not(And(left, Not(right)))


def exists(var: str, cls: str, body: Assertion) -> Assertion:
    return Not(All(var, cls, Not(body)))


def internal(expr: Expr) -> Assertion:
    return Not(External(expr))


def typed(var: str, cls: str) -> Assertion:
    return HasClass(Var(var), cls)


def protected_from_all(expr: Expr, sources: list[Expr] | tuple[Expr, ...]) -> Assertion:
    """`e protectedFrom {e1, ..., en}` as a conjunction."""
    return conj(*(ProtectedFrom(expr, s) for s in sources))
