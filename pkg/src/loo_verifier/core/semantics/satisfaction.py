"""Satisfaction of assertions, protection and deep satisfaction."""

from __future__ import annotations

import logging
from collections.abc import Mapping

from loo_verifier.core.models.assertion import (
    AExpr,
    All,
    And,
    Assertion,
    External,
    HasClass,
    Not,
    Protected,
    ProtectedFrom,
)
from loo_verifier.core.models.enums import SatKind
from loo_verifier.core.models.results import FAILS, HOLDS, SatResult
from loo_verifier.core.models.state import State
from loo_verifier.core.models.syntax import Expr, ModuleDef
from loo_verifier.core.models.values import (
    EXTERNAL_TYPE,
    TRUE,
    Address,
    BoolVal,
    NullValue,
    Value,
    is_scalar,
    is_scalar_type,
    value_has_scalar_type,
)
from loo_verifier.core.rules.defaults import DEFAULT_GHOST_FUEL
from loo_verifier.core.semantics.assertion_ops import free_vars, ground
from loo_verifier.core.semantics.expressions import Diverged, ExpressionEvaluator
from loo_verifier.core.semantics.heap import locally_reachable, reach
from loo_verifier.core.semantics.scoped import is_external
from loo_verifier.core.semantics.stack import restrict
from loo_verifier.shared.exceptions import EvaluationError, UnboundVariableError

logger = logging.getLogger(__name__)


def _is_external_object(module: ModuleDef, state: State, addr: Address) -> bool:
    obj = state.heap.get(addr)
    return obj is not None and obj.cls not in module.classes


def protected_from(module: ModuleDef, state: State, value: Value, source: Value) -> bool:
    """No external object reachable from `source` has a field holding `value`.

    Anything is protected from null and from scalars; a scalar is never
    protected from an object.
    """
    if is_scalar(source) or isinstance(source, NullValue):
        return True
    if is_scalar(value):
        return False
    if value == source:
        return False
    assert isinstance(source, Address)
    for addr in reach(state.heap, source):
        if _is_external_object(module, state, addr) and value in state.heap[addr].fields.values():
            return False
    return True


def protected(module: ModuleDef, state: State, value: Value) -> bool:
    """`protected v` in the current state.

    No external object locally reachable from the top frame has a field
    holding v and, when the receiver is external, no top-frame variable
    holds v. Null is never protected; scalars always are.
    """
    if isinstance(value, NullValue):
        return False
    if is_scalar(value):
        return True
    for addr in locally_reachable(state):
        if _is_external_object(module, state, addr) and value in state.heap[addr].fields.values():
            return False
    if is_external(module, state) and value in state.top.vars.values():
        return False
    return True


def scalar_candidates(state: State, type_name: str) -> list[Value]:
    """Values of a scalar type found in the state, in a stable order."""
    found: dict[str, Value] = {}
    pools: list[Mapping[str, Value]] = [f.vars for f in state.frames]
    pools += [obj.fields for obj in state.heap.values()]
    for pool in pools:
        for value in pool.values():
            if value_has_scalar_type(value, type_name):
                found.setdefault(repr(value), value)
    return [found[k] for k in sorted(found)]


def quantifier_range(module: ModuleDef, state: State, type_name: str) -> list[Value]:
    """Candidates for `forall x:T`: objects of class T, external objects, or scalars in the state."""
    if type_name == EXTERNAL_TYPE:
        return sorted(a for a in state.heap if _is_external_object(module, state, a))
    if is_scalar_type(type_name):
        return scalar_candidates(state, type_name)
    return list(state.addresses_of_class(type_name))


class _Satisfaction:
    def __init__(self, module: ModuleDef, state: State, fuel: int):
        self.module = module
        self.state = state
        self.evaluator = ExpressionEvaluator(state.heap, module, fuel)

    def value(self, expr: Expr, env: Mapping[str, Value]) -> Value | SatResult:
        try:
            result = self.evaluator.run(expr, env)
        except UnboundVariableError as exc:
            return SatResult(SatKind.ILL_FORMED, str(exc))
        except EvaluationError as exc:
            return SatResult(SatKind.FAILS, str(exc))
        if isinstance(result, Diverged):
            return SatResult(SatKind.DIVERGED, str(result))
        return result

    def check(self, assertion: Assertion, env: Mapping[str, Value]) -> SatResult:
        match assertion:
            case AExpr(e):
                v = self.value(e, env)
                if isinstance(v, SatResult):
                    return v
                if not isinstance(v, BoolVal):
                    return SatResult(SatKind.ILL_FORMED, f"{v} is not a boolean")
                return SatResult.of(v == TRUE)
            case HasClass(e, cls):
                v = self.value(e, env)
                if isinstance(v, SatResult):
                    return v
                if is_scalar_type(cls):
                    return SatResult.of(value_has_scalar_type(v, cls))
                if cls == EXTERNAL_TYPE:
                    return SatResult.of(isinstance(v, Address) and _is_external_object(self.module, self.state, v))
                return SatResult.of(isinstance(v, Address) and self.state.class_of(v) == cls)
            case External(e):
                v = self.value(e, env)
                if isinstance(v, SatResult):
                    return v
                return SatResult.of(isinstance(v, Address) and _is_external_object(self.module, self.state, v))
            case ProtectedFrom(e, source):
                v = self.value(e, env)
                if isinstance(v, SatResult):
                    return v
                v0 = self.value(source, env)
                if isinstance(v0, SatResult):
                    return v0
                return SatResult.of(protected_from(self.module, self.state, v, v0))
            case Protected(e):
                v = self.value(e, env)
                if isinstance(v, SatResult):
                    return v
                return SatResult.of(protected(self.module, self.state, v))
            case Not(body):
                return self.check(body, env).negate()
            case And(left, right):
                return self._all([self.check(left, env), self.check(right, env)])
            case All(var, cls, body):
                results = []
                for candidate in quantifier_range(self.module, self.state, cls):
                    inner = dict(env)
                    inner[var] = candidate
                    results.append(self.check(body, inner))
                return self._all(results)
        raise TypeError(f"not an assertion: {assertion!r}")

    @staticmethod
    def _all(results: list[SatResult]) -> SatResult:
        for r in results:
            if not r.decided:
                return r
        return HOLDS if all(r.holds for r in results) else FAILS


def sat(module: ModuleDef, state: State, assertion: Assertion, fuel: int = DEFAULT_GHOST_FUEL) -> SatResult:
    """Whether `state` satisfies `assertion`, with ghosts of `module` unfolded under `fuel`.

    Unbound free variables make the assertion ill-formed; running out of
    fuel anywhere makes the whole result diverged.
    """
    unbound = sorted(v for v in free_vars(assertion) if v not in state.top.vars)
    if unbound:
        return SatResult(SatKind.ILL_FORMED, f"unbound {', '.join(unbound)}")
    return _Satisfaction(module, state, fuel).check(assertion, state.top.vars)


def sat_deep(
    module: ModuleDef, state: State, k: int, assertion: Assertion, fuel: int = DEFAULT_GHOST_FUEL
) -> SatResult:
    """`assertion`, grounded in `state`, holds at every restriction from frame k up."""
    try:
        grounded = ground(state, assertion)
    except UnboundVariableError as exc:
        return SatResult(SatKind.ILL_FORMED, str(exc))
    results = [sat(module, restrict(state, j), grounded, fuel) for j in range(k, state.depth + 1)]
    return _Satisfaction._all(results)
