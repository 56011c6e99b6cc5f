"""Big-step evaluation of expressions and ghost fields."""

from __future__ import annotations

import logging
from collections.abc import Mapping
from dataclasses import dataclass

from loo_verifier.core.models.state import Obj, State
from loo_verifier.core.models.syntax import BinOp, CondExpr, Expr, FieldAcc, GhostCall, Lit, ModuleDef, Var
from loo_verifier.core.models.values import (
    FALSE,
    TRUE,
    Address,
    BoolVal,
    IntVal,
    NullValue,
    StrVal,
    Value,
)
from loo_verifier.core.rules.defaults import DEFAULT_GHOST_FUEL
from loo_verifier.core.semantics.program import LinkedProgram, lookup_ghost, same_module_classes
from loo_verifier.shared.exceptions import (
    EvaluationError,
    MissingFieldError,
    NullDereferenceError,
    TypeMismatchError,
    UnboundVariableError,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class Diverged:
    """Ghost unfolding ran out of fuel."""

    fuel: int

    def __str__(self) -> str:
        return f"diverged after {self.fuel} ghost unfoldings"


class PrivacyViolation(EvaluationError):
    """Statement reads a field of an object from another module."""

    pass


class _OutOfFuel(Exception):
    pass


def apply_binop(op: str, left: Value, right: Value) -> Value:
    """Apply a strict binary operator.

    Raises:
        TypeMismatchError: If the operands do not suit the operator
    """
    if op == "==":
        return BoolVal(left == right)
    if op == "!=":
        return BoolVal(left != right)
    if op in ("&&", "||"):
        if not isinstance(left, BoolVal) or not isinstance(right, BoolVal):
            raise TypeMismatchError(f"{op} needs booleans, got {left} and {right}")
        return BoolVal(left.value and right.value if op == "&&" else left.value or right.value)
    if op == "+" and isinstance(left, StrVal) and isinstance(right, StrVal):
        return StrVal(left.value + right.value)
    if not isinstance(left, IntVal) or not isinstance(right, IntVal):
        raise TypeMismatchError(f"{op} needs integers, got {left} and {right}")
    a, b = left.value, right.value
    match op:
        case "+":
            return IntVal(a + b)
        case "-":
            return IntVal(a - b)
        case "*":
            return IntVal(a * b)
        case "<":
            return BoolVal(a < b)
        case "<=":
            return BoolVal(a <= b)
        case ">":
            return BoolVal(a > b)
        case ">=":
            return BoolVal(a >= b)
    raise TypeMismatchError(f"unknown operator {op}")


class ExpressionEvaluator:
    """Evaluates expressions over a heap.

    With a `module`, ghost fields are unfolded from it and each unfolding
    costs one unit of fuel. Without one (statement mode) ghost calls are
    errors, and when `prog` and `this_cls` are given every field read must
    stay within the module of `this`.
    """

    def __init__(
        self,
        heap: Mapping[Address, Obj],
        module: ModuleDef | None = None,
        fuel: int = DEFAULT_GHOST_FUEL,
        prog: LinkedProgram | None = None,
        this_cls: str | None = None,
    ):
        self.heap = heap
        self.module = module
        self.initial_fuel = fuel
        self.fuel = fuel
        self.prog = prog
        self.this_cls = this_cls

    def run(self, expr: Expr, env: Mapping[str, Value]) -> Value | Diverged:
        self.fuel = self.initial_fuel
        try:
            return self.evaluate(expr, env)
        except _OutOfFuel:
            logger.debug("ghost evaluation of %r ran out of fuel", expr)
            return Diverged(self.initial_fuel)
        except RecursionError:
            # unfolding nested deeper than the interpreter stack allows
            logger.debug("ghost evaluation of %r hit the recursion limit", expr)
            return Diverged(self.initial_fuel - self.fuel)

    def evaluate(self, expr: Expr, env: Mapping[str, Value]) -> Value:
        match expr:
            case Var(name):
                if name not in env:
                    raise UnboundVariableError(f"variable {name} is not bound")
                return env[name]
            case Lit(value):
                return value
            case FieldAcc(obj, fname):
                return self._field(self.evaluate(obj, env), fname)
            case GhostCall(recv, name, args):
                target = self.evaluate(recv, env)
                actuals = tuple(self.evaluate(a, env) for a in args)
                return self._ghost(target, name, actuals)
            case BinOp("&&", left, right):
                lv = self._boolean(self.evaluate(left, env))
                return self._boolean(self.evaluate(right, env)) if lv == TRUE else FALSE
            case BinOp("||", left, right):
                lv = self._boolean(self.evaluate(left, env))
                return TRUE if lv == TRUE else self._boolean(self.evaluate(right, env))
            case BinOp(op, left, right):
                return apply_binop(op, self.evaluate(left, env), self.evaluate(right, env))
            case CondExpr(cond, then, orelse):
                branch = then if self._boolean(self.evaluate(cond, env)) == TRUE else orelse
                return self.evaluate(branch, env)
        raise EvaluationError(f"not an expression: {expr!r}")

    def _boolean(self, value: Value) -> BoolVal:
        if not isinstance(value, BoolVal):
            raise TypeMismatchError(f"expected a boolean, got {value}")
        return value

    def _object(self, target: Value, what: str) -> Obj:
        if isinstance(target, NullValue):
            raise NullDereferenceError(f"{what} of null")
        if not isinstance(target, Address):
            raise TypeMismatchError(f"{what} of scalar {target}")
        obj = self.heap.get(target)
        if obj is None:
            raise EvaluationError(f"dangling address {target}")
        return obj

    def _field(self, target: Value, fname: str) -> Value:
        obj = self._object(target, f"field {fname}")
        if self.prog is not None and self.this_cls is not None:
            if not same_module_classes(self.prog, self.this_cls, obj.cls):
                raise PrivacyViolation(f"{self.this_cls} may not read {obj.cls}.{fname}")
        if fname in obj.fields:
            return obj.fields[fname]
        if self.module is not None and lookup_ghost(self.module, obj.cls, fname) is not None:
            return self._ghost(target, fname, ())
        raise MissingFieldError(f"{target} of class {obj.cls} has no field {fname}")

    def _ghost(self, target: Value, name: str, actuals: tuple[Value, ...]) -> Value:
        if self.module is None:
            raise EvaluationError(f"ghost field {name} used in a statement")
        obj = self._object(target, f"ghost field {name}")
        ghost = lookup_ghost(self.module, obj.cls, name)
        if ghost is None:
            raise MissingFieldError(f"class {obj.cls} has no ghost field {name} in {self.module.name}")
        if len(ghost.params) != len(actuals):
            raise TypeMismatchError(
                f"ghost field {obj.cls}.{name} takes {len(ghost.params)} arguments, got {len(actuals)}"
            )
        if self.fuel <= 0:
            raise _OutOfFuel
        self.fuel -= 1
        env: dict[str, Value] = {"this": target}
        env.update({p.name: v for p, v in zip(ghost.params, actuals)})
        return self.evaluate(ghost.body, env)


def eval_expr(
    module: ModuleDef, state: State, expr: Expr, fuel: int = DEFAULT_GHOST_FUEL
) -> Value | Diverged:
    """Evaluate `expr` in the top frame of `state`, unfolding ghosts of `module`.

    Raises:
        EvaluationError: On unbound variables, null dereference, missing
            fields or ill-typed operands
    """
    return ExpressionEvaluator(state.heap, module, fuel).run(expr, state.top.vars)


def eval_in_env(
    module: ModuleDef,
    heap: Mapping[Address, Obj],
    env: Mapping[str, Value],
    expr: Expr,
    fuel: int = DEFAULT_GHOST_FUEL,
) -> Value | Diverged:
    return ExpressionEvaluator(heap, module, fuel).run(expr, env)
