"""Syntactic operations on assertions: free variables, substitution,
grounding, classification, encapsulation, adaptation and normal forms."""

from __future__ import annotations

from collections.abc import Iterator, Mapping, Sequence
from itertools import count

from loo_verifier.core.models.assertion import (
    A_TRUE,
    AExpr,
    All,
    And,
    Assertion,
    External,
    HasClass,
    Not,
    Protected,
    ProtectedFrom,
    conj,
    conjuncts,
    protected_from_all,
)
from loo_verifier.core.models.enums import Tri
from loo_verifier.core.models.results import Classification
from loo_verifier.core.models.state import State
from loo_verifier.core.models.syntax import (
    BinOp,
    CondExpr,
    Expr,
    FieldAcc,
    GhostCall,
    Lit,
    ModuleDef,
    Var,
    expr_vars,
    substitute_expr,
)
from loo_verifier.core.models.values import (
    BOOL_TYPE,
    INT_TYPE,
    STR_TYPE,
    BoolVal,
    IntVal,
    StrVal,
    Value,
)
from loo_verifier.shared.exceptions import UnboundVariableError

# ============================================================
# Free variables and substitution
# ============================================================


def free_vars(assertion: Assertion) -> frozenset[str]:
    match assertion:
        case AExpr(e) | HasClass(e, _) | External(e) | Protected(e):
            return expr_vars(e)
        case ProtectedFrom(e, source):
            return expr_vars(e) | expr_vars(source)
        case Not(body):
            return free_vars(body)
        case And(left, right):
            return free_vars(left) | free_vars(right)
        case All(var, _, body):
            return free_vars(body) - {var}
    raise TypeError(f"not an assertion: {assertion!r}")


def bound_vars(assertion: Assertion) -> frozenset[str]:
    match assertion:
        case Not(body):
            return bound_vars(body)
        case And(left, right):
            return bound_vars(left) | bound_vars(right)
        case All(var, _, body):
            return frozenset({var}) | bound_vars(body)
        case _:
            return frozenset()


def fresh_name(base: str, avoid: frozenset[str] | set[str]) -> str:
    stem = base.rstrip("'").split("_")[0] or "v"
    for n in count(1):
        candidate = f"{stem}_{n}"
        if candidate not in avoid:
            return candidate
    raise AssertionError("unreachable")


def substitute(assertion: Assertion, mapping: Mapping[str, Expr]) -> Assertion:
    """`A[e/x]`, renaming binders that would capture a variable of some `e`."""
    if not mapping:
        return assertion
    match assertion:
        case AExpr(e):
            return AExpr(substitute_expr(e, mapping))
        case HasClass(e, cls):
            return HasClass(substitute_expr(e, mapping), cls)
        case External(e):
            return External(substitute_expr(e, mapping))
        case Protected(e):
            return Protected(substitute_expr(e, mapping))
        case ProtectedFrom(e, source):
            return ProtectedFrom(substitute_expr(e, mapping), substitute_expr(source, mapping))
        case Not(body):
            return Not(substitute(body, mapping))
        case And(left, right):
            return And(substitute(left, mapping), substitute(right, mapping))
        case All(var, cls, body):
            inner = {k: v for k, v in mapping.items() if k != var and k in free_vars(body)}
            if not inner:
                return assertion
            incoming: set[str] = set()
            for e in inner.values():
                incoming |= expr_vars(e)
            if var in incoming:
                avoid = incoming | free_vars(body) | set(inner) | bound_vars(body)
                renamed = fresh_name(var, avoid)
                body = substitute(body, {var: Var(renamed)})
                var = renamed
            return All(var, cls, substitute(body, inner))
    raise TypeError(f"not an assertion: {assertion!r}")


def substitute_values(assertion: Assertion, values: Mapping[str, Value]) -> Assertion:
    return substitute(assertion, {k: Lit(v) for k, v in values.items()})


def ground(state: State, assertion: Assertion) -> Assertion:
    """Replace every free variable by its value in the top frame.

    Raises:
        UnboundVariableError: If a free variable is not bound
    """
    values: dict[str, Value] = {}
    for name in sorted(free_vars(assertion)):
        value = state.lookup(name)
        if value is None:
            raise UnboundVariableError(f"variable {name} is not bound")
        values[name] = value
    return substitute_values(assertion, values)


def assertion_expressions(assertion: Assertion) -> Iterator[Expr]:
    match assertion:
        case AExpr(e) | HasClass(e, _) | External(e) | Protected(e):
            yield e
        case ProtectedFrom(e, source):
            yield e
            yield source
        case Not(body) | All(_, _, body):
            yield from assertion_expressions(body)
        case And(left, right):
            yield from assertion_expressions(left)
            yield from assertion_expressions(right)


# ============================================================
# Stable and Pos
# ============================================================


def is_stable(assertion: Assertion) -> bool:
    """No `protected` anywhere."""
    match assertion:
        case Protected():
            return False
        case Not(body) | All(_, _, body):
            return is_stable(body)
        case And(left, right):
            return is_stable(left) and is_stable(right)
        case _:
            return True


def is_pos(assertion: Assertion, positive: bool = True) -> bool:
    """No `protected` under an odd number of negations."""
    match assertion:
        case Protected():
            return positive
        case Not(body):
            return is_pos(body, not positive)
        case All(_, _, body):
            return is_pos(body, positive)
        case And(left, right):
            return is_pos(left, positive) and is_pos(right, positive)
        case _:
            return True


# ============================================================
# Encapsulation
# ============================================================

TypeContext = Mapping[Expr, str]


def literal_type(value: Value) -> str | None:
    if isinstance(value, IntVal):
        return INT_TYPE
    if isinstance(value, BoolVal):
        return BOOL_TYPE
    if isinstance(value, StrVal):
        return STR_TYPE
    return None


def type_of(module: ModuleDef, gamma: TypeContext, expr: Expr) -> str | None:
    """Declared type of an expression from the context and field declarations."""
    if expr in gamma:
        return gamma[expr]
    match expr:
        case Lit(value):
            return literal_type(value)
        case FieldAcc(obj, fname):
            owner = type_of(module, gamma, obj)
            cdef = module.classes.get(owner) if owner else None
            if cdef is None:
                return None
            declared = cdef.field_type(fname)
            if declared is not None:
                return declared
            ghost = cdef.ghost(fname)
            return ghost.return_type if ghost is not None else None
        case GhostCall(recv, name, _):
            owner = type_of(module, gamma, recv)
            cdef = module.classes.get(owner) if owner else None
            ghost = cdef.ghost(name) if cdef is not None else None
            return ghost.return_type if ghost is not None else None
        case BinOp(op, _, _):
            return INT_TYPE if op in ("+", "-", "*") else BOOL_TYPE
    return None


def _enc_receiver(module: ModuleDef, gamma: TypeContext, obj: Expr) -> Tri:
    owner = type_of(module, gamma, obj)
    if owner is None:
        return Tri.UNKNOWN
    if owner not in module.classes:
        return Tri.NO
    return enc_expr(module, gamma, obj)


def enc_expr(module: ModuleDef, gamma: TypeContext, expr: Expr) -> Tri:
    """Field reads and ghost calls only on expressions typed by an internal class."""
    match expr:
        case Var() | Lit():
            return Tri.YES
        case FieldAcc(obj, _):
            return _enc_receiver(module, gamma, obj)
        case GhostCall(recv, _, args):
            result = _enc_receiver(module, gamma, recv)
            for arg in args:
                result = result & enc_expr(module, gamma, arg)
            return result
        case BinOp(_, left, right):
            return enc_expr(module, gamma, left) & enc_expr(module, gamma, right)
        case CondExpr(cond, then, orelse):
            return enc_expr(module, gamma, cond) & enc_expr(module, gamma, then) & enc_expr(module, gamma, orelse)
    return Tri.UNKNOWN


def _class_facts(parts: Sequence[Assertion]) -> dict[Expr, str]:
    return {p.expr: p.cls for p in parts if isinstance(p, HasClass)}


def encapsulated(module: ModuleDef, assertion: Assertion, gamma: TypeContext | None = None) -> Tri:
    """Three-valued encapsulation judgment.

    YES means no external step can invalidate the assertion; NO and
    UNKNOWN are both refusals, UNKNOWN marking shapes the judgment cannot
    settle (`!!protected x`, fields of untyped expressions).
    """
    context: dict[Expr, str] = dict(gamma or {})
    match assertion:
        case AExpr(e) | HasClass(e, _) | External(e) | Protected(e):
            return enc_expr(module, context, e)
        case ProtectedFrom():
            return Tri.NO
        case And():
            parts = conjuncts(assertion)
            context.update(_class_facts(parts))
            result = Tri.YES
            for part in parts:
                result = result & encapsulated(module, part, context)
            return result
        case All(var, cls, body):
            context[Var(var)] = cls
            return encapsulated(module, body, context)
        case Not(And(Not(left), Not(right))):
            return encapsulated(module, left, context) & encapsulated(module, right, context)
        case Not(And(left, Not(right))) if is_stable(left):
            context.update(_class_facts(conjuncts(left)))
            return encapsulated(module, left, context) & encapsulated(module, right, context)
        case Not(body):
            if is_stable(body):
                return encapsulated(module, body, context)
            return Tri.UNKNOWN if is_pos(assertion) else Tri.NO
    raise TypeError(f"not an assertion: {assertion!r}")


def classify(module: ModuleDef, assertion: Assertion, gamma: TypeContext | None = None) -> Classification:
    return Classification(
        stable=is_stable(assertion),
        pos=is_pos(assertion),
        enc=encapsulated(module, assertion, gamma),
    )


def binder_context(binders: Sequence[tuple[str, str]]) -> dict[Expr, str]:
    return {Var(name): cls for name, cls in binders}


# ============================================================
# Adaptation
# ============================================================


def adapt(ys: Sequence[Expr], assertion: Assertion) -> Assertion:
    """The callee-to-caller view: `protected e` becomes `e protectedFrom y` for each y."""
    match assertion:
        case Protected(e):
            return protected_from_all(e, tuple(ys))
        case Not(body):
            return Not(adapt(ys, body))
        case And(left, right):
            return And(adapt(ys, left), adapt(ys, right))
        case All(var, cls, body):
            incoming: set[str] = set()
            for y in ys:
                incoming |= expr_vars(y)
            if var in incoming:
                renamed = fresh_name(var, incoming | free_vars(body) | bound_vars(body))
                body = substitute(body, {var: Var(renamed)})
                var = renamed
            return All(var, cls, adapt(ys, body))
        case _:
            return assertion


# ============================================================
# Normal form for comparing assertions in proofs
# ============================================================


def _expr_key(expr: Expr) -> str:
    return repr(expr)


def _normalize_expr_atom(expr: Expr) -> Assertion:
    match expr:
        case BinOp("!=", left, right):
            return Not(_normalize_expr_atom(BinOp("==", left, right)))
        case BinOp("==", left, right) if _expr_key(right) < _expr_key(left):
            return AExpr(BinOp("==", right, left))
        case BinOp("&&", left, right):
            return normalize_assertion(And(AExpr(left), AExpr(right)))
        case _:
            return AExpr(expr)


def normalize_assertion(assertion: Assertion, depth: int = 0) -> Assertion:
    """Canonical form: sorted flattened conjunctions, no double negation,
    `!=` as negated `==`, bound variables renamed by nesting depth."""
    match assertion:
        case AExpr(e):
            return _normalize_expr_atom(e)
        case Not(body):
            inner = normalize_assertion(body, depth)
            if isinstance(inner, Not):
                return inner.body
            return Not(inner)
        case And():
            seen: dict[str, Assertion] = {}
            for part in conjuncts(assertion):
                for piece in conjuncts(normalize_assertion(part, depth)):
                    if piece != A_TRUE:
                        seen.setdefault(repr(piece), piece)
            return conj(*(seen[k] for k in sorted(seen)))
        case All(var, cls, body):
            canonical = f"_b{depth}"
            renamed = substitute(body, {var: Var(canonical)}) if var != canonical else body
            return All(canonical, cls, normalize_assertion(renamed, depth + 1))
        case _:
            return assertion


def same_assertion(left: Assertion, right: Assertion) -> bool:
    return normalize_assertion(left) == normalize_assertion(right)
