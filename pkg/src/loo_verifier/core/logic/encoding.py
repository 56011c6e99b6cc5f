"""Translation of Loo expressions and assertions into z3 terms.

Values live in one algebraic sort with constructors for null, integers,
booleans, strings and addresses. The class of an address is an integer
code: internal classes take 1..n in name order, other class names get
codes above n as they are met. Fields are arrays from values to values so
that the underlying-logic engine can update them; ghost fields and both
protection forms are uninterpreted functions indexed by a heap version.

Every expression comes with a definedness condition matching the cases in
which the interpreter raises instead of producing a value. An atom holds
only when its expression is defined and true, so a negated atom holds
exactly when `sat` says the negation holds.
"""

from __future__ import annotations

import itertools
import logging
from collections.abc import Iterable, Iterator
from dataclasses import dataclass, field

import z3

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
from loo_verifier.core.models.syntax import (
    ARITH_OPS,
    COMPARE_OPS,
    BinOp,
    CondExpr,
    Expr,
    FieldAcc,
    GhostCall,
    Lit,
    ModuleDef,
    Var,
    expr_vars,
    is_path,
    subexpressions,
)
from loo_verifier.core.models.values import (
    BOOL_TYPE,
    EXTERNAL_TYPE,
    INT_TYPE,
    NAT_TYPE,
    STR_TYPE,
    Address,
    BoolVal,
    IntVal,
    NullValue,
    StrVal,
    Value,
    is_scalar_type,
)
from loo_verifier.core.semantics.assertion_ops import assertion_expressions, free_vars, substitute

logger = logging.getLogger(__name__)


def _value_sort() -> z3.DatatypeSortRef:
    dt = z3.Datatype("LooValue")
    dt.declare("null")
    dt.declare("int", ("ival", z3.IntSort()))
    dt.declare("bool", ("bval", z3.BoolSort()))
    dt.declare("str", ("sval", z3.StringSort()))
    dt.declare("addr", ("aid", z3.IntSort()))
    return dt.create()


VALUE = _value_sort()
FIELD_SORT = z3.ArraySort(VALUE, VALUE)

CLASS_OF = z3.Function("class_of", VALUE, z3.IntSort())
PROTECTED = z3.Function("protected", z3.IntSort(), VALUE, z3.BoolSort())
PROTECTED_FROM = z3.Function("protected_from", z3.IntSort(), VALUE, VALUE, z3.BoolSort())


def is_scalar_term(v: z3.ExprRef) -> z3.BoolRef:
    return z3.Or(VALUE.is_int(v), VALUE.is_bool(v), VALUE.is_str(v))


def literal_term(value: Value) -> z3.ExprRef:
    match value:
        case NullValue():
            return VALUE.null
        case BoolVal(b):
            return VALUE.bool(z3.BoolVal(b))
        case IntVal(i):
            return VALUE.int(z3.IntVal(i))
        case StrVal(s):
            return VALUE.str(z3.StringVal(s))
        case Address(i):
            return VALUE.addr(z3.IntVal(i))
    raise TypeError(f"not a value: {value!r}")


def variable_term(name: str) -> z3.ExprRef:
    return z3.Const(f"var!{name}", VALUE)


def _field_array(name: str) -> z3.ArrayRef:
    return z3.Const(f"field!{name}", FIELD_SORT)


@dataclass
class SymbolicState:
    """Variables and fields as z3 terms; anything never assigned is its initial constant."""

    env: dict[str, z3.ExprRef] = field(default_factory=dict)
    fields: dict[str, z3.ArrayRef] = field(default_factory=dict)
    version: z3.ArithRef = field(default_factory=lambda: z3.IntVal(0))

    def var(self, name: str) -> z3.ExprRef:
        return self.env.get(name, variable_term(name))

    def field_array(self, name: str) -> z3.ArrayRef:
        return self.fields.get(name, _field_array(name))

    def is_base_field(self, name: str) -> bool:
        return name not in self.fields

    def copy(self) -> SymbolicState:
        return SymbolicState(dict(self.env), dict(self.fields), self.version)


def closed_classes(module: ModuleDef) -> frozenset[str]:
    """Internal classes from whose instances only internal objects are reachable.

    Greatest fixpoint over the declared field types: a class stays closed
    while each of its fields is scalar or of a closed class. Sound only
    because the machine gets stuck on a write whose value does not fit the
    field's declared type (FieldTypeMismatch).
    """
    closed = set(module.classes)
    changed = True
    while changed:
        changed = False
        for name in sorted(closed):
            cdef = module.classes[name]
            if any(not is_scalar_type(f.type) and f.type not in closed for f in cdef.fields):
                closed.discard(name)
                changed = True
    return frozenset(closed)


class Encoder:
    """Builds z3 formulas for one query against one module.

    Side facts gathered while encoding (declared field types of the initial
    heap, protection axioms for every protection atom met outside a
    quantifier) are returned by `axioms()`. `exact` drops to False whenever
    an approximation is used, so that a satisfiable query can only be
    reported as a real counter-state when nothing was approximated.
    """

    def __init__(self, module: ModuleDef):
        self.module = module
        internal = sorted(module.classes)
        self.class_codes: dict[str, int] = {name: i for i, name in enumerate(internal, start=1)}
        self.internal_count = len(internal)
        self.closed = closed_classes(module)
        self.exact = True
        self.candidates: list[Expr] = []
        self._typing: list[z3.BoolRef] = []
        self._protected_atoms: list[tuple[z3.ArithRef, z3.ExprRef]] = []
        self._protected_from_atoms: list[tuple[z3.ArithRef, z3.ExprRef, z3.ExprRef]] = []
        self._quantifier_depth = 0
        self._fresh = itertools.count()

    # ------------------------------------------------------------------
    # Classes and types
    # ------------------------------------------------------------------

    def class_code(self, name: str) -> int:
        if name not in self.class_codes:
            self.class_codes[name] = len(self.class_codes) + 1
        return self.class_codes[name]

    def is_internal(self, v: z3.ExprRef) -> z3.BoolRef:
        if self.internal_count == 0:
            return z3.BoolVal(False)
        code = CLASS_OF(v)
        return z3.And(VALUE.is_addr(v), code >= 1, code <= self.internal_count)

    def is_external(self, v: z3.ExprRef) -> z3.BoolRef:
        return z3.And(VALUE.is_addr(v), z3.Not(self.is_internal(v)))

    def has_class(self, v: z3.ExprRef, cls: str) -> z3.BoolRef:
        if cls == INT_TYPE:
            return VALUE.is_int(v)
        if cls == NAT_TYPE:
            return z3.And(VALUE.is_int(v), VALUE.ival(v) >= 0)
        if cls == BOOL_TYPE:
            return VALUE.is_bool(v)
        if cls == STR_TYPE:
            return VALUE.is_str(v)
        if cls == EXTERNAL_TYPE:
            return self.is_external(v)
        return z3.And(VALUE.is_addr(v), CLASS_OF(v) == self.class_code(cls))

    def declared_type_holds(self, v: z3.ExprRef, type_name: str) -> z3.BoolRef:
        """A field or variable of declared type `type_name` holding `v`."""
        if is_scalar_type(type_name):
            return self.has_class(v, type_name)
        if type_name in self.module.classes:
            return z3.Or(VALUE.is_null(v), self.has_class(v, type_name))
        if type_name == EXTERNAL_TYPE:
            return z3.Or(VALUE.is_null(v), self.is_external(v))
        return z3.Or(VALUE.is_null(v), VALUE.is_addr(v))

    def _class_in(self, v: z3.ExprRef, classes: Iterable[str]) -> z3.BoolRef:
        codes = [CLASS_OF(v) == self.class_code(c) for c in classes]
        return z3.Or(*codes) if codes else z3.BoolVal(False)

    # ------------------------------------------------------------------
    # Expressions
    # ------------------------------------------------------------------

    def value(self, expr: Expr, st: SymbolicState) -> tuple[z3.ExprRef, z3.BoolRef]:
        """The term for `expr` and the condition under which it is defined."""
        match expr:
            case Var(name):
                return st.var(name), z3.BoolVal(True)
            case Lit(v):
                return literal_term(v), z3.BoolVal(True)
            case FieldAcc(obj, fname):
                return self._field_access(obj, fname, st)
            case GhostCall(recv, name, args):
                return self._ghost(recv, name, args, st)
            case BinOp(op, left, right):
                return self._binop(op, left, right, st)
            case CondExpr(cond, then, orelse):
                c, dc = self.value(cond, st)
                t, dt = self.value(then, st)
                e, de = self.value(orelse, st)
                guard = VALUE.bval(c)
                defined = z3.And(dc, VALUE.is_bool(c), z3.If(guard, dt, de))
                return z3.If(guard, t, e), defined
        raise TypeError(f"not an expression: {expr!r}")

    def _field_access(self, obj: Expr, fname: str, st: SymbolicState) -> tuple[z3.ExprRef, z3.BoolRef]:
        o, do = self.value(obj, st)
        with_field = [c.name for c in self.module.classes.values() if c.field_type(fname) is not None]
        with_ghost = [
            c.name
            for c in self.module.classes.values()
            if (g := c.ghost(fname)) is not None and not g.params
        ]
        stored = z3.Select(st.field_array(fname), o)
        if st.is_base_field(fname) and self._quantifier_depth == 0:
            for cname in with_field:
                declared = self.module.classes[cname].field_type(fname)
                assert declared is not None
                self._typing.append(
                    z3.Implies(
                        z3.And(VALUE.is_addr(o), CLASS_OF(o) == self.class_code(cname)),
                        self.declared_type_holds(stored, declared),
                    )
                )
        term: z3.ExprRef = stored
        if with_ghost:
            self.exact = False
            ghost = z3.Function(f"ghost!{fname}/0", z3.IntSort(), VALUE, VALUE)
            term = z3.If(self._class_in(o, with_ghost), ghost(st.version, o), stored)
        # fields of external objects are not known to the module
        external_has = z3.Function(f"has_field!{fname}", VALUE, z3.BoolSort())
        defined = z3.And(
            do,
            VALUE.is_addr(o),
            z3.Or(
                self._class_in(o, with_field),
                self._class_in(o, with_ghost),
                z3.And(z3.Not(self.is_internal(o)), external_has(o)),
            ),
        )
        return term, defined

    def _ghost(
        self, recv: Expr, name: str, args: tuple[Expr, ...], st: SymbolicState
    ) -> tuple[z3.ExprRef, z3.BoolRef]:
        self.exact = False
        r, dr = self.value(recv, st)
        actuals = [self.value(a, st) for a in args]
        owners = [
            c.name
            for c in self.module.classes.values()
            if (g := c.ghost(name)) is not None and len(g.params) == len(args)
        ]
        sorts = [z3.IntSort(), VALUE] + [VALUE] * len(args) + [VALUE]
        fn = z3.Function(f"ghost!{name}/{len(args)}", *sorts)
        term = fn(st.version, r, *(a for a, _ in actuals))
        defined = z3.And(dr, *(d for _, d in actuals), VALUE.is_addr(r), self._class_in(r, owners))
        return term, defined

    def _binop(self, op: str, left: Expr, right: Expr, st: SymbolicState) -> tuple[z3.ExprRef, z3.BoolRef]:
        lv, dl = self.value(left, st)
        rv, dr = self.value(right, st)
        if op == "==":
            return VALUE.bool(lv == rv), z3.And(dl, dr)
        if op == "!=":
            return VALUE.bool(lv != rv), z3.And(dl, dr)
        if op == "&&":
            lb = VALUE.bval(lv)
            defined = z3.And(dl, VALUE.is_bool(lv), z3.Implies(lb, z3.And(dr, VALUE.is_bool(rv))))
            return VALUE.bool(z3.And(lb, VALUE.bval(rv))), defined
        if op == "||":
            lb = VALUE.bval(lv)
            defined = z3.And(dl, VALUE.is_bool(lv), z3.Implies(z3.Not(lb), z3.And(dr, VALUE.is_bool(rv))))
            return VALUE.bool(z3.Or(lb, VALUE.bval(rv))), defined
        ints = z3.And(VALUE.is_int(lv), VALUE.is_int(rv))
        a, b = VALUE.ival(lv), VALUE.ival(rv)
        if op == "+":
            strs = z3.And(VALUE.is_str(lv), VALUE.is_str(rv))
            term = z3.If(strs, VALUE.str(z3.Concat(VALUE.sval(lv), VALUE.sval(rv))), VALUE.int(a + b))
            return term, z3.And(dl, dr, z3.Or(ints, strs))
        if op in ARITH_OPS:
            result = a - b if op == "-" else a * b
            return VALUE.int(result), z3.And(dl, dr, ints)
        if op in COMPARE_OPS:
            compare = {"<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b}[op]
            return VALUE.bool(compare), z3.And(dl, dr, ints)
        raise ValueError(f"unknown operator {op}")

    # ------------------------------------------------------------------
    # Assertions
    # ------------------------------------------------------------------

    def prepare(self, *assertions: Assertion) -> None:
        """Collect the ground paths used to instantiate quantifiers in hypotheses."""
        seen: dict[str, Expr] = {repr(c): c for c in self.candidates}
        for assertion in assertions:
            free = free_vars(assertion)
            for top in assertion_expressions(assertion):
                for expr in subexpressions(top):
                    if is_path(expr) and expr_vars(expr) <= free:
                        seen.setdefault(repr(expr), expr)
            for name in free:
                seen.setdefault(repr(Var(name)), Var(name))
        self.candidates = [seen[k] for k in sorted(seen)]

    def holds(self, assertion: Assertion, st: SymbolicState, under: bool) -> z3.BoolRef:
        """Formula for `assertion` in `st`.

        With `under` the formula is implied by the real truth of the
        assertion (hypothesis side); without it the formula implies it
        (goal side). The two differ only at quantifiers: a hypothesis
        quantifier is instantiated at the collected paths, a goal
        quantifier ranges over every value of the bound class.
        """
        match assertion:
            case AExpr(e):
                v, d = self.value(e, st)
                return z3.And(d, VALUE.is_bool(v), VALUE.bval(v))
            case HasClass(e, cls):
                v, d = self.value(e, st)
                return z3.And(d, self.has_class(v, cls))
            case External(e):
                v, d = self.value(e, st)
                return z3.And(d, self.is_external(v))
            case ProtectedFrom(e, source):
                v, dv = self.value(e, st)
                s, ds = self.value(source, st)
                self.exact = False
                if self._quantifier_depth == 0:
                    self._protected_from_atoms.append((st.version, v, s))
                return z3.And(dv, ds, PROTECTED_FROM(st.version, v, s))
            case Protected(e):
                v, d = self.value(e, st)
                self.exact = False
                if self._quantifier_depth == 0:
                    self._protected_atoms.append((st.version, v))
                return z3.And(d, PROTECTED(st.version, v))
            case Not(body):
                return z3.Not(self.holds(body, st, not under))
            case And(left, right):
                return z3.And(self.holds(left, st, under), self.holds(right, st, under))
            case All(var, cls, body):
                self.exact = False
                if under:
                    return self._instantiate(var, cls, body, st)
                return self._forall(var, cls, body, st)
        raise TypeError(f"not an assertion: {assertion!r}")

    def _instantiate(self, var: str, cls: str, body: Assertion, st: SymbolicState) -> z3.BoolRef:
        parts = []
        for cand in self.candidates:
            if var in expr_vars(cand):
                continue
            v, d = self.value(cand, st)
            inner = self.holds(substitute(body, {var: cand}), st, True)
            parts.append(z3.Implies(z3.And(d, self.has_class(v, cls)), inner))
        return z3.And(*parts) if parts else z3.BoolVal(True)

    def _forall(self, var: str, cls: str, body: Assertion, st: SymbolicState) -> z3.BoolRef:
        bound = z3.Const(f"bound!{var}!{next(self._fresh)}", VALUE)
        inner_state = st.copy()
        inner_state.env[var] = bound
        self._quantifier_depth += 1
        try:
            inner = self.holds(body, inner_state, False)
        finally:
            self._quantifier_depth -= 1
        return z3.ForAll([bound], z3.Implies(self.has_class(bound, cls), inner))

    # ------------------------------------------------------------------
    # Side facts
    # ------------------------------------------------------------------

    def fresh_value(self, prefix: str) -> z3.ExprRef:
        return z3.Const(f"{prefix}!{next(self._fresh)}", VALUE)

    def axioms(self) -> list[z3.BoolRef]:
        """Declared field types plus the protection facts for every atom met."""
        facts = list(self._typing)
        facts.extend(self._protection_axioms())
        return facts

    def _protection_axioms(self) -> Iterator[z3.BoolRef]:
        for version, v in self._protected_atoms:
            atom = PROTECTED(version, v)
            yield z3.Implies(VALUE.is_null(v), z3.Not(atom))
            yield z3.Implies(is_scalar_term(v), atom)
        closed = sorted(self.closed)
        for version, v, s in self._protected_from_atoms:
            atom = PROTECTED_FROM(version, v, s)
            # anything is protected from null and from scalars
            yield z3.Implies(z3.Or(VALUE.is_null(s), is_scalar_term(s)), atom)
            yield z3.Implies(z3.And(is_scalar_term(v), VALUE.is_addr(s)), z3.Not(atom))
            yield z3.Implies(z3.And(atom, VALUE.is_addr(s)), v != s)
            if closed:
                # nothing external is reachable from an instance of a closed class
                yield z3.Implies(
                    z3.And(VALUE.is_addr(s), self._class_in(s, closed), z3.Not(is_scalar_term(v)), v != s),
                    atom,
                )


def check_unsat(facts: list[z3.BoolRef], timeout_ms: int) -> z3.CheckSatResult:
    """Satisfiability of the conjunction of `facts` under a timeout."""
    solver = z3.Solver()
    solver.set("timeout", timeout_ms)
    solver.add(*facts)
    result = solver.check()
    logger.debug("solver answered %s on %d facts", result, len(facts))
    return result
