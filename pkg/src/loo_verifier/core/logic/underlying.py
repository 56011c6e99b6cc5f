"""Underlying Hoare logic for call-free statements.

Triples are checked by symbolic execution: the statement is run over a
symbolic state, collecting the condition under which it terminates
normally, and the postcondition must follow from the precondition in the
final state. Stuck executions have no final state, so the check is one of
partial correctness, as in the logic the quadruples are built on.
"""

from __future__ import annotations

import itertools
import logging

import z3

from loo_verifier.core.models.assertion import Assertion
from loo_verifier.core.models.enums import Tri
from loo_verifier.core.models.syntax import (
    DISCARD,
    Expr,
    ExprAssign,
    FieldAcc,
    FieldRead,
    FieldWrite,
    If,
    LitAssign,
    ModuleDef,
    New,
    Seq,
    Skip,
    Stmt,
    Var,
    VarAssign,
    contains_call,
    statement_variables,
)
from loo_verifier.core.models.values import default_value
from loo_verifier.core.logic.encoding import (
    VALUE,
    Encoder,
    SymbolicState,
    check_unsat,
    literal_term,
)
from loo_verifier.core.rules.defaults import DEFAULT_SOLVER_TIMEOUT_MS
from loo_verifier.core.semantics.assertion_ops import free_vars, is_stable
from loo_verifier.shared.exceptions import ProofError
from loo_verifier.shared.formatters import format_stmt_inline

logger = logging.getLogger(__name__)


class SymbolicExecutor:
    """Strongest postconditions of call-free statements."""

    def __init__(self, encoder: Encoder, variables: frozenset[str]):
        self.encoder = encoder
        self.variables = variables
        self.facts: list[z3.BoolRef] = []
        self._versions = itertools.count(1)

    def _assign(self, st: SymbolicState, target: str, value: z3.ExprRef) -> SymbolicState:
        out = st.copy()
        if target != DISCARD:
            out.env[target] = value
        return out

    def _bump(self, st: SymbolicState) -> None:
        st.version = z3.IntVal(next(self._versions))

    def execute(self, stmt: Stmt, st: SymbolicState) -> tuple[SymbolicState, z3.BoolRef]:
        """Final state and the condition for reaching it."""
        enc = self.encoder
        match stmt:
            case Skip():
                return st, z3.BoolVal(True)
            case VarAssign(target, source):
                return self._assign(st, target, st.var(source)), z3.BoolVal(True)
            case LitAssign(target, value):
                return self._assign(st, target, literal_term(value)), z3.BoolVal(True)
            case FieldRead(target, obj, fname):
                v, defined = enc.value(FieldAcc(Var(obj), fname), st)
                return self._assign(st, target, v), defined
            case ExprAssign(target, expr):
                v, defined = enc.value(expr, st)
                return self._assign(st, target, v), defined
            case FieldWrite(obj, fname, source):
                return self._write(st, obj, fname, source)
            case New(target, cls):
                return self._new(st, target, cls)
            case Seq(first, second):
                mid, c1 = self.execute(first, st)
                out, c2 = self.execute(second, mid)
                return out, z3.And(c1, c2)
            case If(cond, then, orelse):
                return self._branch(st, cond, then, orelse)
        raise ProofError(f"{format_stmt_inline(stmt)} is not call-free")

    def _write(self, st: SymbolicState, obj: str, fname: str, source: Expr) -> tuple[SymbolicState, z3.BoolRef]:
        enc = self.encoder
        o = st.var(obj)
        v, defined = enc.value(source, st)
        owners = [c.name for c in enc.module.classes.values() if c.field_type(fname) is not None]
        has_field = z3.Or(*(enc.has_class(o, c) for c in owners)) if owners else z3.BoolVal(False)
        out = st.copy()
        out.fields[fname] = z3.Store(st.field_array(fname), o, v)
        self._bump(out)
        return out, z3.And(defined, VALUE.is_addr(o), has_field)

    def _new(self, st: SymbolicState, target: str, cls: str) -> tuple[SymbolicState, z3.BoolRef]:
        enc = self.encoder
        fresh = enc.fresh_value(f"new!{cls}")
        enc.exact = False
        facts = [enc.has_class(fresh, cls)]
        for name in sorted(self.variables | set(st.env)):
            facts.append(fresh != st.var(name))
        known_fields = {f.name for c in enc.module.classes.values() for f in c.fields} | set(st.fields)
        out = st.copy()
        for fname in sorted(known_fields):
            holder = z3.Const(f"holder!{fname}!{next(self._versions)}", VALUE)
            facts.append(z3.ForAll([holder], z3.Select(st.field_array(fname), holder) != fresh))
        cdef = enc.module.classes.get(cls)
        for fdef in cdef.fields if cdef is not None else ():
            out.fields[fdef.name] = z3.Store(out.field_array(fdef.name), fresh, literal_term(default_value(fdef.type)))
        self._bump(out)
        if target != DISCARD:
            out.env[target] = fresh
        self.facts.append(z3.And(*facts))
        return out, z3.BoolVal(True)

    def _branch(self, st: SymbolicState, cond: Expr, then: Stmt, orelse: Stmt) -> tuple[SymbolicState, z3.BoolRef]:
        c, defined = self.encoder.value(cond, st)
        guard = VALUE.bval(c)
        s1, p1 = self.execute(then, st)
        s2, p2 = self.execute(orelse, st)
        out = SymbolicState()
        for name in set(s1.env) | set(s2.env):
            out.env[name] = z3.If(guard, s1.var(name), s2.var(name))
        for fname in set(s1.fields) | set(s2.fields):
            out.fields[fname] = z3.If(guard, s1.field_array(fname), s2.field_array(fname))
        out.version = z3.If(guard, s1.version, s2.version)
        return out, z3.And(defined, VALUE.is_bool(c), z3.If(guard, p1, p2))


def check_ul_triple(
    module: ModuleDef,
    pre: Assertion,
    stmt: Stmt,
    post: Assertion,
    timeout_ms: int = DEFAULT_SOLVER_TIMEOUT_MS,
) -> Tri:
    """`M |-ul {pre} stmt {post}` for a call-free statement and stable assertions.

    Raises:
        ProofError: If the statement calls a method or an assertion uses `protected`
    """
    if contains_call(stmt):
        raise ProofError(f"{format_stmt_inline(stmt)} contains a method call")
    for assertion in (pre, post):
        if not is_stable(assertion):
            raise ProofError("assertions of the underlying logic must not use protected")

    encoder = Encoder(module)
    encoder.prepare(pre)
    variables = statement_variables(stmt) | free_vars(pre) | free_vars(post)
    executor = SymbolicExecutor(encoder, frozenset(variables))
    initial = SymbolicState()
    assumed = encoder.holds(pre, initial, under=True)
    final, reached = executor.execute(stmt, initial)
    goal = encoder.holds(post, final, under=False)

    facts = [assumed, reached, *executor.facts, z3.Not(goal), *encoder.axioms()]
    result = check_unsat(facts, timeout_ms)
    if result == z3.unsat:
        answer = Tri.YES
    elif result == z3.sat and encoder.exact:
        answer = Tri.NO
    else:
        answer = Tri.UNKNOWN
    logger.debug("ul triple over %s: %s", format_stmt_inline(stmt), answer.value)
    return answer
