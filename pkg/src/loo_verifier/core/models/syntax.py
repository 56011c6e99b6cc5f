"""Abstract syntax of Loo programs: expressions, statements and definitions.

All nodes are frozen dataclasses. Source spans are carried along for
diagnostics but excluded from equality, so a parse of the pretty-printed
text compares equal to the original tree.
"""

from __future__ import annotations

from collections.abc import Iterator, Mapping
from dataclasses import dataclass, field
from typing import TypeAlias

from loo_verifier.core.models.enums import Privacy
from loo_verifier.core.models.values import Value

THIS = "this"
RES = "res"
DISCARD = "_"
RESERVED_VARIABLES = frozenset({THIS, RES})


@dataclass(frozen=True, slots=True)
class SourceSpan:
    line: int
    column: int

    def __str__(self) -> str:
        return f"{self.line}:{self.column}"


NO_SPAN = SourceSpan(0, 0)


# ============================================================
# Expressions
# ============================================================


@dataclass(frozen=True, slots=True)
class Var:
    name: str


@dataclass(frozen=True, slots=True)
class Lit:
    value: Value


@dataclass(frozen=True, slots=True)
class FieldAcc:
    obj: Expr
    field: str


@dataclass(frozen=True, slots=True)
class GhostCall:
    recv: Expr
    name: str
    args: tuple[Expr, ...] = ()


@dataclass(frozen=True, slots=True)
class BinOp:
    """Binary operator over values; `==`/`!=` on any values, the rest on scalars."""

    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True, slots=True)
class CondExpr:
    """`if c then e1 else e2` inside ghost bodies and assertions."""

    cond: Expr
    then: Expr
    orelse: Expr


Expr: TypeAlias = Var | Lit | FieldAcc | GhostCall | BinOp | CondExpr

ARITH_OPS = frozenset({"+", "-", "*"})
COMPARE_OPS = frozenset({"<", "<=", ">", ">="})
EQUALITY_OPS = frozenset({"==", "!="})
LOGIC_OPS = frozenset({"&&", "||"})
BINARY_OPS = ARITH_OPS | COMPARE_OPS | EQUALITY_OPS | LOGIC_OPS


def expr_vars(expr: Expr) -> frozenset[str]:
    """Variables occurring in an expression."""
    match expr:
        case Var(name):
            return frozenset({name})
        case Lit():
            return frozenset()
        case FieldAcc(obj, _):
            return expr_vars(obj)
        case GhostCall(recv, _, args):
            out = expr_vars(recv)
            for arg in args:
                out |= expr_vars(arg)
            return out
        case BinOp(_, left, right):
            return expr_vars(left) | expr_vars(right)
        case CondExpr(cond, then, orelse):
            return expr_vars(cond) | expr_vars(then) | expr_vars(orelse)
    raise TypeError(f"not an expression: {expr!r}")


def subexpressions(expr: Expr) -> Iterator[Expr]:
    """Pre-order walk over an expression tree."""
    yield expr
    match expr:
        case FieldAcc(obj, _):
            yield from subexpressions(obj)
        case GhostCall(recv, _, args):
            yield from subexpressions(recv)
            for arg in args:
                yield from subexpressions(arg)
        case BinOp(_, left, right):
            yield from subexpressions(left)
            yield from subexpressions(right)
        case CondExpr(cond, then, orelse):
            yield from subexpressions(cond)
            yield from subexpressions(then)
            yield from subexpressions(orelse)
        case _:
            pass


def substitute_expr(expr: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Replace variables by expressions (expressions have no binders)."""
    match expr:
        case Var(name):
            return mapping.get(name, expr)
        case Lit():
            return expr
        case FieldAcc(obj, fname):
            return FieldAcc(substitute_expr(obj, mapping), fname)
        case GhostCall(recv, name, args):
            return GhostCall(
                substitute_expr(recv, mapping),
                name,
                tuple(substitute_expr(a, mapping) for a in args),
            )
        case BinOp(op, left, right):
            return BinOp(op, substitute_expr(left, mapping), substitute_expr(right, mapping))
        case CondExpr(cond, then, orelse):
            return CondExpr(
                substitute_expr(cond, mapping),
                substitute_expr(then, mapping),
                substitute_expr(orelse, mapping),
            )
    raise TypeError(f"not an expression: {expr!r}")


def is_path(expr: Expr) -> bool:
    """`x` or `x.f1...fn`."""
    while isinstance(expr, FieldAcc):
        expr = expr.obj
    return isinstance(expr, Var)


# ============================================================
# Statements
# ============================================================


@dataclass(frozen=True, slots=True)
class VarAssign:
    target: str
    source: str


@dataclass(frozen=True, slots=True)
class LitAssign:
    target: str
    value: Value


@dataclass(frozen=True, slots=True)
class FieldRead:
    target: str
    obj: str
    field: str


@dataclass(frozen=True, slots=True)
class ExprAssign:
    """`x := e` for a compound call-free expression (scalar arithmetic, comparisons)."""

    target: str
    expr: Expr


@dataclass(frozen=True, slots=True)
class FieldWrite:
    obj: str
    field: str
    source: Expr


@dataclass(frozen=True, slots=True)
class Call:
    target: str
    receiver: str
    method: str
    args: tuple[Expr, ...] = ()


@dataclass(frozen=True, slots=True)
class New:
    target: str
    cls: str


@dataclass(frozen=True, slots=True)
class Seq:
    first: Stmt
    second: Stmt


@dataclass(frozen=True, slots=True)
class If:
    cond: Expr
    then: Stmt
    orelse: Stmt


@dataclass(frozen=True, slots=True)
class Skip:
    pass


Stmt: TypeAlias = (
    VarAssign | LitAssign | FieldRead | ExprAssign | FieldWrite | Call | New | Seq | If | Skip
)

SKIP = Skip()


def flatten(stmt: Stmt) -> list[Stmt]:
    """Top-level statements of a sequence, with `skip` removed."""
    if isinstance(stmt, Seq):
        return flatten(stmt.first) + flatten(stmt.second)
    if isinstance(stmt, Skip):
        return []
    return [stmt]


def seq(*stmts: Stmt) -> Stmt:
    """Right-associated sequence of the given statements, `skip` when empty."""
    parts: list[Stmt] = []
    for s in stmts:
        parts.extend(flatten(s))
    if not parts:
        return SKIP
    result = parts[-1]
    for s in reversed(parts[:-1]):
        result = Seq(s, result)
    return result


def normalize(stmt: Stmt) -> Stmt:
    """Right-associate every sequence, including those nested in branches."""
    parts = []
    for s in flatten(stmt):
        if isinstance(s, If):
            s = If(s.cond, normalize(s.then), normalize(s.orelse))
        parts.append(s)
    return seq(*parts)


def decompose(stmt: Stmt) -> tuple[Stmt, Stmt]:
    """Split a continuation into its first non-skip statement and the rest."""
    parts = flatten(stmt)
    if not parts:
        return SKIP, SKIP
    return parts[0], seq(*parts[1:])


def assigned_variables(stmt: Stmt) -> frozenset[str]:
    """Variables a statement may assign."""
    match stmt:
        case VarAssign(target, _) | LitAssign(target, _) | FieldRead(target, _, _):
            return frozenset({target})
        case ExprAssign(target, _) | New(target, _) | Call(target, _, _, _):
            return frozenset({target})
        case Seq(first, second):
            return assigned_variables(first) | assigned_variables(second)
        case If(_, then, orelse):
            return assigned_variables(then) | assigned_variables(orelse)
        case _:
            return frozenset()


def statement_variables(stmt: Stmt) -> frozenset[str]:
    """All variables a statement mentions."""
    match stmt:
        case VarAssign(target, source):
            return frozenset({target, source})
        case LitAssign(target, _):
            return frozenset({target})
        case FieldRead(target, obj, _):
            return frozenset({target, obj})
        case ExprAssign(target, expr):
            return frozenset({target}) | expr_vars(expr)
        case FieldWrite(obj, _, source):
            return frozenset({obj}) | expr_vars(source)
        case Call(target, receiver, _, args):
            out = frozenset({target, receiver})
            for arg in args:
                out |= expr_vars(arg)
            return out
        case New(target, _):
            return frozenset({target})
        case Seq(first, second):
            return statement_variables(first) | statement_variables(second)
        case If(cond, then, orelse):
            return expr_vars(cond) | statement_variables(then) | statement_variables(orelse)
        case _:
            return frozenset()


def contains_call(stmt: Stmt) -> bool:
    match stmt:
        case Call():
            return True
        case Seq(first, second):
            return contains_call(first) or contains_call(second)
        case If(_, then, orelse):
            return contains_call(then) or contains_call(orelse)
        case _:
            return False


def statement_expressions(stmt: Stmt) -> Iterator[Expr]:
    """Expressions evaluated by a statement (not descending into nested statements)."""
    match stmt:
        case ExprAssign(_, expr):
            yield expr
        case FieldWrite(_, _, source):
            yield source
        case Call(_, _, _, args):
            yield from args
        case If(cond, _, _):
            yield cond
        case _:
            return


def walk_statements(stmt: Stmt) -> Iterator[Stmt]:
    """Every statement node in pre-order."""
    yield stmt
    match stmt:
        case Seq(first, second):
            yield from walk_statements(first)
            yield from walk_statements(second)
        case If(_, then, orelse):
            yield from walk_statements(then)
            yield from walk_statements(orelse)
        case _:
            pass


# ============================================================
# Definitions
# ============================================================


@dataclass(frozen=True, slots=True)
class Param:
    name: str
    type: str


@dataclass(frozen=True, slots=True)
class FieldDef:
    name: str
    type: str
    span: SourceSpan = field(default=NO_SPAN, compare=False)


@dataclass(frozen=True, slots=True)
class GhostDef:
    name: str
    params: tuple[Param, ...]
    return_type: str
    body: Expr
    span: SourceSpan = field(default=NO_SPAN, compare=False)


@dataclass(frozen=True, slots=True)
class MethodDef:
    privacy: Privacy
    name: str
    params: tuple[Param, ...]
    return_type: str
    body: Stmt
    locals: tuple[Param, ...] = ()
    span: SourceSpan = field(default=NO_SPAN, compare=False)

    @property
    def param_names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.params)

    @property
    def formals(self) -> tuple[str, ...]:
        """Variables the body may not assign: the receiver and the parameters."""
        return (THIS, *self.param_names)

    @property
    def is_public(self) -> bool:
        return self.privacy == Privacy.PUBLIC

    def variable_types(self) -> dict[str, str]:
        types = {p.name: p.type for p in self.params}
        types.update({p.name: p.type for p in self.locals})
        types[RES] = self.return_type
        return types


@dataclass(frozen=True, slots=True)
class ClassDef:
    name: str
    fields: tuple[FieldDef, ...] = ()
    ghosts: tuple[GhostDef, ...] = ()
    methods: tuple[MethodDef, ...] = ()
    span: SourceSpan = field(default=NO_SPAN, compare=False)

    @property
    def field_names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.fields)

    def field_type(self, name: str) -> str | None:
        for f in self.fields:
            if f.name == name:
                return f.type
        return None

    def method(self, name: str) -> MethodDef | None:
        for m in self.methods:
            if m.name == name:
                return m
        return None

    def ghost(self, name: str) -> GhostDef | None:
        for g in self.ghosts:
            if g.name == name:
                return g
        return None


@dataclass(frozen=True)
class ModuleDef:
    """Finite map from class names to class definitions."""

    name: str
    classes: Mapping[str, ClassDef] = field(default_factory=dict)

    def __contains__(self, cls: object) -> bool:
        return cls in self.classes

    @property
    def class_names(self) -> frozenset[str]:
        return frozenset(self.classes)
