"""Pretty printers for Loo syntax, specifications, scenarios and states.

Printing then parsing gives back an equal tree for everything the parsers
produce; the round-trip tests depend on it.
"""

from __future__ import annotations

from collections.abc import Iterable

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
from loo_verifier.core.models.enums import StepKind
from loo_verifier.core.models.results import TraceRecord
from loo_verifier.core.models.spec import MethodSpec, Scenario, ScopedInvariant, Spec
from loo_verifier.core.models.state import State
from loo_verifier.core.models.syntax import (
    DISCARD,
    BinOp,
    Call,
    ClassDef,
    CondExpr,
    Expr,
    ExprAssign,
    FieldAcc,
    FieldRead,
    FieldWrite,
    GhostCall,
    If,
    Lit,
    LitAssign,
    MethodDef,
    ModuleDef,
    New,
    Param,
    Seq,
    Skip,
    Stmt,
    Var,
    VarAssign,
    decompose,
    flatten,
)
from loo_verifier.core.models.values import IntVal, Value

INDENT = "    "
_CONJ = " /\\ "

_BINARY_PRECEDENCE = {
    "||": 1,
    "&&": 2,
    "==": 3,
    "!=": 3,
    "<": 4,
    "<=": 4,
    ">": 4,
    ">=": 4,
    "+": 5,
    "-": 5,
    "*": 6,
}
_UNARY = 7
_POSTFIX = 8


def format_value(value: Value) -> str:
    return str(value)


def format_param(param: Param) -> str:
    return f"{param.name}: {param.type}"


def format_params(params: tuple[Param, ...]) -> str:
    return ", ".join(format_param(p) for p in params)


# =============================================================================
# Expressions
# =============================================================================


def _expr_precedence(expr: Expr) -> int:
    match expr:
        case BinOp(op, _, _):
            return _BINARY_PRECEDENCE[op]
        case CondExpr():
            return 0
        case Lit(IntVal(n)) if n < 0:
            return _UNARY
        case _:
            return _POSTFIX


def format_expr(expr: Expr, min_prec: int = 0) -> str:
    """Print an expression, parenthesizing it when it binds looser than `min_prec`."""
    text = _format_expr(expr)
    return f"({text})" if _expr_precedence(expr) < min_prec else text


def _format_expr(expr: Expr) -> str:
    match expr:
        case Var(name):
            return name
        case Lit(value):
            return format_value(value)
        case FieldAcc(obj, fname):
            return f"{format_expr(obj, _POSTFIX)}.{fname}"
        case GhostCall(recv, name, args):
            rendered = ", ".join(format_expr(a) for a in args)
            return f"{format_expr(recv, _POSTFIX)}.{name}({rendered})"
        case BinOp(op, left, right):
            prec = _BINARY_PRECEDENCE[op]
            return f"{format_expr(left, prec)} {op} {format_expr(right, prec + 1)}"
        case CondExpr(cond, then, orelse):
            return f"if {format_expr(cond)} then {format_expr(then)} else {format_expr(orelse)}"
    raise TypeError(f"not an expression: {expr!r}")


# =============================================================================
# Assertions
# =============================================================================

_IMPLIES, _OR, _AND, _PREFIX, _ATOM = 1, 2, 3, 4, 5


def _assertion_form(assertion: Assertion) -> tuple[int, str]:
    match assertion:
        case AExpr(expr):
            return _ATOM, format_expr(expr, 1)
        case HasClass(expr, cls):
            return _ATOM, f"{format_expr(expr, 1)} : {cls}"
        case ProtectedFrom(expr, source):
            return _ATOM, f"{format_expr(expr, 1)} protectedFrom {format_expr(source, _UNARY)}"
        case External(expr):
            return _PREFIX, f"external {format_expr(expr, _UNARY)}"
        case Protected(expr):
            return _PREFIX, f"protected {format_expr(expr, _UNARY)}"
        case All(var, cls, body):
            return _IMPLIES, f"forall {var}:{cls}. {format_assertion(body)}"
        case And(left, right):
            return _AND, f"{format_assertion(left, _PREFIX)} /\\ {format_assertion(right, _AND)}"
        case Not(External(expr)):
            return _PREFIX, f"internal {format_expr(expr, _UNARY)}"
        case Not(All(var, cls, Not(body))):
            return _IMPLIES, f"exists {var}:{cls}. {format_assertion(body)}"
        case Not(And(Not(left), Not(right))):
            return _OR, f"{format_assertion(left, _OR)} \\/ {format_assertion(right, _AND)}"
        case Not(And(left, Not(right))):
            return _IMPLIES, f"{format_assertion(left, _OR)} -> {format_assertion(right, _IMPLIES)}"
        case Not(body):
            return _PREFIX, f"!{format_assertion(body, _PREFIX)}"
    raise TypeError(f"not an assertion: {assertion!r}")


def format_assertion(assertion: Assertion, min_prec: int = 0) -> str:
    prec, text = _assertion_form(assertion)
    return f"({text})" if prec < min_prec else text


# =============================================================================
# Statements and modules
# =============================================================================


def format_stmt(stmt: Stmt, indent: int = 0) -> str:
    """Print a statement, one top-level statement per line."""
    pad = INDENT * indent
    parts = flatten(stmt)
    if not parts:
        return f"{pad}skip"
    return ";\n".join(_format_simple(s, indent) for s in parts)


def format_stmt_inline(stmt: Stmt) -> str:
    """Single-line rendering used in traces and diagnostics."""
    return " ".join(line.strip() for line in format_stmt(stmt).splitlines())


def _format_simple(stmt: Stmt, indent: int) -> str:
    pad = INDENT * indent
    match stmt:
        case VarAssign(target, source):
            return f"{pad}{target} := {source}"
        case LitAssign(target, value):
            return f"{pad}{target} := {format_value(value)}"
        case FieldRead(target, obj, fname):
            return f"{pad}{target} := {obj}.{fname}"
        case ExprAssign(target, expr):
            return f"{pad}{target} := {format_expr(expr)}"
        case FieldWrite(obj, fname, source):
            return f"{pad}{obj}.{fname} := {format_expr(source)}"
        case Call(target, receiver, method, args):
            rendered = ", ".join(format_expr(a) for a in args)
            call = f"{receiver}.{method}({rendered})"
            return f"{pad}{call}" if target == DISCARD else f"{pad}{target} := {call}"
        case New(target, cls):
            return f"{pad}{target} := new {cls}"
        case If(cond, then, orelse):
            lines = [f"{pad}if {format_expr(cond)} {{", format_stmt(then, indent + 1)]
            if flatten(orelse):
                lines += [f"{pad}}} else {{", format_stmt(orelse, indent + 1)]
            lines.append(f"{pad}}}")
            return "\n".join(lines)
        case Skip():
            return f"{pad}skip"
        case Seq():
            return format_stmt(stmt, indent)
    raise TypeError(f"not a statement: {stmt!r}")


def format_method(method: MethodDef, indent: int = 0) -> str:
    pad = INDENT * indent
    header = (
        f"{pad}{method.privacy.value} method {method.name}"
        f"({format_params(method.params)}): {method.return_type} {{"
    )
    lines = [header]
    lines += [f"{pad}{INDENT}local {format_param(p)};" for p in method.locals]
    lines.append(format_stmt(method.body, indent + 1))
    lines.append(f"{pad}}}")
    return "\n".join(lines)


def format_class(cdef: ClassDef, indent: int = 0) -> str:
    pad = INDENT * indent
    inner = pad + INDENT
    lines = [f"{pad}class {cdef.name} {{"]
    lines += [f"{inner}field {f.name}: {f.type};" for f in cdef.fields]
    for g in cdef.ghosts:
        lines.append(
            f"{inner}ghost {g.name}({format_params(g.params)}): {g.return_type} = "
            f"{format_expr(g.body)};"
        )
    lines += [format_method(m, indent + 1) for m in cdef.methods]
    lines.append(f"{pad}}}")
    return "\n".join(lines)


def format_module(module: ModuleDef) -> str:
    lines = [f"module {module.name} {{"]
    lines += [format_class(c, 1) for c in module.classes.values()]
    lines.append("}")
    return "\n".join(lines) + "\n"


# =============================================================================
# Specifications, scenarios and states
# =============================================================================


def format_invariant(inv: ScopedInvariant) -> str:
    return (
        f"invariant {inv.name} ({format_params(inv.binders)}) {{\n"
        f"{INDENT}{format_assertion(inv.body)}\n}}"
    )


def format_method_spec(ms: MethodSpec) -> str:
    return (
        f"method {ms.name} ({format_params(ms.binders)}) {{\n"
        f"{INDENT}pre: {format_assertion(ms.pre)}\n"
        f"}} {ms.privacy.value} {ms.cls}::{ms.method}({format_params(ms.formals)}) {{\n"
        f"{INDENT}post: {format_assertion(ms.post)}\n"
        f"{INDENT}mid: {format_assertion(ms.mid)}\n}}"
    )


def format_spec(spec: Spec) -> str:
    blocks = [
        format_invariant(c) if isinstance(c, ScopedInvariant) else format_method_spec(c)
        for c in spec.conjuncts
    ]
    blocks += [f"spec {name} = {_CONJ.join(members)};" for name, members in spec.groups.items()]
    return "\n\n".join(blocks) + "\n"


def format_scenario(scenario: Scenario) -> str:
    state = scenario.state
    lines = [f"scenario {scenario.name} {{", f"{INDENT}heap {{"]
    for addr in sorted(state.heap):
        obj = state.heap[addr]
        if obj.fields:
            fields = "; ".join(f"{k} = {format_value(v)}" for k, v in obj.fields.items())
            lines.append(f"{INDENT * 2}{addr} : {obj.cls} {{ {fields} }};")
        else:
            lines.append(f"{INDENT * 2}{addr} : {obj.cls};")
    lines.append(f"{INDENT}}}")
    bindings = ", ".join(f"{k} = {format_value(v)}" for k, v in state.frames[0].vars.items())
    lines.append(f"{INDENT}frame {bindings};")
    lines.append(f"{INDENT}run {{")
    lines.append(format_stmt(scenario.body, 2))
    lines.append(f"{INDENT}}}")
    lines.append("}")
    return "\n".join(lines) + "\n"


def render_heap(state: State) -> dict[str, dict[str, str]]:
    """Heap as nested strings with a deterministic order, for reports."""
    return {
        str(addr): {"class": state.heap[addr].cls}
        | {k: format_value(v) for k, v in sorted(state.heap[addr].fields.items())}
        for addr in sorted(state.heap)
    }


def format_state(state: State) -> str:
    """Multi-line rendering of frames (bottom first) and heap."""
    lines = []
    for index, frame in enumerate(state.frames, 1):
        bindings = ", ".join(f"{k}={format_value(v)}" for k, v in frame.vars.items())
        lines.append(f"frame {index}: {bindings} | {format_stmt_inline(frame.cont)}")
    for addr, fields in render_heap(state).items():
        rest = ", ".join(f"{k}={v}" for k, v in fields.items() if k != "class")
        lines.append(f"{addr}: {fields['class']} {{{rest}}}")
    return "\n".join(lines)


def heap_delta(before: State | None, after: State) -> dict[str, dict[str, str]]:
    """Objects created or changed between two states; only changed fields are listed."""
    delta: dict[str, dict[str, str]] = {}
    for addr in sorted(after.heap):
        obj = after.heap[addr]
        old = before.heap.get(addr) if before is not None else None
        if old is None:
            delta[str(addr)] = {"class": obj.cls} | {k: format_value(v) for k, v in sorted(obj.fields.items())}
            continue
        changed = {k: format_value(v) for k, v in sorted(obj.fields.items()) if old.fields.get(k) != v}
        if changed:
            delta[str(addr)] = changed
    return delta


def trace_records(steps: Iterable[tuple[State, StepKind | None, bool]]) -> list[TraceRecord]:
    """Report rows for `(state, step kind, external)` triples; the first row carries the whole heap."""
    records: list[TraceRecord] = []
    previous: State | None = None
    for index, (state, kind, external) in enumerate(steps):
        records.append(
            TraceRecord(
                index=index,
                depth=state.depth,
                kind=kind.value if kind is not None else "start",
                stmt=format_stmt_inline(decompose(state.cont)[0]),
                external=external,
                heap_delta=heap_delta(previous, state),
            )
        )
        previous = state
    return records
