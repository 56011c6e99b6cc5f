"""Static well-formedness of Loo modules."""

from __future__ import annotations

import logging

from loo_verifier.core.models.enums import Severity
from loo_verifier.core.models.results import Diagnostic
from loo_verifier.core.models.syntax import (
    RES,
    RESERVED_VARIABLES,
    THIS,
    Call,
    ClassDef,
    Expr,
    FieldAcc,
    FieldRead,
    FieldWrite,
    GhostCall,
    If,
    Lit,
    MethodDef,
    ModuleDef,
    New,
    Seq,
    Stmt,
    Var,
    assigned_variables,
    expr_vars,
    flatten,
    statement_expressions,
    statement_variables,
    subexpressions,
    walk_statements,
)
from loo_verifier.core.models.values import EXTERNAL_TYPE, OBJECT_CLASS, is_scalar_type

logger = logging.getLogger(__name__)


def _assigns_res(stmt: Stmt) -> bool:
    """Every path through `stmt` assigns `res`."""
    for part in flatten(stmt):
        if isinstance(part, If):
            if _assigns_res(part.then) and _assigns_res(part.orelse):
                return True
        elif RES in assigned_variables(part):
            return True
    return False


class ModuleWellFormednessAnalyzer:
    """Checks a module for the syntactic conditions the machine and the logic rely on."""

    def __init__(self, module: ModuleDef):
        self.module = module
        self.diagnostics: list[Diagnostic] = []

    def analyze(self) -> list[Diagnostic]:
        """Run all checks; diagnostics come out in class and member order."""
        for cdef in self.module.classes.values():
            self._check_members(cdef)
            for fdef in cdef.fields:
                self._check_type(fdef.type, f"{cdef.name}.{fdef.name}")
            for ghost in cdef.ghosts:
                self._check_ghost(cdef, ghost.name)
            for method in cdef.methods:
                self._check_method(cdef, method)
        logger.debug("module %s: %d diagnostics", self.module.name, len(self.diagnostics))
        return self.diagnostics

    def _add(self, code: str, message: str, location: str, severity: Severity = Severity.ERROR) -> None:
        self.diagnostics.append(Diagnostic(code=code, message=message, location=location, severity=severity))

    def _known_type(self, type_name: str) -> bool:
        return (
            is_scalar_type(type_name)
            or type_name in (EXTERNAL_TYPE, OBJECT_CLASS)
            or type_name in self.module.classes
        )

    def _check_type(self, type_name: str, location: str) -> None:
        if not self._known_type(type_name):
            self._add("WF_UNKNOWN_TYPE", f"type {type_name} is not declared", location)

    def _check_members(self, cdef: ClassDef) -> None:
        names = [f.name for f in cdef.fields] + [g.name for g in cdef.ghosts] + [m.name for m in cdef.methods]
        seen: set[str] = set()
        for name in names:
            if name in seen:
                self._add("WF_DUPLICATE_MEMBER", f"{cdef.name} declares {name} twice", cdef.name)
            seen.add(name)
        for ghost in cdef.ghosts:
            if cdef.field_type(ghost.name) is not None:
                self._add("WF_GHOST_SHADOWS_FIELD", f"ghost {ghost.name} shadows a field", cdef.name)

    def _check_ghost(self, cdef: ClassDef, name: str) -> None:
        ghost = cdef.ghost(name)
        assert ghost is not None
        where = f"{cdef.name}.{name}"
        allowed = {THIS} | {p.name for p in ghost.params}
        for p in ghost.params:
            self._check_type(p.type, where)
        self._check_type(ghost.return_type, where)
        for var in sorted(expr_vars(ghost.body) - allowed):
            self._add("WF_GHOST_UNBOUND", f"ghost body uses unbound variable {var}", where)

    def _check_method(self, cdef: ClassDef, method: MethodDef) -> None:
        where = f"{cdef.name}::{method.name}"
        for p in (*method.params, *method.locals):
            self._check_type(p.type, where)
            if p.name in RESERVED_VARIABLES:
                self._add("WF_RESERVED_NAME", f"{p.name} cannot be declared", where)
        self._check_type(method.return_type, where)
        names = [p.name for p in (*method.params, *method.locals)]
        if len(set(names)) != len(names):
            self._add("WF_DUPLICATE_VARIABLE", "parameter and local names must be distinct", where)

        declared = set(method.variable_types()) | {THIS}
        for var in sorted(statement_variables(method.body) - declared - {"_"}):
            self._add("WF_UNDECLARED_VARIABLE", f"variable {var} is not declared", where)

        formals = set(method.formals)
        for var in sorted(assigned_variables(method.body) & formals):
            self._add("WF_ASSIGN_FORMAL", f"{var} is a formal parameter and may not be assigned", where)

        if not _assigns_res(method.body):
            self._add("WF_NO_RES", "some path does not assign res", where)

        types = method.variable_types()
        types[THIS] = cdef.name
        for stmt in walk_statements(method.body):
            if isinstance(stmt, Seq):
                continue
            self._check_statement(stmt, types, where)

    def _check_statement(self, stmt: Stmt, types: dict[str, str], where: str) -> None:
        for expr in statement_expressions(stmt):
            for sub in subexpressions(expr):
                if isinstance(sub, GhostCall):
                    self._add("WF_GHOST_IN_STATEMENT", "ghost fields are for assertions only", where)
                if isinstance(sub, FieldAcc):
                    self._check_field_of(sub.obj, sub.field, types, where)
        match stmt:
            case FieldRead(_, obj, fname) | FieldWrite(obj, fname, _):
                self._check_field_of(Var(obj), fname, types, where)
            case New(_, cls):
                if cls not in self.module.classes and cls != OBJECT_CLASS:
                    self._add("WF_UNKNOWN_CLASS", f"new {cls}: class is not declared", where)
            case Call(_, receiver, method, args):
                for arg in args:
                    if not isinstance(arg, Var | Lit):
                        self._add("WF_NON_ATOMIC_ARGUMENT", f"argument of {method} must be a variable or literal", where)
                self._check_call(types.get(receiver), method, len(args), where)

    def _check_field_of(self, obj: Expr, fname: str, types: dict[str, str], where: str) -> None:
        if not isinstance(obj, Var):
            return
        owner = types.get(obj.name)
        if owner is None or is_scalar_type(owner):
            return
        if owner == EXTERNAL_TYPE:
            self._add("WF_EXTERNAL_FIELD", f"{obj.name}.{fname} reads a field of an external object", where)
            return
        cdef = self.module.classes.get(owner)
        if cdef is not None and cdef.field_type(fname) is None:
            self._add("WF_UNKNOWN_FIELD", f"class {owner} has no field {fname}", where)

    def _check_call(self, owner: str | None, method: str, arity: int, where: str) -> None:
        if owner is None:
            return
        cdef = self.module.classes.get(owner)
        if cdef is None:
            return
        target = cdef.method(method)
        if target is None:
            self._add("WF_UNKNOWN_METHOD", f"class {owner} has no method {method}", where)
        elif len(target.params) != arity:
            self._add("WF_ARITY", f"{owner}::{method} takes {len(target.params)} arguments, not {arity}", where)


def wf_module_syntax(module: ModuleDef) -> list[Diagnostic]:
    """Diagnostics for a module; empty when it is well formed."""
    return ModuleWellFormednessAnalyzer(module).analyze()
