"""Module linking and static lookups over a linked program."""

from __future__ import annotations

from collections.abc import Callable, Mapping
from dataclasses import dataclass, field

from loo_verifier.core.models.state import State
from loo_verifier.core.models.syntax import (
    ClassDef,
    FieldDef,
    GhostDef,
    MethodDef,
    ModuleDef,
    Stmt,
    flatten,
    seq,
)
from loo_verifier.core.models.values import OBJECT_CLASS, Address, Value
from loo_verifier.shared.exceptions import (
    LinkError,
    NullDereferenceError,
    TypeMismatchError,
    UnboundVariableError,
    UnknownClassError,
)

# Module index of the builtin `Object` class; 0 is the internal module
BUILTIN_MODULE = -1
INTERNAL_MODULE = 0

OBJECT_DEF = ClassDef(OBJECT_CLASS)


@dataclass(frozen=True)
class LinkedProgram:
    """Internal module M linked with external modules.

    `owner` maps every class to the index of its module: 0 for M, 1.. for
    the externals in canonical order, -1 for the builtin `Object`.
    """

    internal: ModuleDef
    externals: tuple[ModuleDef, ...] = ()
    classes: Mapping[str, ClassDef] = field(default_factory=dict)
    owner: Mapping[str, int] = field(default_factory=dict)

    def class_def(self, cls: str) -> ClassDef | None:
        return self.classes.get(cls)

    def is_internal_class(self, cls: str | None) -> bool:
        return cls is not None and cls in self.internal.classes

    def module_of(self, cls: str) -> int:
        if cls not in self.owner:
            raise UnknownClassError(f"class {cls} is not defined")
        return self.owner[cls]

    @property
    def external_class_names(self) -> tuple[str, ...]:
        return tuple(sorted(c for c, i in self.owner.items() if i > INTERNAL_MODULE))


def _module_key(module: ModuleDef) -> tuple[str, tuple[str, ...]]:
    return module.name, tuple(sorted(module.classes))


def link(internal: ModuleDef, externals: list[ModuleDef] | tuple[ModuleDef, ...] = ()) -> LinkedProgram:
    """Link M with external modules; class names must be pairwise disjoint.

    Externals are put in a canonical order first, so the result does not
    depend on the order they were given in.

    Raises:
        LinkError: If a class is defined by two modules, or a module defines `Object`
    """
    ordered = tuple(sorted(externals, key=_module_key))
    classes: dict[str, ClassDef] = {OBJECT_CLASS: OBJECT_DEF}
    owner: dict[str, int] = {OBJECT_CLASS: BUILTIN_MODULE}
    for index, module in enumerate((internal, *ordered)):
        for name, cdef in module.classes.items():
            if name in classes:
                where = "builtin" if owner[name] == BUILTIN_MODULE else "another module"
                raise LinkError(f"class {name} of module {module.name} is already defined by {where}")
            classes[name] = cdef
            owner[name] = index
    return LinkedProgram(internal, ordered, classes, owner)


def lookup_method(prog: LinkedProgram, cls: str, method: str) -> MethodDef | None:
    cdef = prog.class_def(cls)
    return cdef.method(method) if cdef is not None else None


def lookup_fields(prog: LinkedProgram, cls: str) -> tuple[FieldDef, ...]:
    """Fields of C in declaration order.

    Raises:
        UnknownClassError: If C is not in the linked table
    """
    cdef = prog.class_def(cls)
    if cdef is None:
        raise UnknownClassError(f"class {cls} is not defined")
    return cdef.fields


def lookup_ghost(module: ModuleDef, cls: str, name: str) -> GhostDef | None:
    """Ghost fields are looked up in the internal module only."""
    cdef = module.classes.get(cls)
    return cdef.ghost(name) if cdef is not None else None


def same_module_classes(prog: LinkedProgram, cls1: str, cls2: str) -> bool:
    return prog.module_of(cls1) == prog.module_of(cls2)


def same_module_values(prog: LinkedProgram, heap_classes: Mapping[Address, str], v1: Value, v2: Value) -> bool:
    if not isinstance(v1, Address) or not isinstance(v2, Address):
        raise TypeMismatchError("Same module is defined on addresses only")
    return same_module_classes(prog, heap_classes[v1], heap_classes[v2])


def same_module(state: State, x: str, y: str, prog: LinkedProgram) -> bool:
    """Whether the objects bound to x and y belong to classes of one module.

    Raises:
        UnboundVariableError: If x or y is not bound in the top frame
        NullDereferenceError: If x or y is null
    """
    values: list[Address] = []
    for name in (x, y):
        value = state.lookup(name)
        if value is None:
            raise UnboundVariableError(f"variable {name} is not bound")
        if not isinstance(value, Address):
            raise NullDereferenceError(f"variable {name} does not hold an object")
        values.append(value)
    classes = {a: state.heap[a].cls for a in values}
    return same_module_values(prog, classes, values[0], values[1])


def method_body_slice(module: ModuleDef, cls: str, method: str, start: int | None, stop: int | None) -> Stmt:
    """Body of C::m, or its top-level statements start..stop (1-based, inclusive).

    Raises:
        LookupError: If the class or method is unknown, or the range is empty
    """
    cdef = module.classes.get(cls)
    mdef = cdef.method(method) if cdef is not None else None
    if mdef is None:
        raise LookupError(f"{cls}::{method} is not a method of module {module.name}")
    if start is None or stop is None:
        return mdef.body
    parts = flatten(mdef.body)
    if not 1 <= start <= stop <= len(parts):
        raise LookupError(f"{cls}::{method} has {len(parts)} statements, no range {start}..{stop}")
    return seq(*parts[start - 1 : stop])


def body_resolver(module: ModuleDef) -> Callable[[str, str, int | None, int | None], Stmt]:
    """`C::m[i..j]` resolver for proof scripts about `module`."""

    def resolve(cls: str, method: str, start: int | None, stop: int | None) -> Stmt:
        return method_body_slice(module, cls, method, start, stop)

    return resolve
