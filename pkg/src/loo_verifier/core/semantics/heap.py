"""Path interpretation and heap reachability."""

from __future__ import annotations

from collections.abc import Iterable, Mapping

from loo_verifier.core.models.state import Obj, State
from loo_verifier.core.models.syntax import Expr, FieldAcc, Lit, Var
from loo_verifier.core.models.values import Address, NullValue, Value
from loo_verifier.shared.exceptions import (
    EvaluationError,
    MissingFieldError,
    NullDereferenceError,
    TypeMismatchError,
    UnboundVariableError,
)


def read_field(heap: Mapping[Address, Obj], target: Value, fname: str) -> Value:
    """`target.f` on the heap.

    Raises:
        NullDereferenceError: If target is null
        TypeMismatchError: If target is a scalar
        MissingFieldError: If the object has no such field
    """
    if isinstance(target, NullValue):
        raise NullDereferenceError(f"field {fname} of null")
    if not isinstance(target, Address):
        raise TypeMismatchError(f"field {fname} of scalar {target}")
    obj = heap.get(target)
    if obj is None:
        raise EvaluationError(f"dangling address {target}")
    if fname not in obj.fields:
        raise MissingFieldError(f"{target} of class {obj.cls} has no field {fname}")
    return obj.fields[fname]


def interpret(state: State, path: Expr | str) -> Value:
    """Value of `x`, `α.f` or `x.f1...fn`: top frame first, then the heap.

    Raises:
        UnboundVariableError: If the root variable is not bound
        NullDereferenceError: If a prefix of the path is null
        MissingFieldError: If an object lacks a field on the path
    """
    if isinstance(path, str):
        path = Var(path)
    match path:
        case Var(name):
            value = state.lookup(name)
            if value is None:
                raise UnboundVariableError(f"variable {name} is not bound")
            return value
        case Lit(value):
            return value
        case FieldAcc(obj, fname):
            return read_field(state.heap, interpret(state, obj), fname)
    raise EvaluationError(f"not a path: {path!r}")


def reach(heap: Mapping[Address, Obj], start: Address) -> frozenset[Address]:
    """Least set containing `start` and closed under field dereference."""
    seen: set[Address] = set()
    todo = [start]
    while todo:
        addr = todo.pop()
        if addr in seen:
            continue
        seen.add(addr)
        obj = heap.get(addr)
        if obj is None:
            continue
        todo.extend(v for v in obj.fields.values() if isinstance(v, Address) and v not in seen)
    return frozenset(seen)


def reach_all(heap: Mapping[Address, Obj], values: Iterable[Value]) -> frozenset[Address]:
    out: frozenset[Address] = frozenset()
    for value in values:
        if isinstance(value, Address) and value not in out:
            out |= reach(heap, value)
    return out


def locally_reachable(state: State) -> frozenset[Address]:
    """Addresses reachable from the values of the top frame."""
    return reach_all(state.heap, state.top.vars.values())


def dangling_addresses(state: State) -> frozenset[Address]:
    """Addresses stored in fields or variables that are not in the heap."""
    stored: set[Address] = set()
    for obj in state.heap.values():
        stored.update(v for v in obj.fields.values() if isinstance(v, Address))
    for frame in state.frames:
        stored.update(v for v in frame.vars.values() if isinstance(v, Address))
    return frozenset(a for a in stored if a not in state.heap)
