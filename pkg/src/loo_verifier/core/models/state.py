"""Program states: heap objects, frames, frame stacks and step outcomes.

States are never mutated. A step copies the frame tuple and the heap map
and shares every untouched object, so keeping whole traces is cheap.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field, replace
from typing import TypeAlias

from loo_verifier.core.models.enums import StepKind, StuckReason
from loo_verifier.core.models.syntax import THIS, Stmt
from loo_verifier.core.models.values import Address, Value


@dataclass(frozen=True, slots=True)
class Obj:
    """Heap object: class name and field map."""

    cls: str
    fields: Mapping[str, Value] = field(default_factory=dict)

    def with_field(self, name: str, value: Value) -> Obj:
        updated = dict(self.fields)
        updated[name] = value
        return Obj(self.cls, updated)


@dataclass(frozen=True, slots=True)
class Frame:
    """Variable map plus continuation.

    `formals` are the variables the frame may not assign. `entry_reach` and
    `watermark` record, at push time, the addresses reachable from the
    formals and the first address id that was still free.
    """

    vars: Mapping[str, Value]
    cont: Stmt
    formals: tuple[str, ...] = (THIS,)
    entry_reach: frozenset[Address] = frozenset()
    watermark: int = 0

    def bind(self, name: str, value: Value) -> Frame:
        updated = dict(self.vars)
        updated[name] = value
        return replace(self, vars=updated)

    def continue_with(self, cont: Stmt) -> Frame:
        return replace(self, cont=cont)


@dataclass(frozen=True)
class State:
    """Non-empty frame stack (top frame last) over a heap."""

    frames: tuple[Frame, ...]
    heap: Mapping[Address, Obj]

    def __post_init__(self) -> None:
        if not self.frames:
            raise ValueError("a state needs at least one frame")

    @property
    def depth(self) -> int:
        return len(self.frames)

    @property
    def top(self) -> Frame:
        return self.frames[-1]

    @property
    def cont(self) -> Stmt:
        return self.top.cont

    def lookup(self, name: str) -> Value | None:
        return self.top.vars.get(name)

    def class_of(self, addr: Address) -> str | None:
        obj = self.heap.get(addr)
        return obj.cls if obj is not None else None

    def with_top(self, frame: Frame) -> State:
        return State(self.frames[:-1] + (frame,), self.heap)

    def with_object(self, addr: Address, obj: Obj) -> State:
        heap = dict(self.heap)
        heap[addr] = obj
        return State(self.frames, heap)

    def next_address(self) -> Address:
        """1 + the largest id in use, so allocation is deterministic."""
        return Address(max((a.id for a in self.heap), default=0) + 1)

    def addresses_of_class(self, cls: str) -> list[Address]:
        return sorted(a for a, o in self.heap.items() if o.cls == cls)


@dataclass(frozen=True, slots=True)
class Step:
    state: State
    kind: StepKind


@dataclass(frozen=True, slots=True)
class Stuck:
    reason: StuckReason
    detail: str = ""

    def __str__(self) -> str:
        return f"{self.reason.value}: {self.detail}" if self.detail else self.reason.value


StepResult: TypeAlias = Step | Stuck
