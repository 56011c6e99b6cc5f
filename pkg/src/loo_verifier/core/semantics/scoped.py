"""Scoped execution: runs that never return below the depth they started at."""

from __future__ import annotations

import logging
from dataclasses import dataclass

from loo_verifier.core.models.enums import StepKind, TraceStatus
from loo_verifier.core.models.state import State, Stuck
from loo_verifier.core.models.syntax import THIS, Call, ModuleDef, decompose, flatten
from loo_verifier.core.models.values import Address
from loo_verifier.core.semantics.machine import small_step
from loo_verifier.core.semantics.program import LinkedProgram, lookup_method
from loo_verifier.shared.exceptions import DecompositionError, UnboundVariableError

logger = logging.getLogger(__name__)


def is_external(module: ModuleDef, state: State) -> bool:
    """The receiver of the top frame belongs to a class outside `module`.

    Raises:
        UnboundVariableError: If `this` is not bound to an object
    """
    this = state.lookup(THIS)
    if not isinstance(this, Address) or this not in state.heap:
        raise UnboundVariableError("this is not bound to an object")
    return state.heap[this].cls not in module.classes


def is_internal(module: ModuleDef, state: State) -> bool:
    return not is_external(module, state)


def is_public_entry(module: ModuleDef, state: State) -> bool:
    """The top frame runs a public method of `module` entered from the caller's pending call."""
    if state.depth < 2:
        return False
    call, _ = decompose(state.frames[-2].cont)
    if not isinstance(call, Call):
        return False
    receiver = state.frames[-2].vars.get(call.receiver)
    if not isinstance(receiver, Address) or receiver not in state.heap:
        return False
    cdef = module.classes.get(state.heap[receiver].cls)
    method = cdef.method(call.method) if cdef is not None else None
    return method is not None and method.is_public


def is_final(state: State, base_depth: int) -> bool:
    return state.depth == base_depth and not flatten(state.cont)


@dataclass(frozen=True, slots=True)
class TraceEntry:
    state: State
    kind: StepKind | None
    external: bool
    public_entry: bool


@dataclass(frozen=True)
class ScopedTrace:
    """Base state and its scoped future; `entries[0]` is the base itself.

    States are kept whole; heap deltas are derived when a trace is written.
    """

    base: State
    entries: tuple[TraceEntry, ...]
    status: TraceStatus
    stuck: Stuck | None = None

    @property
    def steps(self) -> int:
        return len(self.entries) - 1

    @property
    def states(self) -> tuple[State, ...]:
        return tuple(e.state for e in self.entries)

    @property
    def last(self) -> State:
        return self.entries[-1].state

    @property
    def final(self) -> State | None:
        return self.last if self.status == TraceStatus.FINAL else None


def _entry(module: ModuleDef, state: State, kind: StepKind | None) -> TraceEntry:
    return TraceEntry(state, kind, is_external(module, state), is_public_entry(module, state))


def bounded_star(prog: LinkedProgram, state: State, budget: int) -> ScopedTrace:
    """Maximal scoped run from `state`, cut at `budget` steps."""
    module = prog.internal
    base_depth = state.depth
    entries = [_entry(module, state, None)]
    current = state
    while True:
        if is_final(current, base_depth):
            return ScopedTrace(state, tuple(entries), TraceStatus.FINAL)
        if len(entries) > budget:
            logger.debug("scoped run cut at %d steps", budget)
            return ScopedTrace(state, tuple(entries), TraceStatus.BUDGET_EXHAUSTED)
        result = small_step(prog, current)
        if isinstance(result, Stuck):
            return ScopedTrace(state, tuple(entries), TraceStatus.STUCK, result)
        current = result.state
        entries.append(_entry(module, current, result.kind))


@dataclass(frozen=True, slots=True)
class NotTerminated:
    budget: int

    def __str__(self) -> str:
        return f"not terminated within {self.budget} steps"


def bounded_star_fin(prog: LinkedProgram, state: State, budget: int) -> State | NotTerminated | Stuck:
    """Final state of the scoped run, if it reaches one."""
    trace = bounded_star(prog, state, budget)
    if trace.status == TraceStatus.FINAL:
        return trace.last
    if trace.stuck is not None:
        return trace.stuck
    return NotTerminated(budget)


# ============================================================
# Summarized execution
# ============================================================


@dataclass(frozen=True, slots=True)
class Segment:
    """Trace entries `start` up to `stop` (exclusive).

    A collapsed segment is one public call into the internal module, from
    its entry state until the step that returns from it. `complete` is false
    when the trace ended before the call returned.
    """

    collapsed: bool
    start: int
    stop: int
    entry: State
    complete: bool = True


def summarize(trace: ScopedTrace) -> tuple[Segment, ...]:
    """Split an external trace into external runs and collapsed public calls.

    Raises:
        DecompositionError: If the base state is internal, or an internal
            state is reached other than through a public method entry
    """
    entries = trace.entries
    if not entries[0].external:
        raise DecompositionError("summarized execution starts from an external state")
    segments: list[Segment] = []
    i = 0
    run_start = 0
    while i < len(entries):
        entry = entries[i]
        if entry.external:
            i += 1
            continue
        if entry.kind != StepKind.CALL_ENTER or not entry.public_entry:
            raise DecompositionError(f"state {i} is internal but not the entry of a public method")
        if run_start < i:
            segments.append(Segment(False, run_start, i, entries[run_start].state))
        entry_depth = entry.state.depth
        j = i + 1
        while j < len(entries) and entries[j].state.depth >= entry_depth:
            j += 1
        complete = j < len(entries)
        segments.append(Segment(True, i, j, entry.state, complete))
        i = run_start = j
    if run_start < len(entries):
        segments.append(Segment(False, run_start, len(entries), entries[run_start].state))
    return tuple(segments)


def callee_method_name(prog: LinkedProgram, state: State) -> str | None:
    """`C::m` of the call the top frame is suspended at, if any."""
    call, _ = decompose(state.cont)
    if not isinstance(call, Call):
        return None
    receiver = state.lookup(call.receiver)
    if not isinstance(receiver, Address) or receiver not in state.heap:
        return None
    cls = state.heap[receiver].cls
    return f"{cls}::{call.method}" if lookup_method(prog, cls, call.method) else None
