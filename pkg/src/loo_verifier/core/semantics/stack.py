"""Frame stack manipulation: push, pop, restriction and depth."""

from __future__ import annotations

from loo_verifier.core.models.state import Frame, State
from loo_verifier.core.models.syntax import DISCARD, RES, Call, decompose
from loo_verifier.core.semantics.heap import reach_all
from loo_verifier.shared.exceptions import PopError, RestrictError


def depth(state: State) -> int:
    return state.depth


def push(state: State, frame: Frame) -> State:
    """Push a callee frame, recording what its formals reach and the next free id.

    The entry facts are always recomputed from the current heap, so callers
    only need to supply variables, continuation and formals.
    """
    entry = reach_all(state.heap, (frame.vars[f] for f in frame.formals if f in frame.vars))
    stamped = Frame(
        frame.vars,
        frame.cont,
        frame.formals,
        entry_reach=entry,
        watermark=state.next_address().id,
    )
    return State(state.frames + (stamped,), state.heap)


def pop(state: State) -> State:
    """Return from the top frame into a caller suspended at `u := y0.m(args); s`.

    Raises:
        PopError: On a depth-1 state, when the caller is not at a call, or when
            the callee never assigned `res`
    """
    if state.depth < 2:
        raise PopError("cannot pop the last frame")
    callee = state.top
    caller = state.frames[-2]
    call, rest = decompose(caller.cont)
    if not isinstance(call, Call):
        raise PopError("caller continuation is not a method call")
    result = callee.vars.get(RES)
    if result is None:
        raise PopError("callee returned without assigning res")
    resumed = caller.continue_with(rest)
    if call.target != DISCARD:
        resumed = resumed.bind(call.target, result)
    return State(state.frames[:-2] + (resumed,), state.heap)


def restrict(state: State, k: int) -> State:
    """Keep frames 1..k (bottom first); the heap is unchanged.

    Raises:
        RestrictError: If k is not in 1..depth
    """
    if not 1 <= k <= state.depth:
        raise RestrictError(f"frame index {k} outside 1..{state.depth}")
    if k == state.depth:
        return state
    return State(state.frames[:k], state.heap)
