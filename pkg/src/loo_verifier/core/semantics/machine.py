"""Small-step operational semantics.

`small_step` is a partial function: a state has at most one successor, and
the absence of one is reported as a `Stuck` value with a reason code.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from loo_verifier.core.models.enums import StepKind, StuckReason, TraceStatus
from loo_verifier.core.models.state import Frame, Obj, State, Step, StepResult, Stuck
from loo_verifier.core.models.syntax import (
    DISCARD,
    RES,
    THIS,
    Call,
    Expr,
    ExprAssign,
    FieldRead,
    FieldWrite,
    If,
    LitAssign,
    New,
    Stmt,
    VarAssign,
    decompose,
    seq,
)
from loo_verifier.core.models.values import (
    EXTERNAL_TYPE,
    OBJECT_CLASS,
    TRUE,
    Address,
    BoolVal,
    NullValue,
    Value,
    default_value,
    is_scalar_type,
    value_has_scalar_type,
)
from loo_verifier.core.rules.defaults import DEFAULT_RUN_BUDGET
from loo_verifier.core.semantics.expressions import ExpressionEvaluator, PrivacyViolation
from loo_verifier.core.semantics.heap import reach, reach_all
from loo_verifier.core.semantics.program import (
    LinkedProgram,
    lookup_fields,
    lookup_method,
    same_module_classes,
)
from loo_verifier.core.semantics.stack import pop, push
from loo_verifier.shared.exceptions import (
    EvaluationError,
    MissingFieldError,
    NullDereferenceError,
    UnboundVariableError,
    UnknownClassError,
)

logger = logging.getLogger(__name__)

ROOT_ADDRESS = Address(1)


def initial_state(prog: LinkedProgram, stmt: Stmt) -> State:
    """One frame `{this -> root}` over a heap holding only the root `Object`."""
    frame = Frame(
        {THIS: ROOT_ADDRESS},
        stmt,
        (THIS,),
        entry_reach=frozenset({ROOT_ADDRESS}),
        watermark=ROOT_ADDRESS.id + 1,
    )
    return State((frame,), {ROOT_ADDRESS: Obj(OBJECT_CLASS, {})})


def complete_state(prog: LinkedProgram, state: State) -> State:
    """Fill fields a seed heap left out with their declared defaults.

    Raises:
        UnknownClassError: If an object's class is not in the program
        MissingFieldError: If an object sets a field its class does not declare
    """
    heap: dict[Address, Obj] = {}
    for addr, obj in state.heap.items():
        declared = lookup_fields(prog, obj.cls)
        names = {f.name for f in declared}
        extra = sorted(set(obj.fields) - names)
        if extra:
            raise MissingFieldError(f"{addr}: class {obj.cls} has no field {extra[0]}")
        heap[addr] = Obj(obj.cls, {f.name: obj.fields.get(f.name, default_value(f.type)) for f in declared})
    frames = tuple(
        Frame(
            f.vars,
            f.cont,
            f.formals,
            entry_reach=f.entry_reach or reach_all(heap, (f.vars[x] for x in f.formals if x in f.vars)),
            watermark=f.watermark or (max((a.id for a in heap), default=0) + 1),
        )
        for f in state.frames
    )
    return State(frames, heap)


# ============================================================
# Typing at call entry
# ============================================================


def value_matches_type(prog: LinkedProgram, state: State, value: Value, type_name: str) -> bool:
    """Dynamic check of a declared parameter type.

    Scalar types check the value kind (`nat` also non-negativity),
    `external` needs an object of a class outside the internal module,
    `Object` takes null or any object, and any other class name needs null
    or an object of exactly that class.
    """
    if is_scalar_type(type_name):
        return value_has_scalar_type(value, type_name)
    if type_name == EXTERNAL_TYPE:
        return isinstance(value, Address) and not prog.is_internal_class(state.class_of(value))
    if isinstance(value, NullValue):
        return True
    if type_name == OBJECT_CLASS:
        return isinstance(value, Address)
    return isinstance(value, Address) and state.class_of(value) == type_name


def field_accepts(prog: LinkedProgram, state: State, value: Value, type_name: str) -> bool:
    """Dynamic check of a write against a declared field type; object fields may hold null."""
    if isinstance(value, NullValue) and not is_scalar_type(type_name):
        return True
    return value_matches_type(prog, state, value, type_name)


# ============================================================
# Steps
# ============================================================


_EVAL_REASONS: tuple[tuple[type[EvaluationError], StuckReason], ...] = (
    (PrivacyViolation, StuckReason.PRIVACY_FIELD_ACCESS),
    (UnboundVariableError, StuckReason.UNBOUND_VARIABLE),
    (NullDereferenceError, StuckReason.NULL_DEREF),
    (MissingFieldError, StuckReason.MISSING_FIELD),
)


def _stuck_from(exc: EvaluationError) -> Stuck:
    for kind, reason in _EVAL_REASONS:
        if isinstance(exc, kind):
            return Stuck(reason, str(exc))
    return Stuck(StuckReason.EVAL_ERROR, str(exc))


@dataclass
class _Stepper:
    prog: LinkedProgram
    state: State

    @property
    def frame(self) -> Frame:
        return self.state.top

    def this_class(self) -> str:
        this = self.frame.vars.get(THIS)
        if not isinstance(this, Address) or this not in self.state.heap:
            raise UnboundVariableError("this is not bound to an object")
        return self.state.heap[this].cls

    def evaluate(self, expr: Expr) -> Value:
        evaluator = ExpressionEvaluator(self.state.heap, None, prog=self.prog, this_cls=self.this_class())
        return evaluator.evaluate(expr, self.frame.vars)

    def variable(self, name: str) -> Value:
        value = self.frame.vars.get(name)
        if value is None:
            raise UnboundVariableError(f"variable {name} is not bound")
        return value

    def target_object(self, name: str) -> Address:
        value = self.variable(name)
        if not isinstance(value, Address):
            raise NullDereferenceError(f"{name} is {value}, not an object")
        return value

    def assign(self, target: str, value: Value, rest: Stmt) -> StepResult:
        if target in self.frame.formals:
            return Stuck(StuckReason.ASSIGN_TO_FORMAL, target)
        frame = self.frame.bind(target, value).continue_with(rest)
        return Step(self.state.with_top(frame), StepKind.SAME)

    def step(self) -> StepResult:
        first, rest = decompose(self.state.cont)
        try:
            match first:
                case VarAssign(target, source):
                    return self.assign(target, self.variable(source), rest)
                case LitAssign(target, value):
                    return self.assign(target, value, rest)
                case FieldRead(target, obj, fname):
                    return self.read(target, obj, fname, rest)
                case ExprAssign(target, expr):
                    return self.assign(target, self.evaluate(expr), rest)
                case FieldWrite(obj, fname, source):
                    return self.write(obj, fname, source, rest)
                case New(target, cls):
                    return self.new(target, cls, rest)
                case Call():
                    return self.call(first)
                case If(cond, then, orelse):
                    chosen = self.evaluate(cond)
                    if not isinstance(chosen, BoolVal):
                        return Stuck(StuckReason.EVAL_ERROR, f"condition evaluated to {chosen}")
                    branch = then if chosen == TRUE else orelse
                    frame = self.frame.continue_with(seq(branch, rest))
                    return Step(self.state.with_top(frame), StepKind.SAME)
                case _:
                    return self.ret()
        except EvaluationError as exc:
            return _stuck_from(exc)

    def read(self, target: str, obj: str, fname: str, rest: Stmt) -> StepResult:
        addr = self.target_object(obj)
        cls = self.state.heap[addr].cls
        if not same_module_classes(self.prog, self.this_class(), cls):
            return Stuck(StuckReason.PRIVACY_FIELD_ACCESS, f"{self.this_class()} reads {cls}.{fname}")
        fields = self.state.heap[addr].fields
        if fname not in fields:
            return Stuck(StuckReason.MISSING_FIELD, f"{cls}.{fname}")
        return self.assign(target, fields[fname], rest)

    def write(self, obj: str, fname: str, source: Expr, rest: Stmt) -> StepResult:
        addr = self.target_object(obj)
        current = self.state.heap[addr]
        if not same_module_classes(self.prog, self.this_class(), current.cls):
            return Stuck(StuckReason.PRIVACY_FIELD_ACCESS, f"{self.this_class()} writes {current.cls}.{fname}")
        if fname not in current.fields:
            return Stuck(StuckReason.MISSING_FIELD, f"{current.cls}.{fname}")
        value = self.evaluate(source)
        declared = next(f.type for f in lookup_fields(self.prog, current.cls) if f.name == fname)
        if not field_accepts(self.prog, self.state, value, declared):
            return Stuck(StuckReason.FIELD_TYPE_MISMATCH, f"{current.cls}.{fname}: {declared} given {value}")
        state = self.state.with_object(addr, current.with_field(fname, value))
        return Step(state.with_top(self.frame.continue_with(rest)), StepKind.SAME)

    def new(self, target: str, cls: str, rest: Stmt) -> StepResult:
        if target in self.frame.formals:
            return Stuck(StuckReason.ASSIGN_TO_FORMAL, target)
        try:
            declared = lookup_fields(self.prog, cls)
        except UnknownClassError as exc:
            return Stuck(StuckReason.UNKNOWN_CLASS, str(exc))
        fresh = self.state.next_address()
        obj = Obj(cls, {f.name: default_value(f.type) for f in declared})
        state = self.state.with_object(fresh, obj)
        frame = self.frame.bind(target, fresh).continue_with(rest)
        return Step(state.with_top(frame), StepKind.SAME)

    def call(self, call: Call) -> StepResult:
        if call.target != DISCARD and call.target in self.frame.formals:
            return Stuck(StuckReason.ASSIGN_TO_FORMAL, call.target)
        receiver = self.target_object(call.receiver)
        cls = self.state.heap[receiver].cls
        method = lookup_method(self.prog, cls, call.method)
        if method is None:
            return Stuck(StuckReason.UNKNOWN_METHOD, f"{cls}::{call.method}")
        if not method.is_public and not same_module_classes(self.prog, self.this_class(), cls):
            return Stuck(StuckReason.PRIVATE_CALL_ACROSS_MODULES, f"{cls}::{call.method}")
        if len(method.params) != len(call.args):
            return Stuck(
                StuckReason.ARITY_MISMATCH,
                f"{cls}::{call.method} takes {len(method.params)} arguments, got {len(call.args)}",
            )
        actuals = [self.evaluate(a) for a in call.args]
        for param, value in zip(method.params, actuals):
            if not value_matches_type(self.prog, self.state, value, param.type):
                return Stuck(StuckReason.PARAM_TYPE_MISMATCH, f"{param.name}: {param.type} given {value}")
        bindings: dict[str, Value] = {p.name: default_value(p.type) for p in method.locals}
        bindings[THIS] = receiver
        bindings.update({p.name: v for p, v in zip(method.params, actuals)})
        callee = Frame(bindings, method.body, method.formals)
        logger.debug("call %s::%s on %s", cls, call.method, receiver)
        return Step(push(self.state, callee), StepKind.CALL_ENTER)

    def ret(self) -> StepResult:
        if self.state.depth == 1:
            return Stuck(StuckReason.TERMINATED)
        if RES not in self.frame.vars:
            return Stuck(StuckReason.NO_RES)
        return Step(pop(self.state), StepKind.RETURN)


def small_step(prog: LinkedProgram, state: State) -> StepResult:
    """One step of the machine, or why there is none."""
    return _Stepper(prog, state).step()


def is_terminal(state: State) -> bool:
    """Depth 1 with nothing left to run."""
    return state.depth == 1 and decompose(state.cont)[0] == seq()


# ============================================================
# Well-formed states
# ============================================================


def wf_state(prog: LinkedProgram, state: State) -> bool:
    """Every callee frame only sees what its caller handed it.

    For each frame k > 1: the addresses bound to its formals appear among
    the values of frame k-1, and everything it reaches now was reachable
    from its formals at entry or was allocated after the push.
    """
    for k in range(1, state.depth):
        frame = state.frames[k]
        caller_values = set(state.frames[k - 1].vars.values())
        for formal in frame.formals:
            value = frame.vars.get(formal)
            if value is None:
                return False
            if isinstance(value, Address) and value not in caller_values:
                return False
        reachable = reach_all(state.heap, frame.vars.values())
        if any(a not in frame.entry_reach and a.id < frame.watermark for a in reachable):
            return False
    return True


# ============================================================
# Unscoped runs
# ============================================================


@dataclass
class RunOutcome:
    """Result of running a state until it terminates, gets stuck or runs out of budget."""

    status: TraceStatus
    final: State
    steps: int
    stuck: Stuck | None = None
    trace: list[tuple[State, StepKind]] = field(default_factory=list)


def run_to_completion(
    prog: LinkedProgram, state: State, budget: int = DEFAULT_RUN_BUDGET, keep_trace: bool = False
) -> RunOutcome:
    """Run without a depth guard until depth 1 and an empty continuation."""
    trace: list[tuple[State, StepKind]] = []
    current = state
    for steps in range(budget + 1):
        if is_terminal(current):
            return RunOutcome(TraceStatus.FINAL, current, steps, trace=trace)
        if steps == budget:
            break
        result = small_step(prog, current)
        if isinstance(result, Stuck):
            logger.debug("stuck after %d steps: %s", steps, result)
            return RunOutcome(TraceStatus.STUCK, current, steps, result, trace)
        current = result.state
        if keep_trace:
            trace.append((current, result.kind))
    return RunOutcome(TraceStatus.BUDGET_EXHAUSTED, current, budget, trace=trace)


def reach_of(state: State, addr: Address) -> frozenset[Address]:
    """Addresses reachable from `addr` in the heap of `state`."""
    return reach(state.heap, addr)
