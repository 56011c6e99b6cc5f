"""Tests for the abstract machine: steps, stuck states and runs."""

import pytest

from loo_verifier.core.models.enums import StepKind, StuckReason, TraceStatus
from loo_verifier.core.models.state import Frame, Obj, State, Step, Stuck
from loo_verifier.core.models.syntax import Skip
from loo_verifier.core.models.values import NULL, Address, IntVal
from loo_verifier.core.semantics.machine import (
    ROOT_ADDRESS,
    complete_state,
    initial_state,
    is_terminal,
    run_to_completion,
    small_step,
)
from loo_verifier.core.semantics.program import link
from loo_verifier.core.semantics.stack import pop, restrict
from loo_verifier.corpus import load_scenario
from loo_verifier.infrastructure.parsers import parse_module, parse_scenarios
from loo_verifier.shared.exceptions import MissingFieldError, PopError, RestrictError, UnknownClassError


def _seed(body: str) -> State:
    """Shop fixture heap with an external driver o1 running `body`."""
    text = f"""
    scenario t {{
      heap {{
        o1: Object;
        o2: Account {{ blnce = 10; key = o3 }};
        o3: Key;
        o4: Shop {{ accnt = o2 }};
      }}
      frame this = o1, acc = o2, shop = o4;
      run {{
        {body}
      }}
    }}
    """
    return parse_scenarios(text)[0].state


def _first_stuck(prog, state: State) -> Stuck:
    outcome = run_to_completion(prog, complete_state(prog, state), budget=100)
    assert outcome.status == TraceStatus.STUCK
    assert outcome.stuck is not None
    return outcome.stuck


class TestInitialState:
    """Tests for the initial and completed states."""

    def test_root_object(self, good_prog):
        """The root is the only object and `this` points at it."""
        state = initial_state(good_prog, Skip())
        assert state.depth == 1
        assert state.lookup("this") == ROOT_ADDRESS
        assert state.class_of(ROOT_ADDRESS) == "Object"
        assert state.next_address() == Address(2)

    def test_complete_state_fills_defaults(self, bad_prog, drain):
        """Fields left out of a seed get their declared defaults."""
        state = complete_state(bad_prog, drain.state)
        assert state.heap[Address(4)].fields["key"] == NULL
        assert state.heap[Address(4)].fields["blnce"] == IntVal(0)

    def test_complete_state_rejects_unknown_field(self, good_prog):
        """A seed field the class does not declare is an error."""
        state = _seed("skip")
        obj = state.heap[Address(3)].with_field("colour", IntVal(1))
        with pytest.raises(MissingFieldError):
            complete_state(good_prog, state.with_object(Address(3), obj))

    def test_complete_state_rejects_unknown_class(self, m_good):
        """Classes of another module are unknown until linked."""
        prog = link(m_good)
        state = _seed("skip")
        with pytest.raises(UnknownClassError):
            complete_state(prog, state.with_object(Address(9), Obj("Buyer")))


class TestRuns:
    """Tests for running scenarios to completion."""

    def test_drain_against_bad_module(self, bad_prog, drain):
        """Overwriting the key lets the driver move the whole balance."""
        outcome = run_to_completion(bad_prog, complete_state(bad_prog, drain.state))
        assert outcome.status == TraceStatus.FINAL
        heap = outcome.final.heap
        assert heap[Address(2)].fields["blnce"] == IntVal(0)
        assert heap[Address(4)].fields["blnce"] == IntVal(1000)
        assert heap[Address(2)].fields["key"] == Address(5)

    def test_drain_against_good_module(self, good_prog, drain):
        """An installed key cannot be replaced, so nothing moves."""
        outcome = run_to_completion(good_prog, complete_state(good_prog, drain.state))
        assert outcome.status == TraceStatus.FINAL
        heap = outcome.final.heap
        assert heap[Address(2)].fields["blnce"] == IntVal(1000)
        assert heap[Address(4)].fields["blnce"] == IntVal(0)
        assert heap[Address(2)].fields["key"] == Address(3)

    def test_budget_exhausted(self, bad_prog, drain):
        """A budget of one step stops the run early."""
        outcome = run_to_completion(bad_prog, complete_state(bad_prog, drain.state), budget=1)
        assert outcome.status == TraceStatus.BUDGET_EXHAUSTED
        assert outcome.steps == 1

    def test_trace_kept_on_request(self, bad_prog, drain):
        """Every step is recorded with its kind, calls balanced by returns."""
        outcome = run_to_completion(bad_prog, complete_state(bad_prog, drain.state), keep_trace=True)
        kinds = [kind for _, kind in outcome.trace]
        assert len(kinds) == outcome.steps
        assert kinds.count(StepKind.CALL_ENTER) == 2
        assert kinds.count(StepKind.RETURN) == 2

    def test_trace_depths_follow_step_kinds(self, bad_prog, drain):
        """Each step changes the depth by what its kind predicts."""
        start = complete_state(bad_prog, drain.state)
        outcome = run_to_completion(bad_prog, start, keep_trace=True)
        previous = start
        for state, kind in outcome.trace:
            assert state.depth - previous.depth == kind.depth_delta
            previous = state

    def test_allocation_is_deterministic(self, bad_prog, drain):
        """Fresh objects take the next unused id."""
        start = complete_state(bad_prog, drain.state)
        step = small_step(bad_prog, start)
        assert isinstance(step, Step)
        assert step.state.lookup("k") == Address(5)
        assert step.state.class_of(Address(5)) == "Key"

    def test_terminal_state(self, good_prog):
        """An empty continuation at depth one is terminal and has no step."""
        state = initial_state(good_prog, Skip())
        assert is_terminal(state)
        result = small_step(good_prog, state)
        assert isinstance(result, Stuck)
        assert result.reason == StuckReason.TERMINATED


class TestStuckStates:
    """Tests for the reasons a run gets stuck."""

    def test_meddle_scenario(self, good_prog):
        """External code cannot write an account's field."""
        scenario = load_scenario("meddle.scn")
        outcome = run_to_completion(good_prog, complete_state(good_prog, scenario.state))
        assert outcome.status == TraceStatus.STUCK
        assert outcome.steps == 0
        assert outcome.stuck.reason == StuckReason.PRIVACY_FIELD_ACCESS

    def test_field_read_across_modules(self, good_prog):
        """Reads are private to the module too."""
        stuck = _first_stuck(good_prog, _seed("b := acc.blnce"))
        assert stuck.reason == StuckReason.PRIVACY_FIELD_ACCESS

    def test_assign_to_formal(self, good_prog):
        """`this` cannot be reassigned."""
        stuck = _first_stuck(good_prog, _seed("this := new Key"))
        assert stuck.reason == StuckReason.ASSIGN_TO_FORMAL

    def test_unknown_method(self, good_prog):
        stuck = _first_stuck(good_prog, _seed("acc.withdraw()"))
        assert stuck.reason == StuckReason.UNKNOWN_METHOD

    def test_private_call_across_modules(self, good_prog):
        """External code cannot call the shop's private `send`."""
        stuck = _first_stuck(good_prog, _seed("shop.send(this, null)"))
        assert stuck.reason == StuckReason.PRIVATE_CALL_ACROSS_MODULES

    def test_arity_mismatch(self, good_prog):
        stuck = _first_stuck(good_prog, _seed("acc.set()"))
        assert stuck.reason == StuckReason.ARITY_MISMATCH

    def test_parameter_type_mismatch(self, good_prog):
        """An account is not a key."""
        stuck = _first_stuck(good_prog, _seed("acc.set(acc)"))
        assert stuck.reason == StuckReason.PARAM_TYPE_MISMATCH

    def test_null_receiver(self, good_prog):
        stuck = _first_stuck(good_prog, _seed("n := null; n.set(null)"))
        assert stuck.reason == StuckReason.NULL_DEREF


_CELLS = """
module Cells {
  class Cell {
    field n: int;
    field peer: Cell;

    public method label(): int {
      this.n := "seven";
      res := 0
    }

    public method clear(): int {
      this.peer := null;
      this.n := 7;
      res := 0
    }
  }
}
"""


def _cell_run(body: str) -> State:
    text = f"""
    scenario t {{
      heap {{
        o1: Object;
        o2: Cell {{ peer = o2 }};
      }}
      frame this = o1, c = o2;
      run {{
        {body}
      }}
    }}
    """
    return parse_scenarios(text)[0].state


class TestFieldWrites:
    """Tests for writes checked against declared field types."""

    def test_ill_typed_write_is_stuck(self):
        prog = link(parse_module(_CELLS), [])
        stuck = _first_stuck(prog, _cell_run("c.label()"))
        assert stuck.reason == StuckReason.FIELD_TYPE_MISMATCH

    def test_null_and_matching_scalar_are_accepted(self):
        prog = link(parse_module(_CELLS), [])
        outcome = run_to_completion(prog, complete_state(prog, _cell_run("c.clear()")), budget=100)
        assert outcome.status == TraceStatus.FINAL
        cell = outcome.final.heap[Address(2)]
        assert cell.fields["peer"] == NULL
        assert cell.fields["n"] == IntVal(7)


class TestStack:
    """Tests for pop and restriction."""

    def test_pop_binds_call_target(self, good_prog):
        """Returning resumes the caller with `res` in the call's target."""
        start = complete_state(good_prog, _seed("r := acc.set(null)"))
        entered = small_step(good_prog, start)
        assert isinstance(entered, Step) and entered.kind == StepKind.CALL_ENTER
        callee = entered.state.top.bind("res", IntVal(7)).continue_with(Skip())
        popped = pop(entered.state.with_top(callee))
        assert popped.depth == 1
        assert popped.lookup("r") == IntVal(7)

    def test_pop_without_res(self, good_prog):
        start = complete_state(good_prog, _seed("r := acc.set(null)"))
        entered = small_step(good_prog, start)
        assert isinstance(entered, Step)
        with pytest.raises(PopError):
            pop(entered.state.with_top(entered.state.top.continue_with(Skip())))

    def test_pop_last_frame(self, good_prog):
        with pytest.raises(PopError):
            pop(initial_state(good_prog, Skip()))

    def test_restrict_bounds(self, good_prog):
        """Restriction keeps a prefix of the frames and nothing else."""
        state = initial_state(good_prog, Skip())
        assert restrict(state, 1) == state
        with pytest.raises(RestrictError):
            restrict(state, 2)
        with pytest.raises(RestrictError):
            restrict(state, 0)

    def test_frame_formals_default_to_this(self):
        frame = Frame({"this": Address(1)}, Skip())
        assert frame.formals == ("this",)
