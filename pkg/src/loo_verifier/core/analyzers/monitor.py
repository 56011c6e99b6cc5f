"""Dynamic monitor: checks specifications against bounded scoped runs.

A verdict is Verified only up to the step budget it carries, Violated with
the offending trace as witness, or Inconclusive when the budget ran out or
an assertion could not be decided.
"""

from __future__ import annotations

import logging
from collections.abc import Mapping, Sequence
from itertools import islice, product

from loo_verifier.core.models.assertion import Assertion, External, HasClass, conj
from loo_verifier.core.models.config import VerifierSettings
from loo_verifier.core.models.enums import TraceStatus, VerdictKind
from loo_verifier.core.models.results import SatResult, TraceRecord, Verdict
from loo_verifier.core.models.spec import MethodSpec, Scenario, ScopedInvariant, Spec
from loo_verifier.core.models.state import State
from loo_verifier.core.models.syntax import (
    DISCARD,
    RES,
    THIS,
    Call,
    Expr,
    Lit,
    Param,
    Var,
    decompose,
)
from loo_verifier.core.models.values import EXTERNAL_TYPE, Address, Value, is_scalar_type, value_has_scalar_type
from loo_verifier.core.rules.defaults import DEFAULT_GHOST_FUEL, DEFAULT_INSTANTIATION_CAP, DEFAULT_MONITOR_BUDGET
from loo_verifier.core.semantics.assertion_ops import fresh_name, ground, substitute, substitute_values
from loo_verifier.core.semantics.machine import complete_state, run_to_completion
from loo_verifier.core.semantics.program import LinkedProgram
from loo_verifier.core.semantics.satisfaction import quantifier_range, sat, sat_deep
from loo_verifier.core.semantics.scoped import ScopedTrace, bounded_star, is_external
from loo_verifier.shared.exceptions import CallSiteError, InstantiationError, UnboundVariableError
from loo_verifier.shared.formatters import format_value, trace_records

logger = logging.getLogger(__name__)

Instantiation = Mapping[str, Value]


def instantiations(
    prog: LinkedProgram, state: State, binders: Sequence[Param], cap: int = DEFAULT_INSTANTIATION_CAP
) -> list[dict[str, Value]]:
    """Binder tuples drawn from the state: objects of each class, scalars for scalar binders.

    Tuples come in lexicographic order of the per-binder candidate lists and
    are cut at `cap`.
    """
    ranges = [quantifier_range(prog.internal, state, b.type) for b in binders]
    names = [b.name for b in binders]
    return [dict(zip(names, values)) for values in islice(product(*ranges), cap)]


def _fits(prog: LinkedProgram, state: State, value: Value, type_name: str) -> bool:
    if is_scalar_type(type_name):
        return value_has_scalar_type(value, type_name)
    if not isinstance(value, Address) or value not in state.heap:
        return False
    if type_name == EXTERNAL_TYPE:
        return not prog.is_internal_class(state.class_of(value))
    return state.class_of(value) == type_name


def _check_instantiation(prog: LinkedProgram, state: State, binders: Sequence[Param], inst: Instantiation) -> None:
    for b in binders:
        if b.name not in inst:
            raise InstantiationError(f"binder {b.name} is not instantiated")
        if not _fits(prog, state, inst[b.name], b.type):
            raise InstantiationError(f"{format_value(inst[b.name])} is not a {b.type}")


def _render(inst: Instantiation) -> dict[str, str]:
    return {k: format_value(v) for k, v in inst.items()}


def _sat_at(prog: LinkedProgram, state: State, assertion: Assertion, fuel: int, deep_k: int | None) -> SatResult:
    if deep_k is None:
        return sat(prog.internal, state, assertion, fuel)
    return sat_deep(prog.internal, state, min(deep_k, state.depth), assertion, fuel)


def _witness(trace: ScopedTrace) -> list[TraceRecord]:
    return trace_records((e.state, e.kind, e.external) for e in trace.entries)


def check_quadruple_dyn(
    prog: LinkedProgram,
    pre: Assertion,
    state: State,
    post: Assertion,
    mid: Assertion,
    budget: int = DEFAULT_MONITOR_BUDGET,
    fuel: int = DEFAULT_GHOST_FUEL,
    deep_k: int | None = None,
) -> Verdict:
    """Check `{pre} state {post} || {mid}` on the bounded scoped run of `state`.

    When `state` satisfies `pre`, every final state of the run must satisfy
    `post` and every external state after the first must satisfy `mid`
    grounded at `state`. With `deep_k` set, post and mid must hold from
    frame `deep_k` upward; the precondition is always checked at the top.

    Args:
        prog: Linked program whose internal module is under test
        pre: Precondition, checked at `state`
        state: Base state
        post: Postcondition, checked at the final state
        mid: Mid-condition, checked at intermediate external states
        budget: Step bound of the scoped run
        fuel: Ghost unfolding bound per expression
        deep_k: First frame of deep satisfaction, or None for shallow

    Returns:
        Verdict for this obligation alone
    """
    module = prog.internal
    before = sat(module, state, pre, fuel)
    if before.fails:
        return Verdict.verified(budget, "precondition does not hold")
    if not before.decided:
        return Verdict.inconclusive(budget, f"precondition is {before}")
    try:
        grounded_mid = ground(state, mid)
    except UnboundVariableError as exc:
        return Verdict.inconclusive(budget, f"mid-condition is ill-formed: {exc}")

    trace = bounded_star(prog, state, budget)
    undecided: str | None = None
    for index, entry in enumerate(trace.entries[1:], 1):
        if not entry.external:
            continue
        result = _sat_at(prog, entry.state, grounded_mid, fuel, deep_k)
        if result.fails:
            logger.debug("mid-condition fails at step %d", index)
            return Verdict(
                kind=VerdictKind.VIOLATED,
                bound=budget,
                reason=f"mid-condition fails at step {index}",
                witness_index=index,
                witness=_witness(trace),
                steps=trace.steps,
            )
        if not result.decided and undecided is None:
            undecided = f"mid-condition is {result} at step {index}"

    if trace.status == TraceStatus.FINAL:
        result = _sat_at(prog, trace.last, post, fuel, deep_k)
        if result.fails:
            return Verdict(
                kind=VerdictKind.VIOLATED,
                bound=budget,
                reason="postcondition fails at the final state",
                witness_index=trace.steps,
                witness=_witness(trace),
                steps=trace.steps,
            )
        if not result.decided and undecided is None:
            undecided = f"postcondition is {result}"
    elif trace.status == TraceStatus.BUDGET_EXHAUSTED and undecided is None:
        undecided = f"no final state within {budget} steps"

    if undecided is not None:
        return Verdict.inconclusive(budget, undecided, trace.steps)
    reason = f"run is stuck ({trace.stuck})" if trace.stuck is not None else "all states satisfy the obligation"
    return Verdict.verified(budget, reason, trace.steps)


def check_invariant_dyn(
    prog: LinkedProgram,
    inv: ScopedInvariant,
    state: State,
    inst: Instantiation,
    budget: int = DEFAULT_MONITOR_BUDGET,
    fuel: int = DEFAULT_GHOST_FUEL,
    deep_k: int | None = None,
) -> Verdict:
    """The invariant instantiated by `inst`, as pre, post and mid of an obligation at `state`.

    Raises:
        InstantiationError: If a binder is missing or holds a value of the wrong class
    """
    _check_instantiation(prog, state, inv.binders, inst)
    body = substitute_values(inv.body, inst)
    pre = conj(External(Var(THIS)), body)
    verdict = check_quadruple_dyn(prog, pre, state, body, body, budget, fuel, deep_k)
    return verdict.model_copy(update={"conjunct": inv.name, "instantiation": _render(inst)})


def _call_site(state: State, ms: MethodSpec) -> Call:
    call, _ = decompose(state.cont)
    if not isinstance(call, Call):
        raise CallSiteError(f"next statement is not a call of {ms.method}")
    if call.method != ms.method:
        raise CallSiteError(f"next call is {call.method}, not {ms.method}")
    if len(call.args) != len(ms.formals):
        raise CallSiteError(f"{ms.method} takes {len(ms.formals)} arguments, the call passes {len(call.args)}")
    return call


def check_methodspec_dyn(
    prog: LinkedProgram,
    ms: MethodSpec,
    state: State,
    inst: Instantiation | None = None,
    budget: int = DEFAULT_MONITOR_BUDGET,
    fuel: int = DEFAULT_GHOST_FUEL,
    deep_k: int | None = None,
) -> Verdict:
    """Check a method specification at a state about to run `u := y0.m(args)`.

    The continuation is cut to the call itself. The receiver replaces
    `this`, the arguments replace the formals and `u` replaces `res`; the
    binders are fixed by `inst`.

    Raises:
        CallSiteError: If the state is not at a matching call, or `u` is the
            receiver or one of the arguments
        InstantiationError: If `inst` does not fit the binders
    """
    inst = dict(inst or {})
    _check_instantiation(prog, state, ms.binders, inst)
    call = _call_site(state, ms)

    arg_vars = {a.name for a in call.args if isinstance(a, Var)}
    target = call.target
    if target == DISCARD:
        target = fresh_name("u", set(state.top.vars) | arg_vars | {call.receiver})
    if target == call.receiver or target in arg_vars:
        raise CallSiteError(f"result variable {target} is also the receiver or an argument")

    binder_lits: dict[str, Expr] = {k: Lit(v) for k, v in inst.items()}
    formal_map: dict[str, Expr] = {f.name: a for f, a in zip(ms.formals, call.args)}
    to_caller: dict[str, Expr] = {THIS: Var(call.receiver), **formal_map, **binder_lits}

    typing = [HasClass(Var(call.receiver), ms.cls)]
    typing += [HasClass(a, f.type) for f, a in zip(ms.formals, call.args)]
    pre = conj(*typing, substitute(ms.pre, to_caller))
    post = substitute(ms.post, {**to_caller, RES: Var(target)})
    mid = substitute(ms.mid, binder_lits)

    cut = state.with_top(state.top.continue_with(Call(target, call.receiver, call.method, call.args)))
    verdict = check_quadruple_dyn(prog, pre, cut, post, mid, budget, fuel, deep_k)
    return verdict.model_copy(update={"conjunct": ms.name, "instantiation": _render(inst)})


# ============================================================
# Driver
# ============================================================


class SpecMonitor:
    """Checks every conjunct of a specification from a scenario.

    Invariants are checked at the scenario's base state for each binder
    instantiation. Method specifications are checked at every call of the
    specified method met along the scenario's unscoped run.
    """

    def __init__(self, prog: LinkedProgram, spec: Spec, scenario: Scenario, settings: VerifierSettings | None = None):
        self.prog = prog
        self.spec = spec
        self.scenario = scenario
        self.settings = settings or VerifierSettings()
        self.base = complete_state(prog, scenario.state)
        self.verdicts: list[Verdict] = []

    @property
    def deep_k(self) -> int | None:
        return 1 if self.settings.deep else None

    def analyze(self) -> list[Verdict]:
        for conjunct in self.spec.conjuncts:
            if isinstance(conjunct, ScopedInvariant):
                verdict = self._check_invariant(conjunct)
            else:
                verdict = self._check_method_spec(conjunct)
            logger.info("%s: %s (%s)", conjunct.name, verdict.kind.value, verdict.reason)
            self.verdicts.append(verdict)
        return self.verdicts

    @property
    def violated(self) -> bool:
        return any(v.is_violated for v in self.verdicts)

    def _check_invariant(self, inv: ScopedInvariant) -> Verdict:
        """Bounded approximation of invariant adherence.

        Only the scenario's base state is tried as the starting point of a
        scoped execution, and binder instantiations are drawn from the
        addresses and scalars of that state alone. Later external states
        along the run and values created by it are not quantified over, so
        VERIFIED means "no violation from this base within budget", never
        adherence for every external state.
        """
        budget = self.settings.monitor_budget
        if not is_external(self.prog.internal, self.base):
            return Verdict.verified(budget, "base state is internal").model_copy(update={"conjunct": inv.name})
        verdicts = [
            check_invariant_dyn(self.prog, inv, self.base, inst, budget, self.settings.fuel, self.deep_k)
            for inst in instantiations(self.prog, self.base, inv.binders, self.settings.instantiation_cap)
        ]
        if not verdicts:
            return Verdict.verified(budget, "no instantiation").model_copy(update={"conjunct": inv.name})
        return Verdict.combine(verdicts, budget)

    def _call_sites(self, ms: MethodSpec) -> list[State]:
        outcome = run_to_completion(self.prog, self.base, self.settings.monitor_budget, keep_trace=True)
        states = [self.base, *(s for s, _ in outcome.trace)]
        sites = []
        for state in states:
            call, _ = decompose(state.cont)
            if not isinstance(call, Call) or call.method != ms.method:
                continue
            receiver = state.lookup(call.receiver)
            if isinstance(receiver, Address) and state.class_of(receiver) == ms.cls:
                sites.append(state)
        return sites

    def _check_method_spec(self, ms: MethodSpec) -> Verdict:
        budget = self.settings.monitor_budget
        verdicts: list[Verdict] = []
        for site in self._call_sites(ms):
            for inst in instantiations(self.prog, site, ms.binders, self.settings.instantiation_cap):
                try:
                    verdicts.append(
                        check_methodspec_dyn(self.prog, ms, site, inst, budget, self.settings.fuel, self.deep_k)
                    )
                except CallSiteError as exc:
                    logger.debug("skipping call site: %s", exc)
        if not verdicts:
            return Verdict.verified(budget, "no matching call site").model_copy(update={"conjunct": ms.name})
        return Verdict.combine(verdicts, budget)


def monitor_scenario(
    prog: LinkedProgram, spec: Spec, scenario: Scenario, settings: VerifierSettings | None = None
) -> list[Verdict]:
    """Per-conjunct verdicts of `spec` from `scenario`."""
    return SpecMonitor(prog, spec, scenario, settings).analyze()
