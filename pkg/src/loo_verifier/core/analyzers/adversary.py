"""Bounded attack search.

Enumerates small external programs against the public interface of the
internal module and replays each through the monitor. An attack is an
optional attacker module (classes whose methods answer the callbacks
the internal module makes on `external` receivers) and a driver statement
that runs in place of a seed scenario's continuation.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Iterator, Sequence
from dataclasses import dataclass, field, replace
from itertools import product

from loo_verifier.core.analyzers.monitor import SpecMonitor
from loo_verifier.core.models.config import AttackBounds, VerifierSettings
from loo_verifier.core.models.enums import Privacy, TraceStatus
from loo_verifier.core.models.results import Counterexample, Verdict
from loo_verifier.core.models.spec import Scenario, Spec
from loo_verifier.core.models.state import State
from loo_verifier.core.models.syntax import (
    DISCARD,
    RES,
    THIS,
    Call,
    ClassDef,
    Expr,
    FieldDef,
    FieldWrite,
    Lit,
    LitAssign,
    MethodDef,
    ModuleDef,
    New,
    Param,
    Stmt,
    Var,
    seq,
    walk_statements,
)
from loo_verifier.core.models.values import (
    BOOL_TYPE,
    EXTERNAL_TYPE,
    FALSE,
    INT_TYPE,
    NAT_TYPE,
    NULL,
    OBJECT_CLASS,
    STR_TYPE,
    TRUE,
    Address,
    IntVal,
    StrVal,
    is_scalar_type,
)
from loo_verifier.core.rules.defaults import ATTACK_INT_LITERALS, DEFAULT_FUZZ_BUDGET
from loo_verifier.core.semantics.assertion_ops import literal_type
from loo_verifier.core.semantics.machine import RunOutcome, run_to_completion
from loo_verifier.core.semantics.program import link
from loo_verifier.core.semantics.satisfaction import scalar_candidates
from loo_verifier.shared.formatters import format_module, format_stmt

logger = logging.getLogger(__name__)

ATTACKER_MODULE = "adversary"
ATTACKER_CLASS = "Attacker"
LOOT_FIELD = "loot"


@dataclass(frozen=True, slots=True)
class Callback:
    """A method the internal module calls on an `external` receiver."""

    name: str
    params: tuple[Param, ...]


def callback_signatures(module: ModuleDef) -> tuple[Callback, ...]:
    """Callbacks by name; parameter types come from the first call site."""
    found: dict[str, Callback] = {}
    for cdef in module.classes.values():
        for method in cdef.methods:
            types = method.variable_types()
            types[THIS] = cdef.name
            for stmt in walk_statements(method.body):
                if not isinstance(stmt, Call) or stmt.method in found:
                    continue
                owner = types.get(stmt.receiver)
                if owner is None or owner in module.classes or is_scalar_type(owner):
                    continue
                params = tuple(
                    Param(f"p{i}", _argument_type(arg, types)) for i, arg in enumerate(stmt.args, 1)
                )
                found[stmt.method] = Callback(stmt.method, params)
    return tuple(found[name] for name in sorted(found))


def _argument_type(arg: Expr, types: dict[str, str]) -> str:
    if isinstance(arg, Var):
        return types.get(arg.name, OBJECT_CLASS)
    if isinstance(arg, Lit):
        return literal_type(arg.value) or OBJECT_CLASS
    return OBJECT_CLASS


@dataclass(frozen=True)
class AttackSchema:
    """What generated attacks may use: the module's public interface, a seed and size bounds.

    Only public methods of internal classes are called, and attackers never
    touch internal fields, since both would only produce stuck runs. With
    `prune` set, the search skips candidates equivalent to one it already
    tried (see `attack_search`).
    """

    module: ModuleDef
    seed: Scenario
    bounds: AttackBounds = field(default_factory=AttackBounds)
    int_literals: tuple[int, ...] = ATTACK_INT_LITERALS
    null_arguments: bool = True
    prune: bool = True

    @property
    def attacker_classes(self) -> tuple[str, ...]:
        """`Attacker`, `Attacker_2`, ... up to the bound, renamed away from the module's classes."""
        names: list[str] = []
        for i in range(1, self.bounds.max_external_classes + 1):
            name = ATTACKER_CLASS if i == 1 else f"{ATTACKER_CLASS}_{i}"
            while name in self.module.classes:
                name += "_"
            names.append(name)
        return tuple(names)

    @property
    def callbacks(self) -> tuple[Callback, ...]:
        return callback_signatures(self.module) if self.attacker_classes else ()

    def integers(self) -> tuple[int, ...]:
        """Literal pool plus every integer in the seed state, ascending."""
        found = {v.value for v in scalar_candidates(self.seed.state, INT_TYPE) if isinstance(v, IntVal)}
        return tuple(sorted(found | set(self.int_literals)))


@dataclass(frozen=True, slots=True)
class AttackProgram:
    """A candidate: the attacker module (if any) and the driver statement."""

    attacker: ModuleDef | None
    driver: Stmt

    def text(self) -> str:
        parts = [format_module(self.attacker)] if self.attacker is not None else []
        parts.append("run {\n" + format_stmt(self.driver, 1) + "\n}\n")
        return "\n".join(parts)


@dataclass(frozen=True, slots=True)
class Exhausted:
    """Every candidate within the bounds was replayed without a violation.

    `pruned` counts candidates skipped as equivalent to one already tried
    and driver prefixes whose extensions were skipped for the same reason.
    """

    bounds: AttackBounds
    candidates: int
    pruned: int = 0


# ============================================================
# Enumeration
# ============================================================

# Driver variable: name and the class of the object it holds (None when unknown)
_Binding = tuple[str, str | None]

# Called on each proper prefix of a driver; True skips every extension of it
PrefixFilter = Callable[[Sequence[Stmt], Sequence[_Binding], int], bool]


class _Enumerator:
    def __init__(self, schema: AttackSchema):
        self.schema = schema
        self.module = schema.module
        self.bounds = schema.bounds
        self.attackers = schema.attacker_classes
        self.ints = schema.integers()
        self.seed_env = self._seed_env(schema.seed.state)

    @staticmethod
    def _seed_env(state: State) -> list[_Binding]:
        env: list[_Binding] = []
        for name in sorted(state.top.vars):
            value = state.top.vars[name]
            if isinstance(value, Address):
                env.append((name, state.class_of(value)))
        return env

    # --- argument pools ---------------------------------------------------

    def _is_external(self, cls: str | None) -> bool:
        return cls is None or cls not in self.module.classes

    def _arguments(self, type_name: str, env: Sequence[_Binding], allow_null: bool) -> list[Expr]:
        if type_name in (INT_TYPE, NAT_TYPE):
            return [Lit(IntVal(n)) for n in self.ints if type_name == INT_TYPE or n >= 0]
        if type_name == BOOL_TYPE:
            return [Lit(FALSE), Lit(TRUE)]
        if type_name == STR_TYPE:
            return [Lit(StrVal(""))]
        if type_name == EXTERNAL_TYPE:
            return [Var(name) for name, cls in env if self._is_external(cls)]
        pool: list[Expr] = [Var(name) for name, cls in env if cls is None or cls == type_name]
        if allow_null:
            pool.append(Lit(NULL))
        return pool

    def _calls(self, env: Sequence[_Binding], allow_null: bool) -> Iterator[tuple[str, MethodDef, tuple[Expr, ...]]]:
        for name, cls in env:
            cdef = self.module.classes.get(cls) if cls is not None else None
            if cdef is None:
                continue
            for method in cdef.methods:
                if not method.is_public:
                    continue
                pools = [self._arguments(p.type, env, allow_null) for p in method.params]
                for args in product(*pools):
                    yield name, method, tuple(args)

    # --- driver -----------------------------------------------------------

    def _driver_options(self, env: list[_Binding], fresh: int, objects: int) -> list[tuple[Stmt, _Binding | None, int]]:
        options: list[tuple[Stmt, _Binding | None, int]] = []
        var = f"x{fresh}"
        if objects < self.bounds.max_objects:
            classes = [*sorted(self.module.classes), *self.attackers]
            options += [(New(var, cls), (var, cls), 1) for cls in classes]
        for receiver, method, args in self._calls(env, self.schema.null_arguments):
            returns_object = not is_scalar_type(method.return_type)
            if returns_object:
                cls = None if method.return_type == EXTERNAL_TYPE else method.return_type
                options.append((Call(var, receiver, method.name, args), (var, cls), 0))
            else:
                options.append((Call(DISCARD, receiver, method.name, args), None, 0))
        return options

    def drivers(self, length: int, skip: PrefixFilter | None = None) -> Iterator[list[Stmt]]:
        """Driver statement lists of exactly `length` statements, in canonical order."""

        def extend(prefix: list[Stmt], env: list[_Binding], fresh: int, objects: int) -> Iterator[list[Stmt]]:
            if len(prefix) == length:
                yield prefix
                return
            if prefix and skip is not None and skip(prefix, env, objects):
                return
            for stmt, binding, used in self._driver_options(env, fresh, objects):
                new_env = env + [binding] if binding is not None else env
                yield from extend(
                    prefix + [stmt], new_env, fresh + (binding is not None), objects + used
                )

        for stmts in extend([], list(self.seed_env), 1, 0):
            if not _has_dead_binding(stmts):
                yield stmts

    # --- attacker module --------------------------------------------------

    def _callback_bodies(self, callback: Callback, attacker: str) -> list[tuple[Stmt, ...]]:
        env: list[_Binding] = [(p.name, None if p.type == EXTERNAL_TYPE else p.type) for p in callback.params]
        env = [(n, c) for n, c in env if c is None or not is_scalar_type(c)]
        env.append((THIS, attacker))
        options: list[Stmt] = [FieldWrite(THIS, LOOT_FIELD, Var(n)) for n, _ in env if n != THIS]
        if self.bounds.max_depth >= 2:
            options += [
                Call(DISCARD, receiver, method.name, args)
                for receiver, method, args in self._calls(env, self.schema.null_arguments)
            ]
        bodies: list[tuple[Stmt, ...]] = []
        for size in range(self.bounds.max_callback_stmts + 1):
            bodies.extend(product(options, repeat=size))
        return bodies

    def attacker_modules(self) -> list[ModuleDef | None]:
        """Attacker modules in canonical order; None when attacks have no external class.

        Every attacker class answers every callback, with bodies chosen
        independently per class.
        """
        if not self.attackers:
            return [None]
        callbacks = self.schema.callbacks
        slots = [(cls, cb) for cls in self.attackers for cb in callbacks]
        per_slot = [self._callback_bodies(cb, cls) for cls, cb in slots]
        modules: list[ModuleDef | None] = []
        for bodies in product(*per_slot):
            classes: dict[str, ClassDef] = {}
            for cls in self.attackers:
                methods = tuple(
                    MethodDef(
                        Privacy.PUBLIC,
                        cb.name,
                        cb.params,
                        INT_TYPE,
                        seq(*body, LitAssign(RES, IntVal(0))),
                    )
                    for (owner, cb), body in zip(slots, bodies)
                    if owner == cls
                )
                classes[cls] = ClassDef(cls, (FieldDef(LOOT_FIELD, OBJECT_CLASS),), (), methods)
            modules.append(ModuleDef(ATTACKER_MODULE, classes))
        return modules

    def candidates(self, skip: PrefixFilter | None = None) -> Iterator[tuple[list[Stmt], list[ModuleDef | None]]]:
        """Drivers, shortest first, each with the attacker modules it is tried against."""
        modules = self.attacker_modules()
        for length in range(self.bounds.max_stmts + 1):
            for stmts in self.drivers(length, skip):
                yield stmts, modules if _creates_attacker(stmts, self.attackers) else modules[:1]


def _uses(stmt: Stmt) -> set[str]:
    if isinstance(stmt, Call):
        return {stmt.receiver} | {a.name for a in stmt.args if isinstance(a, Var)}
    return set()


def _has_dead_binding(stmts: Sequence[Stmt]) -> bool:
    """Some object created by `new` is never used by a later statement."""
    for i, stmt in enumerate(stmts):
        if isinstance(stmt, New) and not any(stmt.target in _uses(later) for later in stmts[i + 1 :]):
            return True
    return False


def _creates_attacker(stmts: Sequence[Stmt], attackers: Sequence[str]) -> bool:
    return any(isinstance(s, New) and s.cls in attackers for s in stmts)


def enumerate_attacks(schema: AttackSchema) -> Iterator[AttackProgram]:
    """Every attack within the bounds, shortest drivers first, without pruning.

    Fresh variables are named `x1, x2, ...` in order of introduction, so
    no two candidates differ only by variable names. Objects created and
    never used afterwards are pruned. Attacker callback bodies vary only
    when the driver creates an attacker object.
    """
    for stmts, modules in _Enumerator(schema).candidates():
        driver = seq(*stmts)
        for module in modules:
            yield AttackProgram(module, driver)


# ============================================================
# Search
# ============================================================


def _with_driver(seed: Scenario, driver: Stmt) -> State:
    return seed.state.with_top(seed.state.top.continue_with(driver))


def replay_attack(
    module: ModuleDef,
    spec: Spec,
    seed: Scenario,
    attack: AttackProgram,
    settings: VerifierSettings | None = None,
) -> list[Verdict]:
    """Monitor `spec` on the seed with its continuation replaced by the attack's driver."""
    settings = settings or VerifierSettings()
    prog = link(module, [attack.attacker] if attack.attacker is not None else [])
    state = _with_driver(seed, attack.driver)
    scenario = replace(seed, state=state, body=attack.driver)
    return SpecMonitor(prog, spec, scenario, settings).analyze()


def run_attack(module: ModuleDef, seed: Scenario, attack: AttackProgram, budget: int) -> RunOutcome:
    """Plain run of the attack's driver from the seed, with its trace."""
    prog = link(module, [attack.attacker] if attack.attacker is not None else [])
    return run_to_completion(prog, _with_driver(seed, attack.driver), budget, keep_trace=True)


def enters_attacker(outcome: RunOutcome, attackers: Sequence[str]) -> bool:
    """Some step of the run executes a method of an attacker class."""
    for state, _ in outcome.trace:
        this = state.top.vars.get(THIS)
        if state.depth > 1 and isinstance(this, Address) and state.class_of(this) in attackers:
            return True
    return False


def _state_key(state: State) -> tuple[frozenset, frozenset]:
    heap = frozenset((addr, obj.cls, frozenset(obj.fields.items())) for addr, obj in state.heap.items())
    return frozenset(state.top.vars.items()), heap


class _PrefixPruner:
    """Cuts a driver prefix whose run ends where an earlier prefix's run ended.

    Two prefixes of the same length, with the same variables and object
    count, that leave the same final state have the same extensions and
    those extensions continue identically; only the first is extended. A
    prefix whose run is stuck or out of budget is cut too, since every
    extension replays the same run. Prefixes that run attacker code are
    never cut, nor are prefixes that violate the specification themselves.
    """

    def __init__(
        self,
        module: ModuleDef,
        spec: Spec,
        schema: AttackSchema,
        attacker: ModuleDef | None,
        settings: VerifierSettings,
    ):
        self.module = module
        self.spec = spec
        self.schema = schema
        self.attacker = attacker
        self.settings = settings
        self.attackers = schema.attacker_classes
        self.first: dict[tuple, tuple[Stmt, ...]] = {}
        self.decided: dict[tuple[Stmt, ...], bool] = {}
        self.cut = 0

    def __call__(self, prefix: Sequence[Stmt], env: Sequence[_Binding], objects: int) -> bool:
        key = tuple(prefix)
        if key not in self.decided:
            self.decided[key] = self._decide(key, env, objects)
            self.cut += self.decided[key]
        return self.decided[key]

    def _decide(self, prefix: tuple[Stmt, ...], env: Sequence[_Binding], objects: int) -> bool:
        attack = AttackProgram(self.attacker, seq(*prefix))
        outcome = run_attack(self.module, self.schema.seed, attack, self.settings.monitor_budget)
        if enters_attacker(outcome, self.attackers):
            return False
        if outcome.status == TraceStatus.FINAL:
            state_key = (len(prefix), objects, tuple(env), _state_key(outcome.final))
            if self.first.setdefault(state_key, prefix) == prefix:
                return False
        verdicts = replay_attack(self.module, self.spec, self.schema.seed, attack, self.settings)
        if any(v.is_violated for v in verdicts):
            return False
        logger.debug("pruned prefix %s", format_stmt(seq(*prefix), 0))
        return True


def attack_search(
    module: ModuleDef,
    spec: Spec,
    schema: AttackSchema,
    budget: int = DEFAULT_FUZZ_BUDGET,
    settings: VerifierSettings | None = None,
    start: int = 0,
) -> Counterexample | Exhausted:
    """First counterexample in canonical order, or Exhausted.

    With `schema.prune`, driver prefixes are cut as described by
    `_PrefixPruner`, and the attacker modules of a driver whose run never
    enters attacker code are all represented by the first one. Candidate
    indices then count the pruned order; without pruning they match
    `enumerate_attacks`.

    Args:
        module: Internal module under attack
        spec: Specification to refute
        schema: Interface, seed and bounds of the enumeration
        budget: Step bound for each replayed candidate
        settings: Fuel and instantiation cap; its monitor budget is replaced by `budget`
        start: Index of the first candidate to replay, for resuming a search

    Returns:
        The first violating candidate, or Exhausted with the number of candidates tried
    """
    settings = (settings or VerifierSettings()).model_copy(update={"monitor_budget": budget})
    enumerator = _Enumerator(schema)
    pruner = None
    if schema.prune:
        pruner = _PrefixPruner(module, spec, schema, enumerator.attacker_modules()[0], settings)
    tried = 0
    skipped = 0
    index = -1
    for stmts, modules in enumerator.candidates(pruner):
        driver = seq(*stmts)
        group = list(modules)
        first = index + 1
        index += len(group)
        if schema.prune and len(group) > 1:
            outcome = run_attack(module, schema.seed, AttackProgram(group[0], driver), budget)
            if not enters_attacker(outcome, enumerator.attackers):
                skipped += len(group) - 1
                group = group[:1]
        for offset, attacker in enumerate(group):
            position = first + offset
            if position < start:
                continue
            tried += 1
            attack = AttackProgram(attacker, driver)
            for verdict in replay_attack(module, spec, schema.seed, attack, settings):
                if verdict.is_violated:
                    logger.info("candidate %d violates %s", position, verdict.conjunct)
                    return Counterexample(
                        program=attack.text(),
                        conjunct=verdict.conjunct,
                        instantiation=verdict.instantiation,
                        verdict=verdict,
                        candidate_index=position,
                    )
    pruned = skipped + (pruner.cut if pruner is not None else 0)
    logger.info("search exhausted after %d candidates, %d pruned", tried, pruned)
    return Exhausted(schema.bounds, tried, pruned)
