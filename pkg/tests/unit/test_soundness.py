"""Derivations the checker accepts hold on real runs; broken derivations do not get through."""

import dataclasses
from collections.abc import Iterator
from dataclasses import dataclass
from itertools import islice, product

import pytest

from loo_verifier.core.analyzers import check_quadruple_dyn
from loo_verifier.core.logic import check_module
from loo_verifier.core.logic.obligations import BundleChecker
from loo_verifier.core.logic.rules import same_statement
from loo_verifier.core.models.assertion import A_TRUE, AExpr, Assertion, HasClass, conjuncts
from loo_verifier.core.models.proof import ProofBundle, ProofNode, Quadruple, RuleName, Triple
from loo_verifier.core.models.results import Verdict
from loo_verifier.core.models.spec import Spec
from loo_verifier.core.models.state import State
from loo_verifier.core.models.syntax import (
    RES,
    BinOp,
    Expr,
    ModuleDef,
    Stmt,
    Var,
    expr_vars,
    flatten,
    seq,
)
from loo_verifier.core.models.values import NULL, Address, IntVal, Value
from loo_verifier.core.semantics.assertion_ops import free_vars, same_assertion, substitute_values
from loo_verifier.core.semantics.expressions import Diverged, eval_in_env
from loo_verifier.core.semantics.machine import complete_state, run_to_completion
from loo_verifier.core.semantics.program import LinkedProgram, link
from loo_verifier.core.semantics.satisfaction import quantifier_range, sat, scalar_candidates
from loo_verifier.corpus import load_module, load_proof, load_scenario, load_scenarios
from loo_verifier.shared.exceptions import EvaluationError

PROOFS = ("m_good_s2.proof", "m_good_s3.proof", "m_fine_s2.proof", "m_bad_s2.proof", "m_bad_s3.proof")
ACCEPTED_PROOFS = ("m_good_s2.proof", "m_good_s3.proof", "m_fine_s2.proof")

ITEM = Address(5)
PRICES = (0, 10)
RUN_BUDGET = 2_000
REPLAY_BUDGET = 500
INSTANCES_PER_STATE = 4
CANDIDATE_CAP = 400

# Each swap lands on a rule whose shape the original conclusion cannot have.
SWAPS = {
    RuleName.EMBED_UL: RuleName.PROT_1,
    RuleName.PROT_1: RuleName.EMBED_UL,
    RuleName.PROT_2: RuleName.PROT_1,
    RuleName.MID: RuleName.TYPES_2,
    RuleName.TYPES_2: RuleName.MID,
    RuleName.COMBINE: RuleName.SEQU,
    RuleName.SEQU: RuleName.COMBINE,
    RuleName.CONSEQU: RuleName.MID,
    RuleName.IF_RULE: RuleName.CASES,
    RuleName.CALL_INT: RuleName.CALL_EXT_ADAPT_STRONG,
    RuleName.CALL_EXT_ADAPT_STRONG: RuleName.CALL_INT,
    RuleName.METHOD: RuleName.INVARIANT,
    RuleName.INVARIANT: RuleName.METHOD,
}
MID_CHECKING_RULES = frozenset(
    {RuleName.SEQU, RuleName.CONSEQU, RuleName.COMBINE, RuleName.TYPES_2, RuleName.IF_RULE, RuleName.INVARIANT}
)
SET_NODES = ("set_eq", "set_k", "set_res", "set_c", "set_q", "set")


@dataclass(frozen=True)
class Replay:
    proof: str
    node: str
    instantiation: dict[str, Value]
    verdict: Verdict


@dataclass(frozen=True)
class Mutant:
    description: str
    bundle: ProofBundle
    checked: ProofNode


# ============================================================
# States
# ============================================================


def _seeds(prog: LinkedProgram) -> list[State]:
    """Both purchases at each price, and the drain."""
    seeds = []
    for scenario in load_scenarios("purchase.scn"):
        base = complete_state(prog, scenario.state)
        for price in PRICES:
            seeds.append(base.with_object(ITEM, base.heap[ITEM].with_field("price", IntVal(price))))
    seeds.append(complete_state(prog, load_scenario("drain.scn").state))
    return seeds


def _reached(prog: LinkedProgram) -> list[State]:
    states: list[State] = []
    for seed in _seeds(prog):
        outcome = run_to_completion(prog, seed, RUN_BUDGET, keep_trace=True)
        states.extend([seed, *(s for s, _ in outcome.trace)])
    return states


def _starts_with(cont: Stmt, stmt: Stmt) -> bool:
    parts, wanted = flatten(cont), flatten(stmt)
    return bool(wanted) and len(parts) >= len(wanted) and same_statement(seq(*parts[: len(wanted)]), stmt)


# ============================================================
# Logical variables
# ============================================================


def _pins(pre: Assertion, logical: frozenset[str]) -> dict[str, Expr]:
    """`z == e` and `e == z` conjuncts fix the logical variable z."""
    pins: dict[str, Expr] = {}
    for part in conjuncts(pre):
        if not isinstance(part, AExpr) or not isinstance(part.expr, BinOp) or part.expr.op != "==":
            continue
        left, right = part.expr.left, part.expr.right
        for var, other in ((left, right), (right, left)):
            if isinstance(var, Var) and var.name in logical and var.name not in pins:
                if var.name not in expr_vars(other):
                    pins[var.name] = other
                    break
    return pins


def _resolve(module: ModuleDef, state: State, pins: dict[str, Expr], inst: dict[str, Value]) -> bool:
    pending = dict(pins)
    while pending:
        progress = False
        for var, expr in list(pending.items()):
            if expr_vars(expr) - set(state.top.vars) - set(inst):
                continue
            try:
                value = eval_in_env(module, state.heap, {**state.top.vars, **inst}, expr)
            except EvaluationError:
                return False
            if isinstance(value, Diverged):
                return False
            inst[var] = value
            del pending[var]
            progress = True
        if not progress:
            return False
    return True


def _instantiations(module: ModuleDef, state: State, quad: Triple | Quadruple) -> Iterator[dict[str, Value]]:
    """Values for the variables a judgment uses beyond the frame, `res` aside."""
    mid = quad.mid if isinstance(quad, Quadruple) else A_TRUE
    logical = (free_vars(quad.pre) | free_vars(quad.post) | free_vars(mid)) - set(state.top.vars) - {RES}
    pins = _pins(quad.pre, logical)
    hints = {
        c.expr.name: c.cls for c in conjuncts(quad.pre) if isinstance(c, HasClass) and isinstance(c.expr, Var)
    }
    pool: list[Value] = [*sorted(state.heap), NULL, *scalar_candidates(state, "int")]
    anchors = sorted(logical - set(pins))
    ranges = [quantifier_range(module, state, hints[v]) if v in hints else pool for v in anchors]
    for values in islice(product(*ranges), CANDIDATE_CAP):
        inst = dict(zip(anchors, values))
        if _resolve(module, state, pins, inst):
            yield inst


def _replays_at(prog: LinkedProgram, state: State, quad: Triple | Quadruple) -> Iterator[tuple[dict, Verdict]]:
    """Deep checks from the frame the judgment starts in, for instantiations that meet the precondition."""
    module = prog.internal
    cut = state.with_top(state.top.continue_with(quad.stmt))
    mid = quad.mid if isinstance(quad, Quadruple) else A_TRUE
    found = 0
    for inst in _instantiations(module, cut, quad):
        pre = substitute_values(quad.pre, inst)
        if not sat(module, cut, pre).holds:
            continue
        post, grounded_mid = substitute_values(quad.post, inst), substitute_values(mid, inst)
        yield inst, check_quadruple_dyn(prog, pre, cut, post, grounded_mid, REPLAY_BUDGET, deep_k=cut.depth)
        found += 1
        if found == INSTANCES_PER_STATE:
            return


def _node_replays(prog: LinkedProgram, states: list[State], node: ProofNode) -> Iterator[tuple[dict, Verdict]]:
    quad = node.conclusion
    assert isinstance(quad, Triple | Quadruple)
    for state in states:
        if _starts_with(state.cont, quad.stmt):
            yield from _replays_at(prog, state, quad)


# ============================================================
# Mutations
# ============================================================


def _with_node(bundle: ProofBundle, node: ProofNode) -> ProofBundle:
    return dataclasses.replace(bundle, nodes={**bundle.nodes, node.name: node})


def _swapped(bundle: ProofBundle) -> Iterator[Mutant]:
    for node in bundle.nodes.values():
        if node.rule in SWAPS:
            mutated = dataclasses.replace(node, rule=SWAPS[node.rule])
            description = f"{node.name}: {node.rule.value} as {mutated.rule.value}"
            yield Mutant(description, _with_node(bundle, mutated), mutated)


def _dropped(bundle: ProofBundle) -> Iterator[Mutant]:
    for node in bundle.nodes.values():
        for i, premise in enumerate(node.premises):
            mutated = dataclasses.replace(node, premises=node.premises[:i] + node.premises[i + 1 :])
            yield Mutant(f"{node.name} without {premise}", _with_node(bundle, mutated), mutated)


def _weakened(bundle: ProofBundle) -> Iterator[Mutant]:
    """A premise whose mid-condition is replaced by `true` under a parent that keeps the old one."""
    for parent in bundle.nodes.values():
        if parent.rule not in MID_CHECKING_RULES:
            continue
        for premise in parent.premises:
            child = bundle.nodes.get(premise)
            if child is None or not isinstance(child.conclusion, Quadruple):
                continue
            if same_assertion(child.conclusion.mid, A_TRUE):
                continue
            weak = dataclasses.replace(child, conclusion=dataclasses.replace(child.conclusion, mid=A_TRUE))
            yield Mutant(f"{parent.name} over {premise} with mid true", _with_node(bundle, weak), parent)


def _mutants(bundle: ProofBundle) -> list[Mutant]:
    return [*_swapped(bundle), *_dropped(bundle), *_weakened(bundle)]


def _rejected(module: ModuleDef, spec: Spec, mutant: Mutant) -> bool:
    return bool(BundleChecker(module, spec, mutant.bundle).check_node(mutant.checked))


def _refuted(prog: LinkedProgram, states: list[State], mutant: Mutant) -> bool:
    if not isinstance(mutant.checked.conclusion, Triple | Quadruple):
        return False
    return any(v.is_violated for _, v in _node_replays(prog, states, mutant.checked))


# ============================================================
# Fixtures
# ============================================================


@pytest.fixture(scope="module")
def programs() -> dict[str, tuple[LinkedProgram, list[State]]]:
    """Each module linked with the client, and every state its seed runs reach."""
    client = load_module("client.loo")
    out = {}
    for name in ("m_good.loo", "m_fine.loo", "m_bad.loo"):
        prog = link(load_module(name), [client])
        out[name] = (prog, _reached(prog))
    return out


@pytest.fixture(scope="module")
def proofs() -> dict[str, tuple[ModuleDef, Spec, ProofBundle, list[ProofNode]]]:
    """Each shipped bundle with the statement-level derivations the checker accepts in it."""
    out = {}
    for name in PROOFS:
        module, spec, bundle = load_proof(name)
        report = check_module(module, spec, bundle)
        accepted = {o.name for o in report.obligations if o.accepted}
        nodes = [
            n for n in bundle.nodes.values() if n.name in accepted and isinstance(n.conclusion, Triple | Quadruple)
        ]
        out[name] = (module, spec, bundle, nodes)
    return out


@pytest.fixture(scope="module")
def replays(programs, proofs) -> list[Replay]:
    out = []
    for name, (_, _, bundle, nodes) in proofs.items():
        prog, states = programs[bundle.module_ref]
        for node in nodes:
            out.extend(Replay(name, node.name, inst, v) for inst, v in _node_replays(prog, states, node))
    return out


# ============================================================
# Tests
# ============================================================


@pytest.mark.slow
class TestAcceptedDerivationsHold:
    """Tests replaying accepted derivations on the states purchases and drains go through."""

    def test_seed_runs_reach_method_bodies(self, programs, proofs):
        prog, states = programs["m_good.loo"]
        _, _, bundle, _ = proofs["m_good_s2.proof"]
        for name in ("buy", "transfer", "send", "e_then", "e_else"):
            stmt = bundle.nodes[name].conclusion.stmt
            assert any(_starts_with(s.cont, stmt) for s in states), name

    def test_enough_replays(self, replays):
        verified = [r for r in replays if r.verdict.is_verified]
        assert len(verified) >= 200
        assert len({(r.proof, r.node) for r in verified}) >= 50

    def test_every_bundle_is_replayed(self, replays):
        assert {r.proof for r in replays} == set(PROOFS)

    def test_no_replay_is_violated(self, replays):
        violated = [(r.proof, r.node, r.instantiation, r.verdict.reason) for r in replays if r.verdict.is_violated]
        assert violated == []

    def test_whole_method_derivations_replayed(self, replays):
        whole = {(r.proof, r.node) for r in replays if r.node in ("buy", "transfer", "send")}
        assert ("m_good_s2.proof", "buy") in whole
        assert ("m_good_s3.proof", "transfer") in whole


@pytest.mark.slow
class TestBrokenDerivations:
    """Tests that swapped rules, dropped premises and weakened mid-conditions are caught."""

    def test_enough_mutants(self, proofs):
        counts = {name: len(_mutants(proofs[name][2])) for name in ACCEPTED_PROOFS}
        assert sum(counts.values()) >= 50
        assert all(count > 0 for count in counts.values())

    @pytest.mark.parametrize("name", ACCEPTED_PROOFS)
    def test_swapped_rules_caught(self, programs, proofs, name):
        module, spec, bundle, _ = proofs[name]
        prog, states = programs[bundle.module_ref]
        escaped = [
            m.description
            for m in _swapped(bundle)
            if not _rejected(module, spec, m) and not _refuted(prog, states, m)
        ]
        assert escaped == []

    @pytest.mark.parametrize("name", ACCEPTED_PROOFS)
    def test_dropped_premises_caught(self, programs, proofs, name):
        module, spec, bundle, _ = proofs[name]
        prog, states = programs[bundle.module_ref]
        escaped = [
            m.description
            for m in _dropped(bundle)
            if not _rejected(module, spec, m) and not _refuted(prog, states, m)
        ]
        assert escaped == []

    @pytest.mark.parametrize("name", ACCEPTED_PROOFS)
    def test_weakened_mid_conditions_caught(self, programs, proofs, name):
        module, spec, bundle, _ = proofs[name]
        prog, states = programs[bundle.module_ref]
        mutants = list(_weakened(bundle))
        assert mutants
        escaped = [m.description for m in mutants if not _rejected(module, spec, m) and not _refuted(prog, states, m)]
        assert escaped == []

    def test_good_set_proof_does_not_fit_bad_set(self):
        """MGood's derivation for `set`, moved onto MBad's body, fails at its first step."""
        _, spec, good = load_proof("m_good_s2.proof")
        bad_module, _, bad = load_proof("m_bad_s2.proof")
        body = bad_module.classes["Account"].method("set").body
        moved = {
            name: dataclasses.replace(
                good.nodes[name], conclusion=dataclasses.replace(good.nodes[name].conclusion, stmt=body)
            )
            for name in SET_NODES
        }
        s2 = dataclasses.replace(bad.nodes["s2"], premises=("buy", "transfer", "set"))
        bundle = dataclasses.replace(bad, nodes={**bad.nodes, **moved, "s2": s2}, opens={})

        report = check_module(bad_module, spec, bundle)

        assert not report.accepted
        assert report.open_obligations == []
        failed = {o.name: [d.message for d in o.diagnostics] for o in report.obligations if not o.accepted}
        assert list(failed) == ["set_eq"]
        assert "underlying triple not shown (no)" in failed["set_eq"]
