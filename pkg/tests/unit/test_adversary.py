"""Tests for bounded attack enumeration and search."""

import pytest

from loo_verifier.core.analyzers.adversary import (
    AttackProgram,
    AttackSchema,
    Exhausted,
    attack_search,
    enters_attacker,
    enumerate_attacks,
    replay_attack,
    run_attack,
)
from loo_verifier.core.models.config import AttackBounds
from loo_verifier.core.models.results import Counterexample
from loo_verifier.core.models.syntax import DISCARD, SKIP, Call, Lit, New, Var, seq
from loo_verifier.core.models.values import NULL, Address, IntVal
from loo_verifier.infrastructure.parsers import parse_module, parse_scenarios, parse_spec

ONE_CALL = AttackBounds(max_stmts=1, max_objects=0, max_depth=1, max_callback_stmts=0, max_external_classes=0)

BOXES = parse_module(
    """
module Boxes {
  class Box {
    public method poke(other: Box): int {
      res := 0
    }
  }
}
"""
)

(TWO_BOXES,) = parse_scenarios(
    """
scenario pair {
  heap {
    o1: Object;
    o2: Box;
    o3: Box;
  }
  frame this = o1, x = o2, y = o3;
  run {
    x.poke(y)
  }
}
"""
)

# A shop wired to an account, so `buy` reaches the buyer's callbacks
(STOREFRONT,) = parse_scenarios(
    """
scenario storefront {
  heap {
    o1: Object;
    o2: Shop { accnt = o3; invntry = o5 };
    o3: Account { blnce = 0; key = o4 };
    o4: Key;
    o5: Inventory { count = 5 };
    o6: Item { price = 10 };
  }
  frame this = o1, shop = o2, item = o6;
  run {
    shop.buy(this, item)
  }
}
"""
)

FUNDS = parse_spec(
    """
invariant Funds(a: Account, b: int) {
  a.blnce >= b
}
"""
)

CALLBACKS = AttackBounds(max_stmts=2, max_objects=1, max_depth=1, max_callback_stmts=1, max_external_classes=1)


class TestEnumeration:
    """Tests for the canonical candidate order."""

    def test_zero_bounds_only_empty_driver(self, m_bad, drain):
        """Without statements the only candidate does nothing."""
        schema = AttackSchema(m_bad, drain, AttackBounds(max_stmts=0))
        attacks = list(enumerate_attacks(schema))
        assert len(attacks) == 1

    def test_order_is_deterministic(self, m_bad, drain):
        schema = AttackSchema(m_bad, drain, ONE_CALL)
        first = [a.text() for a in enumerate_attacks(schema)]
        second = [a.text() for a in enumerate_attacks(schema)]
        assert first == second
        assert len(first) > 1

    def test_only_public_methods_called(self, m_bad, drain):
        """Private methods would only give stuck runs."""
        schema = AttackSchema(m_bad, drain, ONE_CALL)
        texts = [a.text() for a in enumerate_attacks(schema)]
        assert any("acc.set(" in t for t in texts)
        assert not any(".send(" in t for t in texts)

    def test_integer_pool_includes_seed(self, m_bad, drain):
        schema = AttackSchema(m_bad, drain)
        assert 1000 in schema.integers()
        assert 0 in schema.integers()

    def test_no_attacker_class_without_external_classes(self, m_bad, drain):
        assert AttackSchema(m_bad, drain, ONE_CALL).attacker_classes == ()

    def test_single_statement_grammar(self):
        """Empty driver, then two receivers times two variables or null."""
        schema = AttackSchema(BOXES, TWO_BOXES, ONE_CALL)
        drivers = [a.driver for a in enumerate_attacks(schema)]
        assert len(drivers) == 7
        assert drivers[0] == SKIP
        assert drivers[1:] == [
            Call(DISCARD, receiver, "poke", (arg,))
            for receiver in ("x", "y")
            for arg in (Var("x"), Var("y"), Lit(NULL))
        ]

    def test_single_statement_grammar_without_null(self):
        schema = AttackSchema(BOXES, TWO_BOXES, ONE_CALL, null_arguments=False)
        assert len(list(enumerate_attacks(schema))) == 5

    def test_unused_object_is_not_a_candidate(self):
        """A lone `new` is never used afterwards, so the count does not change."""
        bounds = ONE_CALL.model_copy(update={"max_objects": 1})
        schema = AttackSchema(BOXES, TWO_BOXES, bounds)
        assert len(list(enumerate_attacks(schema))) == 7

    def test_numbered_attacker_classes(self, m_bad, drain):
        schema = AttackSchema(m_bad, drain, AttackBounds(max_external_classes=2))
        assert schema.attacker_classes == ("Attacker", "Attacker_2")

    def test_every_attacker_class_answers_callbacks(self, m_good):
        bounds = CALLBACKS.model_copy(update={"max_external_classes": 2})
        schema = AttackSchema(m_good, STOREFRONT, bounds)
        attackers = []
        for attack in enumerate_attacks(schema):
            if attack.attacker not in attackers:
                attackers.append(attack.attacker)
        assert len(attackers) == 4
        for module in attackers:
            assert set(module.classes) == {"Attacker", "Attacker_2"}
            for cdef in module.classes.values():
                assert {m.name for m in cdef.methods} == {"pay", "tell"}


class TestSearch:
    """Tests for searching for a counterexample."""

    def test_zero_bounds_exhausted(self, m_bad, shop_spec, drain):
        schema = AttackSchema(m_bad, drain, AttackBounds(max_stmts=0))
        result = attack_search(m_bad, shop_spec.select(["S2"]), schema)
        assert isinstance(result, Exhausted)
        assert result.candidates == 1

    def test_bad_module_refuted(self, m_bad, shop_spec, drain):
        """A single call replacing the key breaks S2."""
        schema = AttackSchema(m_bad, drain, ONE_CALL)
        result = attack_search(m_bad, shop_spec.select(["S2"]), schema)
        assert isinstance(result, Counterexample)
        assert result.conjunct == "S2"
        assert result.verdict.is_violated
        assert ".set(" in result.program

    def test_good_module_survives(self, m_good, shop_spec, drain):
        schema = AttackSchema(m_good, drain, ONE_CALL)
        result = attack_search(m_good, shop_spec.select(["S2"]), schema)
        assert isinstance(result, Exhausted)
        assert result.candidates > 1

    def test_counterexample_replays(self, m_bad, shop_spec, drain):
        """The reported candidate violates the conjunct again when replayed."""
        schema = AttackSchema(m_bad, drain, ONE_CALL)
        spec = shop_spec.select(["S2"])
        result = attack_search(m_bad, spec, schema)
        assert isinstance(result, Counterexample)
        attack = list(enumerate_attacks(schema))[result.candidate_index]
        verdicts = replay_attack(m_bad, spec, drain, attack)
        assert any(v.is_violated for v in verdicts)

    def test_resume_past_counterexample(self, m_bad, shop_spec, drain):
        """Starting after a counterexample finds a later one or exhausts."""
        schema = AttackSchema(m_bad, drain, ONE_CALL)
        spec = shop_spec.select(["S2"])
        first = attack_search(m_bad, spec, schema)
        assert isinstance(first, Counterexample)
        later = attack_search(m_bad, spec, schema, start=first.candidate_index + 1)
        if isinstance(later, Counterexample):
            assert later.candidate_index > first.candidate_index

    def test_default_bounds_rediscover_drain(self, m_bad, drain):
        """Taking the account over with a fresh key, then moving the whole balance away."""
        schema = AttackSchema(m_bad, drain, AttackBounds(), int_literals=(1000,), null_arguments=False)
        result = attack_search(m_bad, FUNDS, schema)
        assert isinstance(result, Counterexample)
        assert result.conjunct == "Funds"
        expected = seq(
            New("x1", "Key"),
            Call(DISCARD, "acc", "set", (Var("x1"),)),
            Call(DISCARD, "acc", "transfer", (Var("rogue"), Var("x1"), Lit(IntVal(1000)))),
        )
        assert result.program.endswith(AttackProgram(None, expected).text())
        outcome = run_attack(m_bad, drain, AttackProgram(None, expected), 1000)
        before = drain.state.heap[Address(2)].fields["blnce"]
        after = outcome.final.heap[Address(2)].fields["blnce"]
        assert before == IntVal(1000)
        assert after == IntVal(0)
        assert outcome.final.heap[Address(4)].fields["blnce"] == IntVal(1000)


class TestPruning:
    """Tests for skipping candidates equivalent to ones already tried."""

    def test_callbacks_reached_through_buy(self, m_good):
        driver = seq(New("x1", "Attacker"), Call(DISCARD, "shop", "buy", (Var("x1"), Var("item"))))
        schema = AttackSchema(m_good, STOREFRONT, CALLBACKS)
        attack = next(a for a in enumerate_attacks(schema) if a.driver == driver)
        assert enters_attacker(run_attack(m_good, STOREFRONT, attack, 1000), schema.attacker_classes)

    def test_stuck_buy_never_reaches_callbacks(self, m_good):
        driver = seq(New("x1", "Attacker"), Call(DISCARD, "shop", "buy", (Var("x1"), Lit(NULL))))
        schema = AttackSchema(m_good, STOREFRONT, CALLBACKS)
        attack = next(a for a in enumerate_attacks(schema) if a.driver == driver)
        assert not enters_attacker(run_attack(m_good, STOREFRONT, attack, 1000), schema.attacker_classes)

    def test_pruning_tries_fewer_candidates(self, m_good, shop_spec):
        spec = shop_spec.select(["S2"])
        pruned = attack_search(m_good, spec, AttackSchema(m_good, STOREFRONT, CALLBACKS))
        plain = attack_search(m_good, spec, AttackSchema(m_good, STOREFRONT, CALLBACKS, prune=False))
        assert isinstance(pruned, Exhausted)
        assert isinstance(plain, Exhausted)
        assert plain.pruned == 0
        assert pruned.pruned > 0
        assert pruned.candidates < plain.candidates

    def test_pruning_keeps_first_counterexample(self, m_bad, drain):
        """Cut prefixes never hide a violation found by the unpruned search."""
        schema = AttackSchema(m_bad, drain, AttackBounds(), int_literals=(1000,), null_arguments=False)
        pruned = attack_search(m_bad, FUNDS, schema)
        plain = attack_search(m_bad, FUNDS, AttackSchema(m_bad, drain, AttackBounds(), (1000,), False, prune=False))
        assert isinstance(pruned, Counterexample)
        assert isinstance(plain, Counterexample)
        assert pruned.program == plain.program

    @pytest.mark.slow
    @pytest.mark.parametrize("module_name", ["m_good", "m_fine"])
    def test_exhaustive_search_finds_no_leak(self, module_name, shop_spec, drain, request):
        module = request.getfixturevalue(module_name)
        bounds = AttackBounds(max_stmts=4, max_objects=2, max_depth=2, max_callback_stmts=2)
        result = attack_search(module, shop_spec.select(["S2", "S3"]), AttackSchema(module, drain, bounds))
        assert isinstance(result, Exhausted)
        assert result.pruned > 0
