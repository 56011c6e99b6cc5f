"""Tests for protection, assertion satisfaction and ghost evaluation."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from loo_verifier.core.models.assertion import Protected, ProtectedFrom
from loo_verifier.core.models.enums import SatKind
from loo_verifier.core.models.state import Frame, Obj, State
from loo_verifier.core.models.syntax import RES, THIS, FieldAcc, GhostCall, Lit, Skip, Var
from loo_verifier.core.models.values import NULL, Address, IntVal
from loo_verifier.core.semantics.expressions import eval_expr
from loo_verifier.core.semantics.heap import interpret
from loo_verifier.core.semantics.machine import complete_state, run_to_completion
from loo_verifier.core.semantics.program import link
from loo_verifier.core.semantics.satisfaction import protected, protected_from, sat
from loo_verifier.core.semantics.scoped import is_external
from loo_verifier.core.semantics.stack import pop, restrict
from loo_verifier.corpus import load_module, load_scenario
from loo_verifier.infrastructure.parsers import parse_assertion

M_GHOST = load_module("m_ghost.loo")


@st.composite
def acyclic_ledgers(draw):
    """A bank whose ledger lists up to eight accounts once each, in random order.

    Returns the state (top frame binds `acc` to the queried account), the
    ledger entries as (account, balance) pairs, and the queried account.
    """
    balances = draw(st.lists(st.integers(min_value=-1000, max_value=1000), min_size=1, max_size=8))
    order = draw(st.permutations(range(len(balances))))
    accounts = [Address(10 + i) for i in range(len(balances))]
    entries = [(accounts[i], balances[i]) for i in order]
    heap = {Address(1): Obj("Object"), Address(2): Obj("Bank", {"ledger": Address(30)})}
    for acc in accounts:
        heap[acc] = Obj("Account", {"bank": Address(2), "key": NULL})
    for j, (acc, bal) in enumerate(entries):
        following = Address(31 + j) if j + 1 < len(entries) else NULL
        heap[Address(30 + j)] = Obj("Ledger", {"acc": acc, "bal": IntVal(bal), "next": following})
    queried = accounts[draw(st.integers(min_value=0, max_value=len(accounts) - 1))]
    state = State((Frame({THIS: Address(1), "acc": queried}, Skip()),), heap)
    return state, entries, queried


class TestProtectedFrom:
    """Tests for protection from a given object."""

    def test_other_key_is_protected(self, m_good, external_state):
        """The holder only reaches its own key."""
        assert protected_from(m_good, external_state, Address(3), Address(4))

    def test_held_key_is_not_protected(self, m_good, external_state):
        assert not protected_from(m_good, external_state, Address(5), Address(4))

    def test_internal_holder_does_not_count(self, m_good, external_state):
        """Only fields of external objects expose a value."""
        assert protected_from(m_good, external_state, Address(3), Address(2))

    def test_object_is_not_protected_from_itself(self, m_good, external_state):
        assert not protected_from(m_good, external_state, Address(4), Address(4))

    def test_scalars_and_null(self, m_good, external_state):
        """Anything is protected from a scalar; a scalar never is from an object."""
        assert protected_from(m_good, external_state, Address(5), IntVal(3))
        assert protected_from(m_good, external_state, Address(5), NULL)
        assert not protected_from(m_good, external_state, IntVal(3), Address(4))


class TestProtected:
    """Tests for protection in the current frame."""

    def test_unexposed_key(self, m_good, external_state):
        assert protected(m_good, external_state, Address(3))

    def test_key_in_external_field(self, m_good, external_state):
        assert not protected(m_good, external_state, Address(5))

    def test_key_in_external_local(self, m_good, external_state):
        """External code holding a key in a variable can use it."""
        assert not protected(m_good, external_state, Address(7))

    def test_key_in_internal_local(self, m_good, internal_state):
        """The same local is harmless when the receiver is internal."""
        assert protected(m_good, internal_state, Address(7))

    def test_null_and_scalars(self, m_good, external_state):
        assert not protected(m_good, external_state, NULL)
        assert protected(m_good, external_state, IntVal(1))


class TestSat:
    """Tests for satisfaction of parsed assertions."""

    def test_inside_field_path(self, m_good, external_state):
        result = sat(m_good, external_state, parse_assertion("inside acc.key"))
        assert result.holds

    def test_inside_local(self, m_good, external_state):
        result = sat(m_good, external_state, parse_assertion("inside k"))
        assert result.fails

    def test_protected_from(self, m_good, external_state):
        assert sat(m_good, external_state, parse_assertion("acc.key protectedFrom holder")).holds
        assert sat(m_good, external_state, parse_assertion("k protectedFrom holder")).holds

    def test_class_membership(self, m_good, external_state):
        assert sat(m_good, external_state, parse_assertion("acc : Account")).holds
        assert sat(m_good, external_state, parse_assertion("holder : Account")).fails

    def test_external(self, m_good, external_state):
        assert sat(m_good, external_state, parse_assertion("external holder")).holds
        assert sat(m_good, external_state, parse_assertion("external acc")).fails

    def test_connectives(self, m_good, external_state):
        assert sat(m_good, external_state, parse_assertion("inside acc.key /\\ !(inside k)")).holds
        assert sat(m_good, external_state, parse_assertion("inside k \\/ acc : Account")).holds
        assert sat(m_good, external_state, parse_assertion("inside k -> acc : Key")).holds

    def test_forall_over_class(self, m_good, external_state):
        """Quantifiers range over the objects of the class in the heap."""
        assert sat(m_good, external_state, parse_assertion("forall a:Account. a.blnce >= 0")).holds
        assert sat(m_good, external_state, parse_assertion("forall a:Account. a.blnce > 0")).fails

    def test_exists_over_class(self, m_good, external_state):
        assert sat(m_good, external_state, parse_assertion("exists a:Account. a.blnce == 10")).holds

    def test_unbound_variable_is_ill_formed(self, m_good, external_state):
        result = sat(m_good, external_state, parse_assertion("inside nowhere"))
        assert result.kind == SatKind.ILL_FORMED

    def test_null_field_is_not_inside(self, m_good, external_state):
        """A null key is never protected."""
        state = external_state.with_object(
            Address(2), external_state.heap[Address(2)].with_field("key", NULL)
        )
        assert sat(m_good, state, parse_assertion("inside acc.key")).fails


class TestGhosts:
    """Tests for ghost fields evaluated through the ledger."""

    def test_ledger_balances(self, m_ghost):
        """Balances are found by walking the ledger."""
        prog = link(m_ghost)
        state = complete_state(prog, load_scenario("ledger.scn").state)
        assert sat(m_ghost, state, parse_assertion("acc.balance == 70")).holds
        assert sat(m_ghost, state, parse_assertion("other.balance == 30")).holds

    def test_transfer_moves_ledger_entries(self, m_ghost):
        prog = link(m_ghost)
        start = complete_state(prog, load_scenario("ledger.scn").state)
        outcome = run_to_completion(prog, start)
        assert sat(m_ghost, outcome.final, parse_assertion("acc.balance == 50")).holds
        assert sat(m_ghost, outcome.final, parse_assertion("other.balance == 50")).holds

    def test_low_fuel_diverges(self, m_ghost):
        """A walk longer than the fuel is not decided."""
        prog = link(m_ghost)
        state = complete_state(prog, load_scenario("ledger.scn").state)
        result = sat(m_ghost, state, parse_assertion("other.balance == 30"), fuel=1)
        assert result.kind == SatKind.DIVERGED

    @settings(max_examples=500, deadline=None)
    @given(ledger=acyclic_ledgers())
    def test_ghost_balance_matches_direct_walk(self, ledger):
        """Unfolding `balance` agrees with reading the ledger entries directly."""
        state, entries, queried = ledger
        expected = sum(bal for acc, bal in entries if acc == queried)
        assert eval_expr(M_GHOST, state, GhostCall(Var("acc"), "balance")) == IntVal(expected)


class TestProtectionAcrossCalls:
    """Tests for protection of the shop's account and key as calls are made."""

    KEY, ACCOUNT, CLIENTS = Address(6), Address(4), Address(5)

    @pytest.mark.parametrize("depth", [1, 2])
    def test_key_not_inside_before_the_external_call(self, m_good, purchase_states, depth):
        """The shop's client list is reachable and holds the key."""
        state = purchase_states[depth - 1]
        assert not protected(m_good, state, self.KEY)
        assert sat(m_good, state, Protected(Lit(self.KEY))).fails

    def test_key_inside_during_the_external_call(self, m_good, purchase_states):
        state = purchase_states[2]
        assert protected(m_good, state, self.KEY)
        assert sat(m_good, state, Protected(Lit(self.KEY))).holds

    @pytest.mark.parametrize("depth", [1, 2])
    def test_account_inside_before_the_external_call(self, m_good, purchase_states, depth):
        state = purchase_states[depth - 1]
        assert protected(m_good, state, self.ACCOUNT)
        assert sat(m_good, state, Protected(Lit(self.ACCOUNT))).holds

    def test_account_not_inside_when_passed_to_the_buyer(self, m_good, purchase_states):
        """An argument of an external call is exposed to its receiver."""
        state = purchase_states[2]
        assert not protected(m_good, state, self.ACCOUNT)
        assert sat(m_good, state, Protected(Lit(self.ACCOUNT))).fails

    @pytest.mark.parametrize("depth", [1, 2, 3])
    def test_key_protected_from_account(self, m_good, purchase_states, depth):
        state = purchase_states[depth - 1]
        assert protected_from(m_good, state, self.KEY, self.ACCOUNT)
        assert sat(m_good, state, ProtectedFrom(Lit(self.KEY), Lit(self.ACCOUNT))).holds

    @pytest.mark.parametrize("depth", [1, 2, 3])
    def test_key_not_protected_from_client_list(self, m_good, purchase_states, depth):
        state = purchase_states[depth - 1]
        assert not protected_from(m_good, state, self.KEY, self.CLIENTS)
        assert sat(m_good, state, ProtectedFrom(Lit(self.KEY), Lit(self.CLIENTS))).fails

    def test_key_path_from_shop(self, purchase_states):
        for state in purchase_states:
            assert interpret(state, FieldAcc(FieldAcc(Lit(Address(1)), "accnt"), "key")) == self.KEY

    def test_restrict_recovers_caller_state(self, purchase_states):
        s1, s2, s3 = purchase_states
        assert restrict(s3, 2) == s2
        assert restrict(s3, 1) == s1
        assert s1.depth == 1 and s3.depth == 3

    def test_only_the_callee_state_is_external(self, m_good, purchase_states):
        assert [is_external(m_good, s) for s in purchase_states] == [False, False, True]

    def test_key_exposed_again_after_return(self, m_good, purchase_states):
        """Returning from `pay` brings the client list back into reach."""
        s3 = purchase_states[2]
        returned = pop(s3.with_top(s3.top.bind(RES, IntVal(0))))
        assert returned.depth == 2
        assert returned.lookup("tmp") == IntVal(0)
        assert not protected(m_good, returned, self.KEY)
