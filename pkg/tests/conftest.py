"""Pytest configuration and fixtures."""

from pathlib import Path

import pytest

from loo_verifier.core.models.spec import Scenario, Spec
from loo_verifier.core.models.state import Frame, Obj, State
from loo_verifier.core.models.syntax import DISCARD, THIS, Call, ModuleDef, Skip, Var
from loo_verifier.core.models.values import NULL, Address, IntVal, StrVal
from loo_verifier.core.semantics.program import LinkedProgram, link
from loo_verifier.core.semantics.stack import push
from loo_verifier.corpus import corpus_path, load_module, load_scenario, load_spec


@pytest.fixture
def m_good() -> ModuleDef:
    """MGood: `set` only installs a key when none is set."""
    return load_module("m_good.loo")


@pytest.fixture
def m_bad() -> ModuleDef:
    """MBad: `set` overwrites the key unconditionally."""
    return load_module("m_bad.loo")


@pytest.fixture
def m_fine() -> ModuleDef:
    return load_module("m_fine.loo")


@pytest.fixture
def m_ghost() -> ModuleDef:
    """Ledger-backed accounts with a ghost balance."""
    return load_module("m_ghost.loo")


@pytest.fixture
def client() -> ModuleDef:
    return load_module("client.loo")


@pytest.fixture
def shop_spec() -> Spec:
    return load_spec("shop.spec")


@pytest.fixture
def drain() -> Scenario:
    return load_scenario("drain.scn")


@pytest.fixture
def good_prog(m_good: ModuleDef) -> LinkedProgram:
    return link(m_good)


@pytest.fixture
def bad_prog(m_bad: ModuleDef) -> LinkedProgram:
    return link(m_bad)


@pytest.fixture
def corpus_file():
    """Look up a shipped file by name."""

    def _lookup(name: str) -> Path:
        return corpus_path(name)

    return _lookup


# ============================================================
# Hand-built states for the protection checks
# ============================================================
#
# o1 external driver, o2 account with key o3, o4 external holder of key o5,
# o6 account whose key o7 sits in a local of the top frame.


def _protection_heap() -> dict[Address, Obj]:
    return {
        Address(1): Obj("Object"),
        Address(2): Obj("Account", {"blnce": IntVal(10), "key": Address(3)}),
        Address(3): Obj("Key"),
        Address(4): Obj("Object", {"secret": Address(5)}),
        Address(5): Obj("Key"),
        Address(6): Obj("Account", {"blnce": IntVal(0), "key": Address(7)}),
        Address(7): Obj("Key"),
    }


@pytest.fixture
def external_state() -> State:
    """Top frame runs in external o1 and holds o7 in a local."""
    frame = Frame(
        {"this": Address(1), "acc": Address(2), "holder": Address(4), "k": Address(7)},
        Skip(),
    )
    return State((frame,), _protection_heap())


@pytest.fixture
def internal_state() -> State:
    """Same heap, but the top frame runs in account o6 and holds its own key."""
    frame = Frame({"this": Address(6), "k": Address(7)}, Skip())
    return State((frame,), _protection_heap())


# ============================================================
# A purchase in progress
# ============================================================
#
# o1 shop with account o4, inventory o2 and client list o5; o4's key is o6.
# o5 is an external object that holds o6, o7 the external buyer. The three
# states are: the shop about to run `buy` (1), inside `buy` at the call to
# `buyer.pay` (2), and inside `pay` with the account as argument (3).


def _purchase_heap() -> dict[Address, Obj]:
    return {
        Address(1): Obj("Shop", {"accnt": Address(4), "invntry": Address(2), "clients": Address(5)}),
        Address(2): Obj("Inventory", {"count": IntVal(3)}),
        Address(3): Obj("Item", {"price": IntVal(10)}),
        Address(4): Obj("Account", {"blnce": IntVal(100), "key": Address(6)}),
        Address(5): Obj("Buyer", {"wallet": NULL, "secret": Address(6), "inbox": StrVal("")}),
        Address(6): Obj("Key"),
        Address(7): Obj("Buyer", {"wallet": NULL, "secret": NULL, "inbox": StrVal("")}),
    }


@pytest.fixture
def purchase_states() -> tuple[State, State, State]:
    """Shop before `buy`, during `buy`, and during the external `pay`."""
    shop, buyer, item, account = Address(1), Address(7), Address(3), Address(4)
    before = Frame(
        {THIS: shop, "buyer": buyer, "anItem": item},
        Call(DISCARD, THIS, "buy", (Var("buyer"), Var("anItem"))),
    )
    s1 = State((before,), _purchase_heap())
    during_buy = Frame(
        {THIS: shop, "buyer": buyer, "anItem": item, "price": IntVal(10), "myAccnt": account},
        Call("tmp", "buyer", "pay", (Var("myAccnt"), Var("price"))),
        (THIS, "buyer", "anItem"),
    )
    s2 = push(s1, during_buy)
    during_pay = Frame({THIS: buyer, "acc": account, "amt": IntVal(10)}, Skip(), (THIS, "acc", "amt"))
    s3 = push(s2, during_pay)
    return s1, s2, s3
