"""Tests for the module, specification, scenario and proof parsers."""

from pathlib import Path

import pytest

from loo_verifier.core.models.assertion import All, And, HasClass, Not, Protected, ProtectedFrom
from loo_verifier.core.models.enums import FileType
from loo_verifier.core.models.spec import MethodSpec, ScopedInvariant
from loo_verifier.core.models.syntax import Call, FieldWrite, If, New, Var, flatten
from loo_verifier.core.models.values import Address, IntVal
from loo_verifier.corpus import list_corpus, load_spec
from loo_verifier.infrastructure.parsers import (
    detect_file_type,
    parse_assertion,
    parse_module,
    parse_module_file,
    parse_scenario_file,
    parse_scenarios,
    parse_spec,
    parse_spec_file,
    read_proof_header,
)
from loo_verifier.shared.exceptions import DuplicateDefinitionError, LooSyntaxError, UnsupportedFileError
from loo_verifier.shared.formatters import format_module, format_scenario, format_spec


class TestDetectFileType:
    """Tests for file type detection."""

    def test_known_suffixes(self):
        assert detect_file_type(Path("m.loo")) == FileType.MODULE
        assert detect_file_type(Path("s.spec")) == FileType.SPEC
        assert detect_file_type(Path("x.scn")) == FileType.SCENARIO
        assert detect_file_type(Path("p.proof")) == FileType.PROOF

    def test_unknown_suffix(self):
        with pytest.raises(UnsupportedFileError):
            detect_file_type(Path("notes.txt"))


class TestModuleParser:
    """Tests for `.loo` modules."""

    def test_shop_module(self, m_good):
        assert m_good.name == "MGood"
        assert set(m_good.classes) == {"Shop", "Account", "Key", "Item", "Inventory"}
        send = m_good.classes["Shop"].method("send")
        assert send is not None and not send.is_public

    def test_primed_identifiers(self, m_good):
        transfer = m_good.classes["Account"].method("transfer")
        assert [p.name for p in transfer.params] == ["dest", "key'", "amt"]
        assert [p.type for p in transfer.params] == ["Account", "Key", "nat"]

    def test_statements(self):
        module = parse_module(
            """
            module M {
              class C {
                field n: int;
                public method m(d: C): int {
                  local x: C;
                  x := new C;
                  this.n += 1;
                  if this.n > 2 { res := 1 } else { res := 0 }
                  d.m(x)
                }
              }
            }
            """
        )
        stmts = flatten(module.classes["C"].method("m").body)
        assert isinstance(stmts[0], New)
        assert isinstance(stmts[1], FieldWrite)
        assert isinstance(stmts[2], If)
        assert isinstance(stmts[3], Call)
        assert stmts[3].receiver == "d"

    def test_ghost_fields(self, m_ghost):
        ledger = m_ghost.classes["Ledger"]
        assert ledger.ghost("balance") is not None

    def test_syntax_error_location(self):
        with pytest.raises(LooSyntaxError) as exc_info:
            parse_module("module M {\n  class C {\n    field : int;\n  }\n}", "bad.loo")
        assert exc_info.value.line == 3
        assert exc_info.value.source == "bad.loo"

    def test_duplicate_class(self):
        with pytest.raises(DuplicateDefinitionError):
            parse_module("module M { class C { } class C { } }")


class TestAssertionParser:
    """Tests for assertion syntax."""

    def test_inside(self):
        assert parse_assertion("inside a.key") == parse_assertion("protected a.key")
        assert isinstance(parse_assertion("inside k"), Protected)

    def test_protected_from(self):
        assertion = parse_assertion("k protectedFrom b")
        assert assertion == ProtectedFrom(Var("k"), Var("b"))

    def test_protected_from_set(self):
        assertion = parse_assertion("k protectedFrom {a, b}")
        assert isinstance(assertion, And)

    def test_class_membership(self):
        assert parse_assertion("a : Account") == HasClass(Var("a"), "Account")

    def test_forall(self):
        assertion = parse_assertion("forall x:Account. x.blnce >= 0")
        assert isinstance(assertion, All)
        assert assertion.var == "x"

    def test_implication_is_derived(self):
        """Implication is sugar over negation and conjunction."""
        assert isinstance(parse_assertion("a == b -> inside a"), Not)

    def test_trailing_text_rejected(self):
        with pytest.raises(LooSyntaxError):
            parse_assertion("inside a inside b")


class TestSpecParser:
    """Tests for `.spec` files."""

    def test_shop_spec(self, shop_spec):
        assert {"S1", "S2", "S3", "S4", "S2a"} <= set(shop_spec.names)
        assert isinstance(shop_spec.get("S2"), ScopedInvariant)
        s4 = shop_spec.get("S4")
        assert isinstance(s4, MethodSpec)
        assert (s4.cls, s4.method) == ("Shop", "buy")

    def test_groups(self, shop_spec):
        names = [c.name for c in shop_spec.resolve("S2strong")]
        assert names == ["S2", "S2a", "S2b"]

    def test_select_unknown_is_empty(self, shop_spec):
        assert shop_spec.resolve("S99") == ()

    def test_duplicate_conjunct(self):
        with pytest.raises(DuplicateDefinitionError):
            parse_spec("invariant A(a: Account) { inside a }\ninvariant A(a: Account) { inside a }")

    def test_parse_only_text(self):
        """The case-study specifications parse although no module implements them."""
        assert load_spec("case_studies.spec").conjuncts


class TestScenarioParser:
    """Tests for `.scn` files."""

    def test_drain(self, drain):
        assert drain.name == "drain"
        assert drain.state.depth == 1
        assert drain.state.heap[Address(2)].fields["blnce"] == IntVal(1000)
        assert drain.state.lookup("rogue") == Address(4)

    def test_frame_needs_this(self):
        with pytest.raises(LooSyntaxError):
            parse_scenarios("scenario s { heap { o1: Object; } frame x = o1; run { skip } }")

    def test_undeclared_object(self):
        with pytest.raises(LooSyntaxError):
            parse_scenarios("scenario s { heap { o1: Object; } frame this = o2; run { skip } }")


class TestProofHeader:
    """Tests for reading the header of a proof script."""

    def test_header(self, corpus_file):
        text = corpus_file("m_good_s2.proof").read_text(encoding="utf-8")
        name, module_ref, spec_ref = read_proof_header(text)
        assert name == "m_good_s2"
        assert module_ref == "m_good.loo"
        assert spec_ref == "shop.spec"


class TestFormatting:
    """Tests for canonical printing."""

    def test_module_printing_is_stable(self, m_bad):
        """Printing a reparsed module gives the same text."""
        text = format_module(m_bad)
        assert format_module(parse_module(text)) == text

    def test_spec_printing_is_stable(self, shop_spec):
        text = format_spec(shop_spec)
        assert format_spec(parse_spec(text)) == text

    @pytest.mark.parametrize("path", [p for _, p in list_corpus(FileType.MODULE)], ids=lambda p: p.name)
    def test_module_round_trip(self, path):
        parsed = parse_module_file(path)
        assert parse_module(format_module(parsed)) == parsed

    @pytest.mark.parametrize("path", [p for _, p in list_corpus(FileType.SPEC)], ids=lambda p: p.name)
    def test_spec_round_trip(self, path):
        parsed = parse_spec_file(path)
        assert parse_spec(format_spec(parsed)) == parsed

    @pytest.mark.parametrize("path", [p for _, p in list_corpus(FileType.SCENARIO)], ids=lambda p: p.name)
    def test_scenario_round_trip(self, path):
        for scenario in parse_scenario_file(path):
            assert parse_scenarios(format_scenario(scenario)) == (scenario,)
