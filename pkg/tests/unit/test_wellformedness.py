"""Tests for module and specification well-formedness."""

import pytest

from loo_verifier.core.analyzers import wf_module_syntax, wf_spec
from loo_verifier.core.models.enums import FileType, Severity
from loo_verifier.corpus import PARSE_ONLY, list_corpus, load_module, load_spec
from loo_verifier.infrastructure.parsers import parse_module, parse_spec


def _codes(diagnostics) -> set[str]:
    return {d.code for d in diagnostics if d.severity == Severity.ERROR}


class TestModuleWellFormedness:
    """Tests for static checks of modules."""

    @pytest.mark.parametrize("path", [p for _, p in list_corpus(FileType.MODULE)], ids=lambda p: p.name)
    def test_corpus_modules(self, path):
        assert _codes(wf_module_syntax(load_module(path.name))) == set()

    def test_unknown_field(self):
        module = parse_module(
            """
            module M {
              class C {
                field n: int;
                public method m(): int {
                  this.count := 1;
                  res := 0
                }
              }
            }
            """
        )
        assert "WF_UNKNOWN_FIELD" in _codes(wf_module_syntax(module))

    def test_missing_res(self):
        module = parse_module(
            """
            module M {
              class C {
                public method m(): int {
                  skip
                }
              }
            }
            """
        )
        assert "WF_NO_RES" in _codes(wf_module_syntax(module))

    def test_assign_formal(self):
        module = parse_module(
            """
            module M {
              class C {
                public method m(d: C): int {
                  d := this;
                  res := 0
                }
              }
            }
            """
        )
        assert "WF_ASSIGN_FORMAL" in _codes(wf_module_syntax(module))

    def test_unknown_type(self):
        module = parse_module("module M { class C { field f: Ghost; } }")
        assert "WF_UNKNOWN_TYPE" in _codes(wf_module_syntax(module))


class TestSpecWellFormedness:
    """Tests for static checks of specifications."""

    def test_shop_spec(self, m_good, m_bad):
        spec = load_spec("shop.spec")
        assert _codes(wf_spec(m_good, spec)) == set()
        assert _codes(wf_spec(m_bad, spec)) == set()

    def test_set_keys_spec(self, m_good):
        assert _codes(wf_spec(m_good, load_spec("set_keys.spec"))) == set()

    def test_ill_formed_spec(self, m_good):
        codes = _codes(wf_spec(m_good, load_spec("ill_formed.spec")))
        assert "SPEC_FREE_VARIABLE" in codes

    def test_protected_from_invariant_rejected(self, m_good):
        """Invariants must be encapsulated."""
        spec = parse_spec("invariant Leak(a: Account, b: Key) { a.key protectedFrom b }")
        assert "SPEC_NOT_ENCAPSULATED" in _codes(wf_spec(m_good, spec))

    def test_unknown_method(self, m_good):
        spec = parse_spec(
            "method X(a: Account) { pre: inside a } public Account::drain(k: Key) { post: inside a }"
        )
        assert "SPEC_UNKNOWN_METHOD" in _codes(wf_spec(m_good, spec))

    def test_parse_only_texts_are_listed(self):
        assert "case_studies.spec" in PARSE_ONLY
