"""Tests for the shipped corpus."""

import pytest

from loo_verifier.core.models.enums import FileType
from loo_verifier.corpus import (
    corpus_path,
    list_corpus,
    load_bundle,
    load_scenario,
    load_scenarios,
    resolve_reference,
)


class TestCorpusFiles:
    """Tests for locating shipped files."""

    def test_listing_by_kind(self):
        names = [p.name for _, p in list_corpus(FileType.SCENARIO)]
        assert names == ["drain.scn", "ledger.scn", "meddle.scn", "purchase.scn"]

    def test_listing_everything(self):
        kinds = {kind for kind, _ in list_corpus()}
        assert kinds == {FileType.MODULE, FileType.SPEC, FileType.SCENARIO, FileType.PROOF}

    def test_unknown_file(self):
        with pytest.raises(FileNotFoundError):
            corpus_path("m_missing.loo")

    def test_reference_prefers_neighbour(self, tmp_path):
        local = tmp_path / "m_good.loo"
        local.write_text("module Local { }", encoding="utf-8")
        assert resolve_reference("m_good.loo", tmp_path) == local
        assert resolve_reference("m_good.loo") == corpus_path("m_good.loo")


class TestCorpusLoading:
    """Tests for the loaders."""

    def test_named_scenario(self):
        assert load_scenario("purchase.scn", "unpaid").name == "unpaid"
        assert load_scenario("purchase.scn").name == "purchase"
        assert len(load_scenarios("purchase.scn")) == 2

    def test_unknown_scenario(self):
        with pytest.raises(KeyError):
            load_scenario("drain.scn", "refund")

    def test_bundle_header(self):
        module, spec, bundle = load_bundle(corpus_path("m_bad_s2.proof"))
        assert module.name == "MBad"
        assert "S2" in spec.names
        assert bundle.name == "m_bad_s2"
