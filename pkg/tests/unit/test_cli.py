"""Tests for the command line interface."""

import itertools
import json

import pytest
from typer.testing import CliRunner

from loo_verifier import __version__
from loo_verifier.cli.app import app
from loo_verifier.core.rules.defaults import (
    EXIT_BUDGET,
    EXIT_DATA,
    EXIT_FAILED,
    EXIT_OK,
    EXIT_STUCK,
    EXIT_USAGE,
)
from loo_verifier.infrastructure.reports.json_report import read_json_report

runner = CliRunner()


@pytest.fixture
def files(corpus_file):
    """Corpus paths as strings, keyed by file name."""
    names = [
        "m_good.loo",
        "m_bad.loo",
        "client.loo",
        "shop.spec",
        "ill_formed.spec",
        "drain.scn",
        "meddle.scn",
        "purchase.scn",
        "m_bad_s2.proof",
    ]
    return {n: str(corpus_file(n)) for n in names}


class TestGlobalOptions:
    """Tests for the callback options."""

    def test_version(self):
        result = runner.invoke(app, ["--version"])
        assert result.exit_code == 0
        assert __version__ in result.stdout


class TestRunCommand:
    """Tests for `loo run`."""

    def test_terminates(self, files):
        result = runner.invoke(app, ["run", files["m_bad.loo"], files["drain.scn"]])
        assert result.exit_code == EXIT_OK
        assert "Terminated" in result.stdout

    def test_stuck(self, files):
        result = runner.invoke(app, ["run", files["m_good.loo"], files["meddle.scn"]])
        assert result.exit_code == EXIT_STUCK
        assert "PrivacyFieldAccess" in result.stdout

    def test_budget(self, files):
        result = runner.invoke(app, ["run", files["m_bad.loo"], files["drain.scn"], "--budget", "1"])
        assert result.exit_code == EXIT_BUDGET

    def test_budget_from_environment(self, files):
        result = runner.invoke(app, ["run", files["m_bad.loo"], files["drain.scn"]], env={"LOO_BUDGET": "1"})
        assert result.exit_code == EXIT_BUDGET

    def test_non_positive_budget(self, files):
        result = runner.invoke(app, ["run", files["m_bad.loo"], files["drain.scn"], "--budget", "0"])
        assert result.exit_code == EXIT_USAGE

    def test_unknown_scenario(self, files):
        result = runner.invoke(app, ["run", files["m_bad.loo"], files["drain.scn"], "-s", "nope"])
        assert result.exit_code == EXIT_USAGE

    def test_external_module(self, files):
        """The purchase scenario needs the client module linked in."""
        args = ["run", files["m_good.loo"], files["purchase.scn"], "-s", "purchase"]
        assert runner.invoke(app, args).exit_code == EXIT_DATA
        result = runner.invoke(app, [*args, "-e", files["client.loo"]])
        assert result.exit_code == EXIT_OK

    def test_json_report_and_trace(self, files, tmp_path):
        report_path = tmp_path / "run.json"
        trace_path = tmp_path / "run.jsonl"
        result = runner.invoke(
            app,
            ["run", files["m_bad.loo"], files["drain.scn"], "--json", str(report_path), "--trace", str(trace_path)],
        )
        assert result.exit_code == EXIT_OK
        report = read_json_report(report_path)
        assert report.command == "run"
        assert report.exit_code == EXIT_OK
        assert set(report.inputs) == {"m_bad.loo", "drain.scn"}
        assert report.trace
        lines = trace_path.read_text(encoding="utf-8").splitlines()
        assert len(lines) == len(report.trace)
        assert json.loads(lines[0])["index"] == 0

    def test_elapsed_time(self, files, tmp_path, mocker):
        """Elapsed time comes from the performance counter."""
        mocker.patch(
            "loo_verifier.cli.app.time.perf_counter",
            side_effect=itertools.chain([1.0], itertools.repeat(1.5)),
        )
        report_path = tmp_path / "run.json"
        runner.invoke(app, ["run", files["m_bad.loo"], files["drain.scn"], "--json", str(report_path)])
        assert read_json_report(report_path).elapsed_ms == 500.0


class TestMonitorCommand:
    """Tests for `loo monitor`."""

    def test_violation(self, files):
        result = runner.invoke(
            app, ["monitor", files["m_bad.loo"], files["shop.spec"], files["drain.scn"], "-c", "S2"]
        )
        assert result.exit_code == EXIT_FAILED
        assert "violated" in result.stdout

    def test_verified(self, files):
        result = runner.invoke(
            app, ["monitor", files["m_good.loo"], files["shop.spec"], files["drain.scn"], "-c", "S2"]
        )
        assert result.exit_code == EXIT_OK

    def test_unknown_conjunct(self, files):
        result = runner.invoke(
            app, ["monitor", files["m_good.loo"], files["shop.spec"], files["drain.scn"], "-c", "S99"]
        )
        assert result.exit_code == EXIT_USAGE

    def test_invalid_cap(self, files):
        result = runner.invoke(
            app, ["monitor", files["m_good.loo"], files["shop.spec"], files["drain.scn"], "--cap", "0"]
        )
        assert result.exit_code == EXIT_USAGE

    def test_ill_formed_spec(self, files):
        result = runner.invoke(app, ["monitor", files["m_good.loo"], files["ill_formed.spec"], files["drain.scn"]])
        assert result.exit_code == EXIT_DATA


class TestFuzzCommand:
    """Tests for `loo fuzz`."""

    SMALL = ["--max-stmts", "1", "--max-objects", "0", "--max-callback-stmts", "0"]

    def test_counterexample(self, files, tmp_path):
        report_path = tmp_path / "fuzz.json"
        result = runner.invoke(
            app,
            ["fuzz", files["m_bad.loo"], files["shop.spec"], files["drain.scn"], "-c", "S2", *self.SMALL,
             "--json", str(report_path)],
        )
        assert result.exit_code == EXIT_FAILED
        report = read_json_report(report_path)
        assert report.counterexample is not None
        assert report.counterexample.conjunct == "S2"

    def test_emit_counterexample(self, files, tmp_path):
        program = tmp_path / "attack.loo"
        result = runner.invoke(
            app,
            ["fuzz", files["m_bad.loo"], files["shop.spec"], files["drain.scn"], "-c", "S2", *self.SMALL,
             "--emit-cex", str(program)],
        )
        assert result.exit_code == EXIT_FAILED
        assert ".set(" in program.read_text(encoding="utf-8")

    def test_zero_statements_exhausted(self, files):
        result = runner.invoke(
            app,
            ["fuzz", files["m_bad.loo"], files["shop.spec"], files["drain.scn"], "-c", "S2", "--max-stmts", "0"],
        )
        assert result.exit_code == EXIT_OK
        assert "Exhausted" in result.stdout

    def test_negative_bound(self, files):
        result = runner.invoke(
            app, ["fuzz", files["m_bad.loo"], files["shop.spec"], files["drain.scn"], "--max-stmts", "-1"]
        )
        assert result.exit_code == EXIT_USAGE


class TestCheckCommand:
    """Tests for `loo check`."""

    @pytest.mark.slow
    def test_open_obligation_rejected(self, files, tmp_path):
        report_path = tmp_path / "check.json"
        result = runner.invoke(app, ["check", files["m_bad_s2.proof"], "--json", str(report_path)])
        assert result.exit_code == EXIT_FAILED
        assert "ERR_2" in result.stdout
        report = read_json_report(report_path)
        assert report.check is not None
        assert report.check.open_obligations == ["ERR_2"]
        assert {"m_bad_s2.proof", "m_bad.loo", "shop.spec"} == set(report.inputs)

    def test_missing_module(self, tmp_path):
        proof = tmp_path / "lost.proof"
        proof.write_text('bundle lost module "nowhere.loo" spec "shop.spec";\n', encoding="utf-8")
        result = runner.invoke(app, ["check", str(proof)])
        assert result.exit_code == EXIT_DATA


class TestFmtCommand:
    """Tests for `loo fmt`."""

    def test_canonical_output_is_canonical(self, files, tmp_path):
        result = runner.invoke(app, ["fmt", files["m_good.loo"]])
        assert result.exit_code == EXIT_OK
        canonical = tmp_path / "m_good.loo"
        canonical.write_text(result.stdout, encoding="utf-8")
        assert runner.invoke(app, ["fmt", "--check", str(canonical)]).exit_code == EXIT_OK

    def test_check_flags_messy_file(self, tmp_path):
        messy = tmp_path / "messy.loo"
        messy.write_text("module M {class C {field n: int;}}", encoding="utf-8")
        assert runner.invoke(app, ["fmt", "--check", str(messy)]).exit_code == EXIT_FAILED

    def test_proof_scripts_refused(self, files):
        assert runner.invoke(app, ["fmt", files["m_bad_s2.proof"]]).exit_code == EXIT_USAGE

    def test_syntax_error(self, tmp_path):
        broken = tmp_path / "broken.loo"
        broken.write_text("module {", encoding="utf-8")
        assert runner.invoke(app, ["fmt", str(broken)]).exit_code == EXIT_DATA


class TestInfoCommands:
    """Tests for `loo corpus`, `loo info` and `loo classify-spec`."""

    def test_corpus_listing(self):
        result = runner.invoke(app, ["corpus", "--kind", "proof"])
        assert result.exit_code == EXIT_OK
        assert "m_good_s2.proof" in result.stdout
        assert "m_good.loo" not in result.stdout

    def test_info_module(self, files):
        result = runner.invoke(app, ["info", files["m_good.loo"]])
        assert result.exit_code == EXIT_OK
        assert "Account" in result.stdout

    def test_info_proof(self, files):
        result = runner.invoke(app, ["info", files["m_bad_s2.proof"]])
        assert result.exit_code == EXIT_OK
        assert "m_bad.loo" in result.stdout

    def test_classify_spec(self, files):
        result = runner.invoke(app, ["classify-spec", files["m_good.loo"], files["shop.spec"]])
        assert result.exit_code == EXIT_OK
        assert "S2" in result.stdout

    def test_classify_ill_formed_spec(self, files):
        result = runner.invoke(app, ["classify-spec", files["m_good.loo"], files["ill_formed.spec"]])
        assert result.exit_code == EXIT_FAILED
