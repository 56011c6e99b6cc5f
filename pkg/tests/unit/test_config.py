"""Tests for verifier settings and attack bounds."""

import pytest
from pydantic import ValidationError

from loo_verifier.core.models.config import AttackBounds, VerifierSettings
from loo_verifier.core.rules.defaults import DEFAULT_GHOST_FUEL, DEFAULT_RUN_BUDGET


class TestVerifierSettings:
    """Tests for VerifierSettings."""

    def test_defaults(self):
        settings = VerifierSettings()
        assert settings.fuel == DEFAULT_GHOST_FUEL
        assert settings.run_budget == DEFAULT_RUN_BUDGET
        assert settings.deep is False

    @pytest.mark.parametrize("field", ["fuel", "run_budget", "monitor_budget", "fuzz_budget", "instantiation_cap"])
    def test_budgets_must_be_positive(self, field):
        with pytest.raises(ValidationError):
            VerifierSettings(**{field: 0})

    def test_frozen(self):
        settings = VerifierSettings()
        with pytest.raises(ValidationError):
            settings.fuel = 3

    def test_report_dict(self):
        report = VerifierSettings(run_budget=7, deep=True).as_report_dict()
        assert report["run_budget"] == 7
        assert report["deep"] == 1
        assert all(isinstance(v, int) for v in report.values())


class TestAttackBounds:
    """Tests for AttackBounds."""

    def test_zero_bounds_allowed(self):
        bounds = AttackBounds(max_stmts=0, max_objects=0, max_depth=0, max_callback_stmts=0)
        assert bounds.is_zero

    def test_negative_rejected(self):
        with pytest.raises(ValidationError):
            AttackBounds(max_objects=-1)

    def test_default_is_not_zero(self):
        assert not AttackBounds().is_zero
