"""Effective settings and attack bounds."""

from pydantic import BaseModel, ConfigDict, Field

from loo_verifier.core.rules.defaults import (
    DEFAULT_EXTERNAL_CLASSES,
    DEFAULT_FUZZ_BUDGET,
    DEFAULT_GHOST_FUEL,
    DEFAULT_INSTANTIATION_CAP,
    DEFAULT_MAX_CALLBACK_STMTS,
    DEFAULT_MAX_DEPTH,
    DEFAULT_MAX_OBJECTS,
    DEFAULT_MAX_STMTS,
    DEFAULT_MONITOR_BUDGET,
    DEFAULT_RUN_BUDGET,
    DEFAULT_SOLVER_TIMEOUT_MS,
)


class VerifierSettings(BaseModel):
    """Limits shared by the interpreter, the monitor, the search and the logic."""

    model_config = ConfigDict(frozen=True)

    fuel: int = Field(default=DEFAULT_GHOST_FUEL, gt=0, description="Ghost unfoldings per expression")
    run_budget: int = Field(default=DEFAULT_RUN_BUDGET, gt=0)
    monitor_budget: int = Field(default=DEFAULT_MONITOR_BUDGET, gt=0)
    fuzz_budget: int = Field(default=DEFAULT_FUZZ_BUDGET, gt=0)
    instantiation_cap: int = Field(default=DEFAULT_INSTANTIATION_CAP, gt=0)
    solver_timeout_ms: int = Field(default=DEFAULT_SOLVER_TIMEOUT_MS, gt=0)
    deep: bool = Field(default=False, description="Check post and mid from every frame upward")

    def as_report_dict(self) -> dict[str, int]:
        return {
            "fuel": self.fuel,
            "run_budget": self.run_budget,
            "monitor_budget": self.monitor_budget,
            "fuzz_budget": self.fuzz_budget,
            "instantiation_cap": self.instantiation_cap,
            "solver_timeout_ms": self.solver_timeout_ms,
            "deep": int(self.deep),
        }


class AttackBounds(BaseModel):
    """Size bounds for the adversary enumeration."""

    model_config = ConfigDict(frozen=True)

    max_stmts: int = Field(default=DEFAULT_MAX_STMTS, ge=0, description="Driver statements")
    max_objects: int = Field(default=DEFAULT_MAX_OBJECTS, ge=0, description="Fresh objects")
    max_depth: int = Field(default=DEFAULT_MAX_DEPTH, ge=0, description="Attacker call depth")
    max_callback_stmts: int = Field(
        default=DEFAULT_MAX_CALLBACK_STMTS, ge=0, description="Statements per attacker callback body"
    )
    max_external_classes: int = Field(default=DEFAULT_EXTERNAL_CLASSES, ge=0, description="Attacker classes")

    @property
    def is_zero(self) -> bool:
        return self.max_stmts == 0
