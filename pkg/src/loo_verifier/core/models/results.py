"""Result models: satisfaction outcomes, classifications, verdicts, diagnostics and reports."""

from __future__ import annotations

from dataclasses import dataclass

from pydantic import BaseModel, Field

from loo_verifier.core.models.enums import SatKind, Severity, Tri, VerdictKind


@dataclass(frozen=True, slots=True)
class SatResult:
    """Outcome of evaluating an assertion; classical on terminating ghost code."""

    kind: SatKind
    reason: str = ""

    @property
    def holds(self) -> bool:
        return self.kind == SatKind.HOLDS

    @property
    def fails(self) -> bool:
        return self.kind == SatKind.FAILS

    @property
    def decided(self) -> bool:
        return self.kind in (SatKind.HOLDS, SatKind.FAILS)

    @classmethod
    def of(cls, value: bool) -> SatResult:
        return HOLDS if value else FAILS

    def negate(self) -> SatResult:
        if self.kind == SatKind.HOLDS:
            return FAILS
        if self.kind == SatKind.FAILS:
            return HOLDS
        return self

    def __str__(self) -> str:
        return f"{self.kind.value} ({self.reason})" if self.reason else self.kind.value


HOLDS = SatResult(SatKind.HOLDS)
FAILS = SatResult(SatKind.FAILS)


@dataclass(frozen=True, slots=True)
class Classification:
    """Syntactic classes of an assertion: stable implies pos."""

    stable: bool
    pos: bool
    enc: Tri


class Diagnostic(BaseModel):
    """A problem found by a well-formedness pass or the proof checker."""

    code: str = Field(..., description="Stable identifier of the violated condition")
    message: str = Field(..., description="Human readable explanation")
    severity: Severity = Field(default=Severity.ERROR)
    location: str = Field(default="", description="line:column or derivation name")

    def __str__(self) -> str:
        where = f"[{self.location}] " if self.location else ""
        return f"{where}{self.code}: {self.message}"


class TraceRecord(BaseModel):
    """One step of a trace as written to reports and JSON-lines dumps."""

    index: int
    depth: int
    kind: str
    stmt: str
    external: bool = False
    heap_delta: dict[str, dict[str, str]] = Field(default_factory=dict)


class Verdict(BaseModel):
    """Outcome of a dynamic obligation. `bound` is the step budget that was used."""

    kind: VerdictKind
    bound: int = 0
    conjunct: str = ""
    reason: str = ""
    instantiation: dict[str, str] = Field(default_factory=dict)
    witness_index: int | None = None
    witness: list[TraceRecord] = Field(default_factory=list)
    steps: int = 0

    @property
    def is_violated(self) -> bool:
        return self.kind == VerdictKind.VIOLATED

    @property
    def is_verified(self) -> bool:
        return self.kind == VerdictKind.VERIFIED

    @classmethod
    def verified(cls, bound: int, reason: str = "", steps: int = 0) -> Verdict:
        return cls(kind=VerdictKind.VERIFIED, bound=bound, reason=reason, steps=steps)

    @classmethod
    def inconclusive(cls, bound: int, reason: str, steps: int = 0) -> Verdict:
        return cls(kind=VerdictKind.INCONCLUSIVE, bound=bound, reason=reason, steps=steps)

    @classmethod
    def combine(cls, verdicts: list[Verdict], bound: int = 0) -> Verdict:
        """Most severe verdict; ties keep the first, so the result is order-stable."""
        if not verdicts:
            return cls.verified(bound, "no obligations")
        worst = verdicts[0]
        for v in verdicts[1:]:
            if v.kind.severity > worst.kind.severity:
                worst = v
        return worst


class Counterexample(BaseModel):
    """Attack program that refutes a specification conjunct."""

    program: str = Field(..., description="Attacker module and driver statement, concrete syntax")
    conjunct: str
    instantiation: dict[str, str] = Field(default_factory=dict)
    verdict: Verdict
    candidate_index: int = Field(..., description="Position in the canonical enumeration")


class ObligationResult(BaseModel):
    """Proof-checker result for one derivation or goal."""

    name: str
    rule: str
    accepted: bool
    diagnostics: list[Diagnostic] = Field(default_factory=list)


class CheckReport(BaseModel):
    """Outcome of checking a proof bundle against a module and spec."""

    bundle: str
    accepted: bool
    obligations: list[ObligationResult] = Field(default_factory=list)
    open_obligations: list[str] = Field(default_factory=list)
    discharged_entailments: list[str] = Field(default_factory=list)
    trusted_assumptions: list[str] = Field(default_factory=list)
    diagnostics: list[Diagnostic] = Field(default_factory=list)


class Report(BaseModel):
    """Machine-readable report written by every CLI command."""

    tool_version: str
    command: str
    inputs: dict[str, str] = Field(default_factory=dict, description="file name -> sha256")
    settings: dict[str, int] = Field(default_factory=dict)
    exit_code: int = 0
    verdicts: list[Verdict] = Field(default_factory=list)
    diagnostics: list[Diagnostic] = Field(default_factory=list)
    counterexample: Counterexample | None = None
    check: CheckReport | None = None
    trace: list[TraceRecord] = Field(default_factory=list)
    notes: list[str] = Field(default_factory=list)
    elapsed_ms: float = 0.0
