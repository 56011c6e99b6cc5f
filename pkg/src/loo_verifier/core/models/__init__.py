"""Domain models: syntax, values, states, assertions, specifications, proofs and results."""

from loo_verifier.core.models.assertion import (
    AExpr,
    All,
    And,
    Assertion,
    External,
    HasClass,
    Not,
    Protected,
    ProtectedFrom,
)
from loo_verifier.core.models.config import AttackBounds, VerifierSettings
from loo_verifier.core.models.enums import (
    FileType,
    Privacy,
    SatKind,
    Severity,
    StepKind,
    StuckReason,
    TraceStatus,
    Tri,
    VerdictKind,
)
from loo_verifier.core.models.proof import (
    Assumption,
    ModuleJudgment,
    OpenGoal,
    ProofBundle,
    ProofNode,
    Quadruple,
    RuleName,
    SpecJudgment,
    Triple,
)
from loo_verifier.core.models.results import (
    CheckReport,
    Counterexample,
    Diagnostic,
    ObligationResult,
    Report,
    SatResult,
    TraceRecord,
    Verdict,
)
from loo_verifier.core.models.spec import MethodSpec, Scenario, ScopedInvariant, Spec
from loo_verifier.core.models.state import Frame, Obj, State, Stuck
from loo_verifier.core.models.syntax import ClassDef, MethodDef, ModuleDef
from loo_verifier.core.models.values import NULL, Address, BoolVal, IntVal, StrVal, Value

__all__ = [
    # Enums
    "FileType",
    "Privacy",
    "SatKind",
    "Severity",
    "StepKind",
    "StuckReason",
    "TraceStatus",
    "Tri",
    "VerdictKind",
    # Values and states
    "NULL",
    "Address",
    "BoolVal",
    "Frame",
    "IntVal",
    "Obj",
    "State",
    "StrVal",
    "Stuck",
    "Value",
    # Programs
    "ClassDef",
    "MethodDef",
    "ModuleDef",
    # Assertions and specifications
    "AExpr",
    "All",
    "And",
    "Assertion",
    "External",
    "HasClass",
    "MethodSpec",
    "Not",
    "Protected",
    "ProtectedFrom",
    "Scenario",
    "ScopedInvariant",
    "Spec",
    # Proofs
    "Assumption",
    "ModuleJudgment",
    "OpenGoal",
    "ProofBundle",
    "ProofNode",
    "Quadruple",
    "RuleName",
    "SpecJudgment",
    "Triple",
    # Results and settings
    "AttackBounds",
    "CheckReport",
    "Counterexample",
    "Diagnostic",
    "ObligationResult",
    "Report",
    "SatResult",
    "TraceRecord",
    "Verdict",
    "VerifierSettings",
]
