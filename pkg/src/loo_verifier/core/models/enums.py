"""Enumerations for Loo domain models."""

from enum import Enum


class Privacy(str, Enum):
    """Method visibility."""

    PUBLIC = "public"
    PRIVATE = "private"


class StepKind(str, Enum):
    """Kind of a machine step, predicting the change of stack depth."""

    SAME = "same"
    CALL_ENTER = "call"
    RETURN = "return"

    @property
    def depth_delta(self) -> int:
        return {StepKind.SAME: 0, StepKind.CALL_ENTER: 1, StepKind.RETURN: -1}[self]


class StuckReason(str, Enum):
    """Why a state has no successor."""

    PRIVACY_FIELD_ACCESS = "PrivacyFieldAccess"
    PRIVATE_CALL_ACROSS_MODULES = "PrivateCallAcrossModules"
    ASSIGN_TO_FORMAL = "AssignToFormal"
    NULL_DEREF = "NullDeref"
    UNKNOWN_METHOD = "UnknownMethod"
    UNKNOWN_CLASS = "UnknownClass"
    NO_RES = "NoRes"
    UNBOUND_VARIABLE = "UnboundVariable"
    MISSING_FIELD = "MissingField"
    ARITY_MISMATCH = "ArityMismatch"
    PARAM_TYPE_MISMATCH = "ParamTypeMismatch"
    FIELD_TYPE_MISMATCH = "FieldTypeMismatch"
    EVAL_ERROR = "EvalError"
    TERMINATED = "Terminated"


class TraceStatus(str, Enum):
    """How a bounded scoped trace ended."""

    FINAL = "final"
    STUCK = "stuck"
    BUDGET_EXHAUSTED = "budget_exhausted"


class SatKind(str, Enum):
    """Outcome of evaluating an assertion in a state."""

    HOLDS = "holds"
    FAILS = "fails"
    DIVERGED = "diverged"
    ILL_FORMED = "ill_formed"


class Tri(str, Enum):
    """Three-valued answer used by the encapsulation judgment and the logic."""

    YES = "yes"
    NO = "no"
    UNKNOWN = "unknown"

    def __and__(self, other: "Tri") -> "Tri":
        if Tri.NO in (self, other):
            return Tri.NO
        if Tri.UNKNOWN in (self, other):
            return Tri.UNKNOWN
        return Tri.YES


class VerdictKind(str, Enum):
    """Dynamic monitor verdicts, ordered by severity."""

    VERIFIED = "verified"
    INCONCLUSIVE = "inconclusive"
    VIOLATED = "violated"

    @property
    def severity(self) -> int:
        return {VerdictKind.VERIFIED: 0, VerdictKind.INCONCLUSIVE: 1, VerdictKind.VIOLATED: 2}[self]


class Severity(str, Enum):
    """Diagnostic severity."""

    ERROR = "error"
    WARNING = "warning"
    INFO = "info"


class FileType(str, Enum):
    """Supported source file types."""

    MODULE = "loo"
    SPEC = "spec"
    SCENARIO = "scn"
    PROOF = "proof"
    UNKNOWN = "unknown"
