"""Proof scripts: judgments, derivation nodes and bundles."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field
from enum import Enum
from typing import TypeAlias

from loo_verifier.core.models.assertion import Assertion
from loo_verifier.core.models.syntax import NO_SPAN, SourceSpan, Stmt


class RuleName(str, Enum):
    """Inference rules understood by the checker."""

    EMBED_UL = "Embed_UL"
    PROT_NEW = "Prot-New"
    PROT_1 = "Prot-1"
    PROT_2 = "Prot-2"
    PROT_3 = "Prot-3"
    PROT_4 = "Prot-4"
    TYPES_1 = "Types-1"
    TYPES_2 = "Types-2"
    MID = "Mid"
    COMBINE = "Combine"
    SEQU = "Sequ"
    CONSEQU = "Consequ"
    IF_RULE = "If_Rule"
    ABSURD = "Absurd"
    CASES = "Cases"
    CALL_INT = "Call_Int"
    CALL_EXT_ADAPT = "Call_Ext_Adapt"
    CALL_EXT_ADAPT_STRONG = "Call_Ext_Adapt_Strong"
    METHOD = "Method"
    INVARIANT = "Invariant"
    WELLFRM_MOD = "WellFrm_Mod"
    COMB_SPEC = "Comb_Spec"


TRIPLE_RULES = frozenset(
    {
        RuleName.EMBED_UL,
        RuleName.PROT_NEW,
        RuleName.PROT_1,
        RuleName.PROT_2,
        RuleName.PROT_3,
        RuleName.PROT_4,
        RuleName.TYPES_1,
        RuleName.TYPES_2,
    }
)
MODULE_RULES = frozenset(
    {RuleName.METHOD, RuleName.INVARIANT, RuleName.WELLFRM_MOD, RuleName.COMB_SPEC}
)


@dataclass(frozen=True, slots=True)
class Triple:
    pre: Assertion
    stmt: Stmt
    post: Assertion


@dataclass(frozen=True, slots=True)
class Quadruple:
    pre: Assertion
    stmt: Stmt
    post: Assertion
    mid: Assertion

    def as_triple(self) -> Triple:
        return Triple(self.pre, self.stmt, self.post)


@dataclass(frozen=True, slots=True)
class SpecJudgment:
    """`M |- S1 /\\ ... /\\ Sn` for named conjuncts."""

    names: tuple[str, ...]


@dataclass(frozen=True, slots=True)
class ModuleJudgment:
    """`|- M : Spec(M)`, the whole module against the whole bundle spec."""


Judgment: TypeAlias = Triple | Quadruple | SpecJudgment | ModuleJudgment


@dataclass(frozen=True, slots=True)
class ProofNode:
    name: str
    rule: RuleName
    premises: tuple[str, ...]
    params: Mapping[str, tuple[str, ...]]
    conclusion: Judgment
    span: SourceSpan = field(default=NO_SPAN, compare=False)

    def param(self, key: str) -> str | None:
        values = self.params.get(key)
        return values[0] if values else None


@dataclass(frozen=True, slots=True)
class OpenGoal:
    """A judgment the bundle needs but does not derive."""

    name: str
    conclusion: Judgment
    span: SourceSpan = field(default=NO_SPAN, compare=False)


@dataclass(frozen=True, slots=True)
class Assumption:
    """Trusted entailment `hypothesis -> conclusion`, surfaced in reports."""

    name: str
    hypothesis: Assertion
    conclusion: Assertion
    span: SourceSpan = field(default=NO_SPAN, compare=False)


@dataclass(frozen=True)
class ProofBundle:
    name: str
    module_ref: str
    spec_ref: str
    nodes: Mapping[str, ProofNode] = field(default_factory=dict)
    opens: Mapping[str, OpenGoal] = field(default_factory=dict)
    assumptions: Mapping[str, Assumption] = field(default_factory=dict)
    targets: tuple[str, ...] = ()

    def judgment_of(self, name: str) -> Judgment | None:
        if name in self.nodes:
            return self.nodes[name].conclusion
        if name in self.opens:
            return self.opens[name].conclusion
        return None
