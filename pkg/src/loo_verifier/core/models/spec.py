"""Specification syntax: scoped invariants and method specifications."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import TypeAlias

from loo_verifier.core.models.assertion import Assertion
from loo_verifier.core.models.enums import Privacy
from loo_verifier.core.models.state import State
from loo_verifier.core.models.syntax import NO_SPAN, Param, SourceSpan, Stmt


@dataclass(frozen=True, slots=True)
class ScopedInvariant:
    """`<x1:C1, ..., xn:Cn | A>`: external states satisfying A keep satisfying it."""

    name: str
    binders: tuple[Param, ...]
    body: Assertion
    span: SourceSpan = field(default=NO_SPAN, compare=False)

    @property
    def binder_names(self) -> tuple[str, ...]:
        return tuple(b.name for b in self.binders)


@dataclass(frozen=True, slots=True)
class MethodSpec:
    """`{x:C' /\\ A} p C::m(y:D) {A'} || {A''}`."""

    name: str
    binders: tuple[Param, ...]
    pre: Assertion
    privacy: Privacy
    cls: str
    method: str
    formals: tuple[Param, ...]
    post: Assertion
    mid: Assertion
    span: SourceSpan = field(default=NO_SPAN, compare=False)

    @property
    def binder_names(self) -> tuple[str, ...]:
        return tuple(b.name for b in self.binders)

    @property
    def formal_names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.formals)


SpecConjunct: TypeAlias = ScopedInvariant | MethodSpec


@dataclass(frozen=True)
class Spec:
    """Conjunction of named specification clauses, plus named groups of clauses."""

    conjuncts: tuple[SpecConjunct, ...] = ()
    groups: Mapping[str, tuple[str, ...]] = field(default_factory=dict)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.conjuncts)

    def get(self, name: str) -> SpecConjunct | None:
        for c in self.conjuncts:
            if c.name == name:
                return c
        return None

    def resolve(self, name: str) -> tuple[SpecConjunct, ...]:
        """A conjunct or a group, as the clauses it stands for."""
        if name in self.groups:
            out: list[SpecConjunct] = []
            for member in self.groups[name]:
                out.extend(self.resolve(member))
            return tuple(out)
        found = self.get(name)
        return (found,) if found is not None else ()

    def select(self, names: list[str] | tuple[str, ...]) -> Spec:
        chosen: list[SpecConjunct] = []
        for name in names:
            for c in self.resolve(name):
                if c not in chosen:
                    chosen.append(c)
        return Spec(tuple(chosen))

    @property
    def invariants(self) -> tuple[ScopedInvariant, ...]:
        return tuple(c for c in self.conjuncts if isinstance(c, ScopedInvariant))

    @property
    def method_specs(self) -> tuple[MethodSpec, ...]:
        return tuple(c for c in self.conjuncts if isinstance(c, MethodSpec))


@dataclass(frozen=True, slots=True)
class QuadrupleObligation:
    """Dynamic obligation: from `state`, if `pre` holds, post at finals and mid at external states."""

    pre: Assertion
    state: State
    post: Assertion
    mid: Assertion
    label: str = ""


@dataclass(frozen=True, slots=True)
class Scenario:
    """Seed state for monitoring and attack search."""

    name: str
    state: State
    body: Stmt
