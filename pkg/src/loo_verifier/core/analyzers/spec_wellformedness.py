"""Well-formedness and safe renaming of specifications."""

from __future__ import annotations

import logging
from collections.abc import Mapping

from loo_verifier.core.models.assertion import Assertion, conj, typed
from loo_verifier.core.models.enums import Severity, Tri
from loo_verifier.core.models.results import Diagnostic
from loo_verifier.core.models.spec import MethodSpec, ScopedInvariant, Spec, SpecConjunct
from loo_verifier.core.models.syntax import RES, THIS, ModuleDef, Param, Var
from loo_verifier.core.models.values import EXTERNAL_TYPE, OBJECT_CLASS, is_scalar_type
from loo_verifier.core.semantics.assertion_ops import (
    binder_context,
    encapsulated,
    free_vars,
    is_pos,
    substitute,
)
from loo_verifier.shared.exceptions import RenamingError

logger = logging.getLogger(__name__)


class SpecWellFormednessAnalyzer:
    """Checks each conjunct of a specification against the module it describes.

    Invariants need closed, encapsulated bodies. Method specifications need
    the free-variable discipline on pre, post and mid, positive pre and post,
    and an encapsulated mid-condition.
    """

    def __init__(self, module: ModuleDef, spec: Spec):
        self.module = module
        self.spec = spec
        self.diagnostics: list[Diagnostic] = []

    def analyze(self) -> list[Diagnostic]:
        for conjunct in self.spec.conjuncts:
            if isinstance(conjunct, ScopedInvariant):
                self._check_invariant(conjunct)
            else:
                self._check_method_spec(conjunct)
        for group, members in self.spec.groups.items():
            for member in members:
                if not self.spec.resolve(member):
                    self._add("SPEC_UNKNOWN_CONJUNCT", f"group {group} names unknown {member}", group)
        logger.debug("spec: %d diagnostics", len(self.diagnostics))
        return self.diagnostics

    def _add(self, code: str, message: str, location: str, severity: Severity = Severity.ERROR) -> None:
        self.diagnostics.append(Diagnostic(code=code, message=message, location=location, severity=severity))

    def _check_types(self, params: tuple[Param, ...], where: str) -> None:
        for p in params:
            known = is_scalar_type(p.type) or p.type in (EXTERNAL_TYPE, OBJECT_CLASS) or p.type in self.module.classes
            if not known:
                self._add("SPEC_UNKNOWN_TYPE", f"{p.name}: type {p.type} is not declared", where)

    def _check_free(self, assertion: Assertion, allowed: set[str], part: str, where: str) -> None:
        extra = sorted(free_vars(assertion) - allowed)
        if extra:
            self._add("SPEC_FREE_VARIABLE", f"{part} mentions {', '.join(extra)}", where)

    def _check_enc(self, binders: tuple[Param, ...], body: Assertion, part: str, where: str) -> None:
        gamma = binder_context([(b.name, b.type) for b in binders])
        whole = conj(*(typed(b.name, b.type) for b in binders), body)
        verdict = encapsulated(self.module, whole, gamma)
        if verdict != Tri.YES:
            reason = "cannot be shown" if verdict == Tri.UNKNOWN else "does not hold"
            self._add("SPEC_NOT_ENCAPSULATED", f"encapsulation of the {part} {reason}", where)

    def _check_invariant(self, inv: ScopedInvariant) -> None:
        where = inv.name
        self._check_types(inv.binders, where)
        names = inv.binder_names
        if len(set(names)) != len(names):
            self._add("SPEC_DUPLICATE_BINDER", "binders must be distinct", where)
        if set(names) & {THIS, RES}:
            self._add("SPEC_RESERVED_BINDER", "this and res cannot be binders", where)
        self._check_free(inv.body, set(names), "the invariant", where)
        self._check_enc(inv.binders, inv.body, "invariant", where)

    def _check_method_spec(self, ms: MethodSpec) -> None:
        where = ms.name
        self._check_types(ms.binders, where)
        self._check_types(ms.formals, where)
        xs = set(ms.binder_names)
        ys = set(ms.formal_names)
        declared = [*ms.binder_names, *ms.formal_names]
        if len(set(declared)) != len(declared):
            self._add("SPEC_DUPLICATE_BINDER", "binders and formals must be distinct", where)
        if (xs | ys) & {THIS, RES}:
            self._add("SPEC_RESERVED_BINDER", "this and res cannot be binders or formals", where)

        self._check_free(ms.pre, xs | ys | {THIS}, "precondition", where)
        self._check_free(ms.post, xs | ys | {THIS, RES}, "postcondition", where)
        self._check_free(ms.mid, xs, "mid-condition", where)
        if not is_pos(ms.pre):
            self._add("SPEC_NOT_POS", "precondition has protection under a negation", where)
        if not is_pos(ms.post):
            self._add("SPEC_NOT_POS", "postcondition has protection under a negation", where)
        self._check_enc(ms.binders, ms.mid, "mid-condition", where)
        self._check_target(ms, where)

    def _check_target(self, ms: MethodSpec, where: str) -> None:
        cdef = self.module.classes.get(ms.cls)
        if cdef is None:
            self._add("SPEC_UNKNOWN_CLASS", f"class {ms.cls} is not in module {self.module.name}", where)
            return
        method = cdef.method(ms.method)
        if method is None:
            self._add("SPEC_UNKNOWN_METHOD", f"{ms.cls} has no method {ms.method}", where)
            return
        if method.privacy != ms.privacy:
            self._add("SPEC_PRIVACY_MISMATCH", f"{ms.cls}::{ms.method} is {method.privacy.value}", where)
        if tuple(p.type for p in method.params) != tuple(f.type for f in ms.formals):
            self._add("SPEC_SIGNATURE_MISMATCH", "formal types differ from the method's parameters", where)


def wf_spec(module: ModuleDef, spec: Spec) -> list[Diagnostic]:
    """Diagnostics for a specification; empty when every conjunct is well formed."""
    return SpecWellFormednessAnalyzer(module, spec).analyze()


# ============================================================
# Safe renaming
# ============================================================


def _rename_params(params: tuple[Param, ...], mapping: Mapping[str, str]) -> tuple[Param, ...]:
    return tuple(Param(mapping.get(p.name, p.name), p.type) for p in params)


def extra_binders(ms: MethodSpec) -> tuple[str, ...]:
    """Free names of the precondition that are neither formals, declared binders nor `this`."""
    known = {THIS, *ms.formal_names, *ms.binder_names}
    return tuple(sorted(free_vars(ms.pre) - known))


def rename_spec(conjunct: SpecConjunct, mapping: Mapping[str, str], name: str | None = None) -> SpecConjunct:
    """Rename binders, and for method specifications also formals.

    Binders of an invariant may be renamed to any variable but `res`,
    `this` included, since the body never mentions the receiver. Formals
    and binders of a method specification may be replaced by variables
    other than `this` and `res`. Names free in a method precondition but
    not declared count as binders too. The renamed variables must stay
    pairwise distinct.

    Raises:
        RenamingError: If a key is not a binder or formal, a new name is
            reserved, or two variables would become one
    """
    if isinstance(conjunct, ScopedInvariant):
        declared = conjunct.binder_names
        reserved = {RES}
    else:
        declared = (*conjunct.binder_names, *extra_binders(conjunct), *conjunct.formal_names)
        reserved = {THIS, RES}

    unknown = sorted(set(mapping) - set(declared))
    if unknown:
        raise RenamingError(f"{', '.join(unknown)} are not binders of {conjunct.name}")
    bad = sorted(set(mapping.values()) & reserved)
    if bad:
        raise RenamingError(f"cannot rename to {', '.join(bad)}")
    renamed = [mapping.get(v, v) for v in declared]
    if len(set(renamed)) != len(renamed):
        raise RenamingError(f"renaming of {conjunct.name} identifies distinct variables")

    subst = {k: Var(v) for k, v in mapping.items() if k != v}
    new_name = name or conjunct.name
    if isinstance(conjunct, ScopedInvariant):
        return ScopedInvariant(
            new_name, _rename_params(conjunct.binders, mapping), substitute(conjunct.body, subst), conjunct.span
        )
    return MethodSpec(
        name=new_name,
        binders=_rename_params(conjunct.binders, mapping),
        pre=substitute(conjunct.pre, subst),
        privacy=conjunct.privacy,
        cls=conjunct.cls,
        method=conjunct.method,
        formals=_rename_params(conjunct.formals, mapping),
        post=substitute(conjunct.post, subst),
        mid=substitute(conjunct.mid, subst),
        span=conjunct.span,
    )
