"""Module-level proof obligations and whole-bundle checking."""

from __future__ import annotations

import logging
from collections.abc import Iterable, Mapping, Sequence

from loo_verifier.core.analyzers.module_wellformedness import wf_module_syntax
from loo_verifier.core.analyzers.spec_wellformedness import wf_spec
from loo_verifier.core.logic.rules import RuleChecker, same_statement
from loo_verifier.core.models.assertion import conj, typed
from loo_verifier.core.models.enums import Privacy, Severity
from loo_verifier.core.models.proof import (
    Judgment,
    ModuleJudgment,
    OpenGoal,
    ProofBundle,
    ProofNode,
    Quadruple,
    RuleName,
    SpecJudgment,
)
from loo_verifier.core.models.results import CheckReport, Diagnostic, ObligationResult
from loo_verifier.core.models.spec import MethodSpec, ScopedInvariant, Spec
from loo_verifier.core.models.syntax import RES, THIS, MethodDef, ModuleDef, Var, statement_variables
from loo_verifier.core.rules.defaults import DEFAULT_SOLVER_TIMEOUT_MS
from loo_verifier.core.semantics.assertion_ops import adapt, free_vars, substitute

logger = logging.getLogger(__name__)


def method_variables(method: MethodDef) -> frozenset[str]:
    return statement_variables(method.body) | {p.name for p in method.locals} | {RES}


def method_obligation(cls: str, method: MethodDef, ms: MethodSpec) -> Quadruple:
    """`{this:D, y:D ∧ A1} body {A2 ∧ adapt(res, A2)} || {A3}` with formals renamed to parameters."""
    to_params = {f.name: Var(p.name) for f, p in zip(ms.formals, method.params) if f.name != p.name}
    pre = substitute(conj(*(typed(b.name, b.type) for b in ms.binders), ms.pre), to_params)
    post = substitute(ms.post, to_params)
    typing = [typed(THIS, cls), *(typed(p.name, p.type) for p in method.params)]
    return Quadruple(
        pre=conj(*typing, pre),
        stmt=method.body,
        post=conj(post, adapt((Var(RES),), post)),
        mid=ms.mid,
    )


def invariant_obligation(cls: str, method: MethodDef, inv: ScopedInvariant) -> Quadruple:
    """`{this:D, y:D, x:C ∧ A ∧ adapt((this, y), A)} body {A ∧ adapt(res, A)} || {A}`."""
    body = inv.body
    receiver_and_args = (Var(THIS), *(Var(p.name) for p in method.params))
    typing = [
        typed(THIS, cls),
        *(typed(p.name, p.type) for p in method.params),
        *(typed(b.name, b.type) for b in inv.binders),
    ]
    return Quadruple(
        pre=conj(*typing, body, adapt(receiver_and_args, body)),
        stmt=method.body,
        post=conj(body, adapt((Var(RES),), body)),
        mid=body,
    )


def public_methods(module: ModuleDef) -> list[tuple[str, MethodDef]]:
    return [
        (cname, m)
        for cname in sorted(module.classes)
        for m in module.classes[cname].methods
        if m.privacy == Privacy.PUBLIC
    ]


class BundleChecker(RuleChecker):
    """Checks every derivation a bundle's targets depend on.

    Usage:
        checker = BundleChecker(module, spec, bundle)
        report = checker.check()
    """

    def __init__(
        self,
        module: ModuleDef,
        spec: Spec,
        bundle: ProofBundle,
        timeout_ms: int = DEFAULT_SOLVER_TIMEOUT_MS,
    ):
        super().__init__(module, spec, bundle, timeout_ms)
        self.obligations: list[ObligationResult] = []
        self.open_obligations: list[str] = []
        self.report_diagnostics: list[Diagnostic] = []

    # ------------------------------------------------------------------
    # Module rules
    # ------------------------------------------------------------------

    def _dispatch(self, node: ProofNode) -> None:
        match node.rule:
            case RuleName.METHOD:
                self._method_rule(node)
            case RuleName.INVARIANT:
                self._invariant_rule(node)
            case RuleName.COMB_SPEC:
                self._comb_spec(node)
            case RuleName.WELLFRM_MOD:
                self._wellformed_module(node)
            case _:
                super()._dispatch(node)

    def _spec_conclusion(self, node: ProofNode) -> SpecJudgment | None:
        if not isinstance(node.conclusion, SpecJudgment):
            self._fail(node, "PROOF_SHAPE", f"{node.rule.value} concludes `|- spec ...`")
            return None
        return node.conclusion

    def _single_conjunct(self, node: ProofNode) -> str | None:
        j = self._spec_conclusion(node)
        if j is None:
            return None
        if len(j.names) != 1:
            self._fail(node, "PROOF_SHAPE", f"{node.rule.value} concludes one specification")
            return None
        return j.names[0]

    def _method_rule(self, node: ProofNode) -> None:
        name = self._single_conjunct(node)
        if name is None:
            return
        ms = self.spec.get(name)
        if not isinstance(ms, MethodSpec):
            self._fail(node, "PROOF_REFERENCE", f"{name} is not a method specification")
            return
        premises = self._premises(node, count=1)
        if premises is None:
            return
        self.check_method_obligation(node, ms, premises[0])

    def check_method_obligation(self, node: ProofNode, ms: MethodSpec, proof: Judgment) -> None:
        cdef = self.module.classes.get(ms.cls)
        method = cdef.method(ms.method) if cdef is not None else None
        if method is None:
            self._fail(node, "PROOF_MISSING_METHOD", f"{ms.cls}::{ms.method} is not in {self.module.name}")
            return
        if len(method.params) != len(ms.formals):
            self._fail(node, "PROOF_SHAPE", f"{ms.cls}::{ms.method} takes {len(method.params)} parameters")
            return
        obligation = method_obligation(ms.cls, method, ms)
        allowed = {THIS, *(p.name for p in method.params)}
        overlap = sorted((method_variables(method) & free_vars(obligation.pre)) - allowed)
        if overlap:
            self._fail(
                node,
                "PROOF_VARIABLE_CAPTURE",
                f"{', '.join(overlap)} are variables of {ms.cls}::{ms.method}; rename the specification",
            )
            return
        self._discharges(node, obligation, proof, f"{ms.cls}::{ms.method}")

    def _discharges(self, node: ProofNode, obligation: Quadruple, proof: Judgment, what: str) -> None:
        if not isinstance(proof, Quadruple):
            self._fail(node, "PROOF_SHAPE", f"the proof for {what} must be a quadruple")
            return
        if not same_statement(proof.stmt, obligation.stmt):
            self._fail(node, "PROOF_SHAPE", f"the proof for {what} is not about its body")
            return
        self._entails(node, obligation.pre, proof.pre, f"precondition for {what}")
        self._entails(node, proof.post, obligation.post, f"postcondition for {what}")
        self._entails(node, proof.mid, obligation.mid, f"mid-condition for {what}")

    def _invariant_rule(self, node: ProofNode) -> None:
        name = self._single_conjunct(node)
        if name is None:
            return
        inv = self.spec.get(name)
        if not isinstance(inv, ScopedInvariant):
            self._fail(node, "PROOF_REFERENCE", f"{name} is not a scoped invariant")
            return
        premises = self._premises(node)
        if premises is None:
            return
        self.check_invariant_obligation(node, inv, dict(zip(node.premises, premises)))

    def check_invariant_obligation(self, node: ProofNode, inv: ScopedInvariant, proofs: Mapping[str, Judgment]) -> None:
        unused = dict(proofs)
        for cname, method in public_methods(self.module):
            what = f"{cname}::{method.name}"
            clash = sorted(method_variables(method) & set(inv.binder_names))
            if clash:
                self._fail(
                    node,
                    "PROOF_VARIABLE_CAPTURE",
                    f"{', '.join(clash)} are variables of {what}; rename the invariant's binders",
                )
                continue
            match = next(
                (
                    (pname, j)
                    for pname, j in unused.items()
                    if isinstance(j, Quadruple) and same_statement(j.stmt, method.body)
                ),
                None,
            )
            if match is None:
                self._fail(node, "PROOF_MISSING_METHOD", f"no premise proves {inv.name} for {what}")
                continue
            pname, proof = match
            del unused[pname]
            self._discharges(node, invariant_obligation(cname, method, inv), proof, what)
        for pname in unused:
            self._fail(node, "PROOF_SHAPE", f"premise {pname} is not about a public method")

    def _comb_spec(self, node: ProofNode) -> None:
        j = self._spec_conclusion(node)
        premises = self._premises(node, at_least=1)
        if j is None or premises is None:
            return
        covered: set[str] = set()
        for pname, p in zip(node.premises, premises):
            if not isinstance(p, SpecJudgment):
                self._fail(node, "PROOF_SHAPE", f"premise {pname} is not a specification judgment")
                return
            covered.update(self._conjunct_names(p.names))
        missing = sorted(set(self._conjunct_names(j.names)) - covered)
        if missing:
            self._fail(node, "PROOF_SHAPE", f"{', '.join(missing)} not established by the premises")

    def _wellformed_module(self, node: ProofNode) -> None:
        if not isinstance(node.conclusion, ModuleJudgment):
            self._fail(node, "PROOF_SHAPE", "WellFrm_Mod concludes `|- module`")
            return
        premises = self._premises(node, count=1)
        if premises is None:
            return
        (p,) = premises
        if not isinstance(p, SpecJudgment):
            self._fail(node, "PROOF_SHAPE", "WellFrm_Mod takes a specification judgment")
            return
        missing = sorted(set(self.spec.names) - set(self._conjunct_names(p.names)))
        if missing:
            self._fail(node, "PROOF_SHAPE", f"{', '.join(missing)} not established")
        for diagnostic in wf_spec(self.module, self.spec):
            if diagnostic.severity == Severity.ERROR:
                self._fail(node, diagnostic.code, diagnostic.message)

    def _conjunct_names(self, names: Iterable[str]) -> list[str]:
        out: list[str] = []
        for name in names:
            resolved = self.spec.resolve(name)
            if not resolved:
                out.append(name)
            out.extend(c.name for c in resolved)
        return out

    # ------------------------------------------------------------------
    # Bundle traversal
    # ------------------------------------------------------------------

    def _report(self, code: str, message: str, location: str = "") -> None:
        self.report_diagnostics.append(
            Diagnostic(code=code, message=message, severity=Severity.ERROR, location=location)
        )

    def _roots(self) -> list[str]:
        if not self.bundle.targets:
            return list(self.bundle.nodes)
        roots: list[str] = []
        for target in self.bundle.targets:
            wanted = set(self._conjunct_names([target]))
            if not self.spec.resolve(target):
                self._report("PROOF_TARGET", f"{target} is not a specification conjunct or group")
                continue
            root = next(
                (
                    n.name
                    for n in self.bundle.nodes.values()
                    if isinstance(n.conclusion, ModuleJudgment)
                    or (
                        isinstance(n.conclusion, SpecJudgment)
                        and wanted <= set(self._conjunct_names(n.conclusion.names))
                    )
                ),
                None,
            )
            if root is None:
                self._report("PROOF_TARGET", f"no derivation concludes {target}")
            elif root not in roots:
                roots.append(root)
        return roots

    def _reachable(self, roots: Sequence[str]) -> set[str]:
        seen: set[str] = set()
        active: set[str] = set()

        def visit(name: str, parent: str) -> None:
            if name in active:
                self._report("PROOF_CYCLE", f"{name} depends on itself", parent)
                return
            if name in seen:
                return
            if name in self.bundle.opens:
                seen.add(name)
                return
            node = self.bundle.nodes.get(name)
            if node is None:
                self._report("PROOF_REFERENCE", f"unknown derivation {name}", parent)
                return
            active.add(name)
            for premise in node.premises:
                visit(premise, name)
            active.discard(name)
            seen.add(name)

        for root in roots:
            visit(root, "")
        return seen

    def check(self) -> CheckReport:
        for diagnostic in wf_module_syntax(self.module) + wf_spec(self.module, self.spec):
            if diagnostic.severity == Severity.ERROR:
                self.report_diagnostics.append(diagnostic)

        reachable = self._reachable(self._roots())
        for name, node in self.bundle.nodes.items():
            if name not in reachable:
                continue
            diagnostics = list(self.check_node(node))
            self.obligations.append(
                ObligationResult(name=name, rule=node.rule.value, accepted=not diagnostics, diagnostics=diagnostics)
            )
        self.open_obligations = [name for name in self.bundle.opens if name in reachable]

        established: set[str] = set()
        for name in reachable:
            node = self.bundle.nodes.get(name)
            if node is None:
                continue
            if isinstance(node.conclusion, ModuleJudgment):
                established.update(self.spec.names)
            elif isinstance(node.conclusion, SpecJudgment):
                established.update(self._conjunct_names(node.conclusion.names))
        for name in sorted(self.cited - established):
            self._report("PROOF_UNPROVEN_SPEC", f"calls are reasoned about with {name}, which is not established")

        accepted = (
            all(o.accepted for o in self.obligations)
            and not self.open_obligations
            and not any(d.severity == Severity.ERROR for d in self.report_diagnostics)
        )
        logger.info(
            "bundle %s: %d derivations, %d open, %s",
            self.bundle.name,
            len(self.obligations),
            len(self.open_obligations),
            "accepted" if accepted else "rejected",
        )
        return CheckReport(
            bundle=self.bundle.name,
            accepted=accepted,
            obligations=self.obligations,
            open_obligations=self.open_obligations,
            discharged_entailments=self.discharged,
            trusted_assumptions=[f"declared field types of {self.module.name}", *sorted(self.trusted)],
            diagnostics=self.report_diagnostics,
        )


def check_module(
    module: ModuleDef,
    spec: Spec,
    bundle: ProofBundle,
    timeout_ms: int = DEFAULT_SOLVER_TIMEOUT_MS,
) -> CheckReport:
    """Check a proof bundle for `module` against `spec`.

    Args:
        module: The internal module
        spec: Specification the bundle's targets refer to
        bundle: Parsed proof script
        timeout_ms: Solver timeout per query

    Returns:
        CheckReport listing every derivation checked, the discharged
        entailments, trusted assumptions and open obligations
    """
    return BundleChecker(module, spec, bundle, timeout_ms).check()


def _standalone(
    module: ModuleDef, spec: Spec, conclusion: Judgment, premises: Mapping[str, Judgment]
) -> tuple[BundleChecker, ProofNode]:
    bundle = ProofBundle(
        name="obligation",
        module_ref=module.name,
        spec_ref="",
        opens={name: OpenGoal(name, j) for name, j in premises.items()},
    )
    checker = BundleChecker(module, spec, bundle)
    node = ProofNode("obligation", RuleName.COMB_SPEC, tuple(premises), {}, conclusion)
    checker._diagnostics = []
    return checker, node


def check_method_obligation(module: ModuleDef, ms: MethodSpec, proof: Judgment) -> list[Diagnostic]:
    """Diagnostics for `proof` as the premise of the Method rule for `ms`; empty when it fits."""
    checker, node = _standalone(module, Spec((ms,)), SpecJudgment((ms.name,)), {"proof": proof})
    checker.check_method_obligation(node, ms, proof)
    return checker._diagnostics


def check_invariant_obligation(
    module: ModuleDef, inv: ScopedInvariant, proofs: Mapping[str, Judgment]
) -> list[Diagnostic]:
    """Diagnostics for `proofs` as the premises of the Invariant rule for `inv`."""
    checker, node = _standalone(module, Spec((inv,)), SpecJudgment((inv.name,)), proofs)
    checker.check_invariant_obligation(node, inv, proofs)
    return checker._diagnostics


def obligation_for(module: ModuleDef, conjunct: MethodSpec | ScopedInvariant) -> list[tuple[str, Quadruple]]:
    """The quadruples a proof of `conjunct` has to establish, by method."""
    if isinstance(conjunct, MethodSpec):
        cdef = module.classes.get(conjunct.cls)
        method = cdef.method(conjunct.method) if cdef is not None else None
        if method is None:
            return []
        return [(f"{conjunct.cls}::{conjunct.method}", method_obligation(conjunct.cls, method, conjunct))]
    return [(f"{c}::{m.name}", invariant_obligation(c, m, conjunct)) for c, m in public_methods(module)]


__all__ = [
    "BundleChecker",
    "check_invariant_obligation",
    "check_method_obligation",
    "check_module",
    "invariant_obligation",
    "method_obligation",
    "obligation_for",
]
