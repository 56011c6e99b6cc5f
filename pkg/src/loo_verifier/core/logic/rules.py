"""Checking single derivation steps of the triple and quadruple logics.

A step is checked against the conclusions of its premises only; whether
the premises are themselves derivable is the bundle checker's business.
Where a rule fixes an assertion, the conclusion may use anything
equivalent to it, and on the side that can soundly be weakened or
strengthened (preconditions strengthened, postconditions and
mid-conditions weakened) an entailment is enough.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence

from loo_verifier.core.analyzers.spec_wellformedness import rename_spec
from loo_verifier.core.logic.entailment import EntailmentQuery, entails, syntactically_entails
from loo_verifier.core.logic.underlying import check_ul_triple
from loo_verifier.core.models.assertion import (
    A_FALSE,
    A_TRUE,
    AExpr,
    Assertion,
    External,
    HasClass,
    Not,
    Protected,
    ProtectedFrom,
    conj,
    conjuncts,
    typed,
)
from loo_verifier.core.models.enums import Severity, Tri
from loo_verifier.core.models.proof import (
    Assumption,
    Judgment,
    ProofBundle,
    ProofNode,
    Quadruple,
    TRIPLE_RULES,
    RuleName,
    Triple,
)
from loo_verifier.core.models.results import Diagnostic
from loo_verifier.core.models.spec import MethodSpec, ScopedInvariant, Spec, SpecConjunct
from loo_verifier.core.models.syntax import (
    DISCARD,
    RES,
    THIS,
    BinOp,
    Call,
    Expr,
    FieldAcc,
    FieldRead,
    FieldWrite,
    If,
    Lit,
    ModuleDef,
    New,
    Stmt,
    Var,
    VarAssign,
    assigned_variables,
    contains_call,
    flatten,
    normalize,
    seq,
    statement_variables,
)
from loo_verifier.core.rules.defaults import DEFAULT_SOLVER_TIMEOUT_MS
from loo_verifier.core.semantics.assertion_ops import (
    adapt,
    free_vars,
    is_stable,
    normalize_assertion,
    same_assertion,
    substitute,
)
from loo_verifier.shared.exceptions import ProofError, RenamingError
from loo_verifier.shared.formatters import format_assertion, format_stmt_inline

logger = logging.getLogger(__name__)

Quad = Triple | Quadruple


def single_statement(stmt: Stmt) -> Stmt | None:
    parts = flatten(stmt)
    return parts[0] if len(parts) == 1 else None


def same_statement(left: Stmt, right: Stmt) -> bool:
    return normalize(left) == normalize(right)


def _mid(j: Quad) -> Assertion | None:
    return j.mid if isinstance(j, Quadruple) else None


def _equality_partner(atom: Assertion, expr: Expr) -> str | None:
    """`z` when `atom` is `z == expr` or `expr == z`."""
    if not isinstance(atom, AExpr) or not isinstance(atom.expr, BinOp) or atom.expr.op != "==":
        return None
    left, right = atom.expr.left, atom.expr.right
    if left == expr and isinstance(right, Var):
        return right.name
    if right == expr and isinstance(left, Var):
        return left.name
    return None


def _split_off(assertion: Assertion, part: Assertion) -> Assertion | None:
    """The rest of a conjunction once `part` is removed; None when `part` is not a conjunct."""
    target = normalize_assertion(part)
    rest = []
    found = False
    for c in conjuncts(normalize_assertion(assertion)):
        if not found and c == target:
            found = True
        else:
            rest.append(c)
    return conj(*rest) if found else None


class RuleChecker:
    """Checks derivation steps for the statement-level rules."""

    def __init__(
        self,
        module: ModuleDef,
        spec: Spec,
        bundle: ProofBundle,
        timeout_ms: int = DEFAULT_SOLVER_TIMEOUT_MS,
    ):
        self.module = module
        self.spec = spec
        self.bundle = bundle
        self.timeout_ms = timeout_ms
        self.discharged: list[str] = []
        self.trusted: set[str] = set()
        self.cited: set[str] = set()
        self._diagnostics: list[Diagnostic] = []

    # ------------------------------------------------------------------
    # Entry points
    # ------------------------------------------------------------------

    def check_node(self, node: ProofNode) -> list[Diagnostic]:
        self._diagnostics = []
        try:
            self._dispatch(node)
        except ProofError as exc:
            self._fail(node, "PROOF_SIDE_CONDITION", str(exc))
        logger.debug("%s by %s: %d diagnostics", node.name, node.rule.value, len(self._diagnostics))
        return self._diagnostics

    def _dispatch(self, node: ProofNode) -> None:
        if node.rule in TRIPLE_RULES:
            self.check_triple_rule(node)
        else:
            self.check_quad_rule(node)

    def check_triple_rule(self, node: ProofNode) -> None:
        """Embedding of the underlying logic, protection rules and typing rules."""
        if node.rule == RuleName.TYPES_2:
            self._types_2(node)
            return
        j = node.conclusion
        if not isinstance(j, Triple):
            self._fail(node, "PROOF_SHAPE", f"{node.rule.value} concludes a triple")
            return
        match node.rule:
            case RuleName.EMBED_UL:
                self._embed_ul(node, j)
            case RuleName.PROT_NEW:
                self._prot_new(node, j)
            case RuleName.PROT_1:
                self._prot_1(node, j)
            case RuleName.PROT_2:
                self._prot_2(node, j)
            case RuleName.PROT_3:
                self._prot_3(node, j)
            case RuleName.PROT_4:
                self._prot_4(node, j)
            case RuleName.TYPES_1:
                self._types_1(node, j)

    def check_quad_rule(self, node: ProofNode) -> None:
        """Structural rules, conditionals and the call rules."""
        match node.rule:
            case RuleName.MID:
                self._mid_rule(node)
            case RuleName.COMBINE:
                self._combine(node)
            case RuleName.SEQU:
                self._sequ(node)
            case RuleName.CONSEQU:
                self._consequ(node)
            case RuleName.IF_RULE:
                self._if_rule(node)
            case RuleName.ABSURD:
                self._absurd(node)
            case RuleName.CASES:
                self._cases(node)
            case RuleName.CALL_INT:
                self._call_int(node)
            case RuleName.CALL_EXT_ADAPT:
                self._call_ext(node, strong=False)
            case RuleName.CALL_EXT_ADAPT_STRONG:
                self._call_ext(node, strong=True)
            case _:
                self._fail(node, "PROOF_SHAPE", f"{node.rule.value} is not a statement rule")

    # ------------------------------------------------------------------
    # Helpers
    # ------------------------------------------------------------------

    def _fail(self, node: ProofNode, code: str, message: str) -> None:
        self._diagnostics.append(
            Diagnostic(code=code, message=message, severity=Severity.ERROR, location=node.name)
        )

    def _premises(self, node: ProofNode, count: int | None = None, at_least: int = 0) -> list[Judgment] | None:
        if count is not None and len(node.premises) != count:
            self._fail(node, "PROOF_SHAPE", f"{node.rule.value} takes {count} premises, got {len(node.premises)}")
            return None
        if len(node.premises) < at_least:
            self._fail(node, "PROOF_SHAPE", f"{node.rule.value} takes at least {at_least} premises")
            return None
        out: list[Judgment] = []
        for name in node.premises:
            j = self.bundle.judgment_of(name)
            if j is None:
                self._fail(node, "PROOF_REFERENCE", f"unknown premise {name}")
                return None
            out.append(j)
        return out

    def _statement_premises(self, node: ProofNode, conclusion: Judgment, **kw: int) -> list[Quad] | None:
        """Premises that must be of the same kind (triple or quadruple) as the conclusion."""
        if not isinstance(conclusion, Triple | Quadruple):
            self._fail(node, "PROOF_SHAPE", f"{node.rule.value} concludes a triple or quadruple")
            return None
        premises = self._premises(node, **kw)
        if premises is None:
            return None
        out: list[Quad] = []
        for name, j in zip(node.premises, premises):
            if type(j) is not type(conclusion):
                self._fail(node, "PROOF_SHAPE", f"premise {name} is not a {type(conclusion).__name__.lower()}")
                return None
            assert isinstance(j, Triple | Quadruple)
            out.append(j)
        return out

    def _assumptions(self, node: ProofNode) -> list[Assumption]:
        found = []
        for name in node.params.get("by", ()):
            assumption = self.bundle.assumptions.get(name)
            if assumption is None:
                self._fail(node, "PROOF_REFERENCE", f"unknown assumption {name}")
            else:
                found.append(assumption)
        return found

    def _decide(self, node: ProofNode, hypothesis: Assertion, goal: Assertion) -> Tri:
        if syntactically_entails(hypothesis, goal):
            return Tri.YES
        cited = self._assumptions(node)
        verdict = entails(self.module, hypothesis, goal, cited, self.timeout_ms)
        if verdict == Tri.YES:
            self.discharged.append(f"{node.name}: {EntailmentQuery(self.module, hypothesis, goal)}")
            self.trusted.update(a.name for a in cited)
        return verdict

    def _entails(self, node: ProofNode, hypothesis: Assertion, goal: Assertion, what: str) -> bool:
        verdict = self._decide(node, hypothesis, goal)
        if verdict != Tri.YES:
            self._fail(
                node,
                "PROOF_ENTAILMENT",
                f"{what}: {format_assertion(hypothesis)} does not entail {format_assertion(goal)} "
                f"({verdict.value})",
            )
            return False
        return True

    def _equivalent(self, node: ProofNode, actual: Assertion, expected: Assertion, what: str) -> bool:
        if same_assertion(actual, expected):
            return True
        if self._decide(node, actual, expected) == Tri.YES and self._decide(node, expected, actual) == Tri.YES:
            return True
        self._fail(
            node,
            "PROOF_SHAPE",
            f"{what} should be {format_assertion(expected)}, found {format_assertion(actual)}",
        )
        return False

    def _same_stmt(self, node: ProofNode, actual: Stmt, expected: Stmt, what: str) -> bool:
        if same_statement(actual, expected):
            return True
        self._fail(
            node,
            "PROOF_SHAPE",
            f"{what} should be {format_stmt_inline(expected)}, found {format_stmt_inline(actual)}",
        )
        return False

    def _same_mid(self, node: ProofNode, premise: Quad, conclusion: Quad, name: str) -> bool:
        pm, cm = _mid(premise), _mid(conclusion)
        if pm is None or cm is None:
            return True
        return self._equivalent(node, pm, cm, f"mid-condition of {name}")

    def _call_free(self, node: ProofNode, stmt: Stmt) -> bool:
        if contains_call(stmt):
            self._fail(node, "PROOF_SIDE_CONDITION", f"{node.rule.value} needs a statement without calls")
            return False
        return True

    # ------------------------------------------------------------------
    # Triple rules
    # ------------------------------------------------------------------

    def _embed_ul(self, node: ProofNode, j: Triple) -> None:
        if not self._call_free(node, j.stmt):
            return
        for part, assertion in (("precondition", j.pre), ("postcondition", j.post)):
            if not is_stable(assertion):
                self._fail(node, "PROOF_SIDE_CONDITION", f"{part} is not stable")
                return
        verdict = check_ul_triple(self.module, j.pre, j.stmt, j.post, self.timeout_ms)
        if verdict != Tri.YES:
            self._fail(node, "PROOF_UNDERLYING", f"underlying triple not shown ({verdict.value})")
        else:
            self.discharged.append(f"{node.name}: underlying triple over {format_stmt_inline(j.stmt)}")

    def _prot_new(self, node: ProofNode, j: Triple) -> None:
        stmt = single_statement(j.stmt)
        if not isinstance(stmt, New):
            self._fail(node, "PROOF_SHAPE", "Prot-New is about a single `u := new C`")
            return
        if not same_assertion(j.pre, A_TRUE):
            self._fail(node, "PROOF_SHAPE", "Prot-New has precondition true")
        u = Var(stmt.target)
        parts = conjuncts(j.post)
        if not parts:
            self._fail(node, "PROOF_SHAPE", "Prot-New concludes protection of the new object")
        for part in parts:
            match part:
                case Protected(e) if e == u:
                    pass
                case ProtectedFrom(e, Var(x)) if e == u and x != stmt.target:
                    pass
                case ProtectedFrom(e, Var(x)) if e == u:
                    self._fail(node, "PROOF_SIDE_CONDITION", f"{x} is the new object itself")
                case _:
                    self._fail(node, "PROOF_SHAPE", f"Prot-New cannot conclude {format_assertion(part)}")

    def _prot_1(self, node: ProofNode, j: Triple) -> None:
        if not self._call_free(node, j.stmt):
            return
        post = conjuncts(normalize_assertion(j.post))
        if len(post) != 1 or not isinstance(post[0], Protected):
            self._fail(node, "PROOF_SHAPE", "Prot-1 concludes `protected e`")
            return
        e = post[0].expr
        rest = _split_off(j.pre, post[0])
        if rest is None:
            self._fail(node, "PROOF_SHAPE", "precondition must contain the protection it preserves")
            return
        premises = self._premises(node, count=1)
        if premises is None:
            return
        (p,) = premises
        if not isinstance(p, Triple):
            self._fail(node, "PROOF_SHAPE", "Prot-1 takes a triple")
            return
        p_post = conjuncts(normalize_assertion(p.post))
        z = _equality_partner(p_post[0], e) if len(p_post) == 1 else None
        if z is None:
            self._fail(node, "PROOF_SHAPE", "premise postcondition must be `e == z`")
            return
        if z in assigned_variables(j.stmt):
            self._fail(node, "PROOF_SIDE_CONDITION", f"{z} is assigned by the statement")
        if z in free_vars(j.pre) | free_vars(j.post) | statement_variables(j.stmt):
            self._fail(node, "PROOF_SIDE_CONDITION", f"{z} must be fresh")
        self._same_stmt(node, p.stmt, j.stmt, "premise statement")
        self._equivalent(node, p.pre, conj(rest, AExpr(BinOp("==", e, Var(z)))), "premise precondition")

    def _prot_2(self, node: ProofNode, j: Triple) -> None:
        stmt = single_statement(j.stmt)
        if not isinstance(stmt, VarAssign | FieldRead):
            self._fail(node, "PROOF_SHAPE", "Prot-2 is about `x := y` or `x := y.f`")
            return
        post = conjuncts(normalize_assertion(j.post))
        if len(post) != 1 or not isinstance(post[0], ProtectedFrom):
            self._fail(node, "PROOF_SHAPE", "Prot-2 concludes `e protectedFrom e'`")
            return
        e, source = post[0].expr, post[0].source
        rest = _split_off(j.pre, post[0])
        if rest is None:
            self._fail(node, "PROOF_SHAPE", "precondition must contain the protection it preserves")
            return
        premises = self._premises(node, count=1)
        if premises is None:
            return
        (p,) = premises
        if not isinstance(p, Triple):
            self._fail(node, "PROOF_SHAPE", "Prot-2 takes a triple")
            return
        atoms = conjuncts(normalize_assertion(p.post))
        z = node.param("z") or next((n for a in atoms if (n := _equality_partner(a, e))), None)
        z2 = node.param("z2") or next(
            (n for a in atoms if (n := _equality_partner(a, source)) and n != z), None
        )
        if z is None or z2 is None:
            self._fail(node, "PROOF_SHAPE", "premise postcondition must be `z == e /\\ z' == e'`")
            return
        x = stmt.target
        if x in (z, z2):
            self._fail(node, "PROOF_SIDE_CONDITION", f"{x} is assigned by the statement")
        if {z, z2} & (free_vars(j.pre) | free_vars(j.post)):
            self._fail(node, "PROOF_SIDE_CONDITION", "the variables naming e and e' must be fresh")
        pinned = conj(AExpr(BinOp("==", Var(z), e)), AExpr(BinOp("==", Var(z2), source)))
        self._same_stmt(node, p.stmt, j.stmt, "premise statement")
        self._equivalent(node, p.post, pinned, "premise postcondition")
        self._equivalent(node, p.pre, conj(rest, pinned), "premise precondition")

    def _prot_3(self, node: ProofNode, j: Triple) -> None:
        stmt = single_statement(j.stmt)
        if not isinstance(stmt, FieldRead):
            self._fail(node, "PROOF_SHAPE", "Prot-3 is about `x := y.f`")
            return
        post = conjuncts(normalize_assertion(j.post))
        if len(post) != 1 or not isinstance(post[0], ProtectedFrom) or post[0].expr != Var(stmt.target):
            self._fail(node, "PROOF_SHAPE", f"Prot-3 concludes `{stmt.target} protectedFrom z`")
            return
        source = post[0].source
        if not isinstance(source, Var):
            self._fail(node, "PROOF_SHAPE", "the protecting expression must be a variable")
            return
        if source.name == stmt.target:
            self._fail(node, "PROOF_SIDE_CONDITION", f"{stmt.target} is both read into and protected from")
            return
        expected = ProtectedFrom(FieldAcc(Var(stmt.obj), stmt.field), source)
        self._equivalent(node, j.pre, expected, "precondition")

    def _prot_4(self, node: ProofNode, j: Triple) -> None:
        stmt = single_statement(j.stmt)
        if not isinstance(stmt, FieldWrite) or not isinstance(stmt.source, Var):
            self._fail(node, "PROOF_SHAPE", "Prot-4 is about `y.f := y'`")
            return
        post = conjuncts(normalize_assertion(j.post))
        if len(post) != 1 or not isinstance(post[0], ProtectedFrom):
            self._fail(node, "PROOF_SHAPE", "Prot-4 concludes `x protectedFrom z`")
            return
        e, source = post[0].expr, post[0].source
        if not isinstance(e, Var) or not isinstance(source, Var):
            self._fail(node, "PROOF_SHAPE", "Prot-4 relates variables")
            return
        expected = conj(ProtectedFrom(e, source), ProtectedFrom(e, stmt.source))
        self._equivalent(node, j.pre, expected, "precondition")

    def _types_1(self, node: ProofNode, j: Triple) -> None:
        if not self._call_free(node, j.stmt):
            return
        facts = conjuncts(normalize_assertion(j.pre))
        if len(facts) != 1 or not isinstance(facts[0], HasClass) or not isinstance(facts[0].expr, Var):
            self._fail(node, "PROOF_SHAPE", "Types-1 concludes `x : C`")
            return
        name = facts[0].expr.name
        if name in assigned_variables(j.stmt):
            self._fail(node, "PROOF_SIDE_CONDITION", f"{name} is assigned by the statement")
        self._equivalent(node, j.post, facts[0], "postcondition")

    def _types_2(self, node: ProofNode) -> None:
        j = node.conclusion
        premises = self._statement_premises(node, j, count=1)
        if premises is None:
            return
        assert isinstance(j, Triple | Quadruple)
        (p,) = premises
        facts = [
            c for c in conjuncts(normalize_assertion(j.pre)) if isinstance(c, HasClass) and isinstance(c.expr, Var)
        ]
        if not facts:
            self._fail(node, "PROOF_SHAPE", "Types-2 adds typing facts `x : C`")
            return
        assigned = assigned_variables(j.stmt)
        for fact in facts:
            assert isinstance(fact.expr, Var)
            if fact.expr.name in assigned:
                self._fail(node, "PROOF_SIDE_CONDITION", f"{fact.expr.name} is assigned by the statement")
        self._same_stmt(node, p.stmt, j.stmt, "premise statement")
        self._equivalent(node, j.pre, conj(*facts, p.pre), "precondition")
        self._equivalent(node, j.post, conj(*facts, p.post), "postcondition")
        self._same_mid(node, p, j, node.premises[0])

    # ------------------------------------------------------------------
    # Structural rules
    # ------------------------------------------------------------------

    def _mid_rule(self, node: ProofNode) -> None:
        j = node.conclusion
        if not isinstance(j, Quadruple):
            self._fail(node, "PROOF_SHAPE", "Mid concludes a quadruple")
            return
        premises = self._premises(node, count=1)
        if premises is None:
            return
        (p,) = premises
        if not isinstance(p, Triple):
            self._fail(node, "PROOF_SHAPE", "Mid takes a triple")
            return
        if not self._call_free(node, j.stmt):
            return
        self._same_stmt(node, p.stmt, j.stmt, "premise statement")
        self._equivalent(node, j.pre, p.pre, "precondition")
        self._equivalent(node, j.post, p.post, "postcondition")

    def _combine(self, node: ProofNode) -> None:
        j = node.conclusion
        premises = self._statement_premises(node, j, count=2)
        if premises is None:
            return
        assert isinstance(j, Triple | Quadruple)
        p1, p2 = premises
        self._same_stmt(node, p1.stmt, j.stmt, "first premise statement")
        self._same_stmt(node, p2.stmt, j.stmt, "second premise statement")
        self._equivalent(node, j.pre, conj(p1.pre, p2.pre), "precondition")
        self._equivalent(node, j.post, conj(p1.post, p2.post), "postcondition")
        self._same_mid(node, p1, j, node.premises[0])
        self._same_mid(node, p2, j, node.premises[1])

    def _sequ(self, node: ProofNode) -> None:
        j = node.conclusion
        premises = self._statement_premises(node, j, at_least=2)
        if premises is None:
            return
        assert isinstance(j, Triple | Quadruple)
        for (name, p), q in zip(zip(node.premises, premises), premises[1:]):
            self._entails(node, p.post, q.pre, f"postcondition of {name} into the next premise")
        for name, p in zip(node.premises, premises):
            self._same_mid(node, p, j, name)
        self._same_stmt(node, j.stmt, seq(*(p.stmt for p in premises)), "statement")
        self._equivalent(node, j.pre, premises[0].pre, "precondition")
        self._equivalent(node, j.post, premises[-1].post, "postcondition")

    def _consequ(self, node: ProofNode) -> None:
        j = node.conclusion
        premises = self._statement_premises(node, j, count=1)
        if premises is None:
            return
        assert isinstance(j, Triple | Quadruple)
        (p,) = premises
        self._same_stmt(node, p.stmt, j.stmt, "premise statement")
        self._entails(node, j.pre, p.pre, "precondition")
        self._entails(node, p.post, j.post, "postcondition")
        pm, cm = _mid(p), _mid(j)
        if pm is not None and cm is not None:
            self._entails(node, pm, cm, "mid-condition")

    def _if_rule(self, node: ProofNode) -> None:
        j = node.conclusion
        premises = self._statement_premises(node, j, count=2)
        if premises is None:
            return
        assert isinstance(j, Triple | Quadruple)
        stmt = single_statement(j.stmt)
        if not isinstance(stmt, If):
            self._fail(node, "PROOF_SHAPE", "If_Rule is about a conditional")
            return
        p1, p2 = premises
        guard = AExpr(stmt.cond)
        for (name, p), branch, case in (
            ((node.premises[0], p1), stmt.then, guard),
            ((node.premises[1], p2), stmt.orelse, Not(guard)),
        ):
            self._same_stmt(node, p.stmt, branch, f"statement of {name}")
            self._entails(node, conj(j.pre, case), p.pre, f"precondition of {name}")
            self._entails(node, p.post, j.post, f"postcondition of {name}")
            pm, cm = _mid(p), _mid(j)
            if pm is not None and cm is not None:
                self._entails(node, pm, cm, f"mid-condition of {name}")

    def _absurd(self, node: ProofNode) -> None:
        j = node.conclusion
        if not isinstance(j, Triple | Quadruple):
            self._fail(node, "PROOF_SHAPE", "Absurd concludes a triple or quadruple")
            return
        if node.premises:
            self._fail(node, "PROOF_SHAPE", "Absurd takes no premises")
        self._entails(node, j.pre, A_FALSE, "precondition")

    def _cases(self, node: ProofNode) -> None:
        j = node.conclusion
        premises = self._statement_premises(node, j, at_least=2)
        if premises is None:
            return
        assert isinstance(j, Triple | Quadruple)
        for name, p in zip(node.premises, premises):
            self._same_stmt(node, p.stmt, j.stmt, f"statement of {name}")
            self._entails(node, p.post, j.post, f"postcondition of {name}")
            pm, cm = _mid(p), _mid(j)
            if pm is not None and cm is not None:
                self._entails(node, pm, cm, f"mid-condition of {name}")
        covering = Not(conj(*(Not(p.pre) for p in premises)))
        self._entails(node, j.pre, covering, "case split")

    # ------------------------------------------------------------------
    # Call rules
    # ------------------------------------------------------------------

    def _conjunct(self, node: ProofNode) -> SpecConjunct | None:
        name = node.param("spec")
        if name is None:
            self._fail(node, "PROOF_SHAPE", f"{node.rule.value} needs `spec=<name>`")
            return None
        conjunct = self.spec.get(name)
        if conjunct is None:
            self._fail(node, "PROOF_REFERENCE", f"unknown specification {name}")
            return None
        self.cited.add(name)
        mapping: dict[str, str] = {}
        for item in node.params.get("rename", ()):
            old, _, new = item.partition("->")
            mapping[old] = new
        if not mapping:
            return conjunct
        try:
            return rename_spec(conjunct, mapping)
        except RenamingError as exc:
            self._fail(node, "PROOF_RENAMING", str(exc))
            return None

    def _call(self, node: ProofNode) -> tuple[Quadruple, Call] | None:
        j = node.conclusion
        if not isinstance(j, Quadruple):
            self._fail(node, "PROOF_SHAPE", f"{node.rule.value} concludes a quadruple")
            return None
        if node.premises:
            self._fail(node, "PROOF_SHAPE", f"{node.rule.value} takes no premises")
        stmt = single_statement(j.stmt)
        if not isinstance(stmt, Call):
            self._fail(node, "PROOF_SHAPE", f"{node.rule.value} is about a single method call")
            return None
        return j, stmt

    def _binders_apart(self, node: ProofNode, binders: Sequence[str], stmt: Call) -> bool:
        # a binder may name a variable the call reads, never the one it assigns
        if stmt.target in binders:
            self._fail(
                node,
                "PROOF_VARIABLE_CAPTURE",
                f"{stmt.target} is assigned by the call; rename the specification's binders",
            )
            return False
        return True

    def _call_int(self, node: ProofNode) -> None:
        found = self._call(node)
        conjunct = self._conjunct(node)
        if found is None or conjunct is None:
            return
        j, stmt = found
        if not isinstance(conjunct, MethodSpec):
            self._fail(node, "PROOF_SHAPE", "Call_Int uses a method specification")
            return
        if conjunct.method != stmt.method or len(conjunct.formals) != len(stmt.args):
            self._fail(node, "PROOF_SHAPE", f"{conjunct.name} is not about {stmt.method}/{len(stmt.args)}")
            return
        if not all(isinstance(a, Var) for a in stmt.args):
            self._fail(node, "PROOF_SHAPE", "Call_Int needs variable arguments")
            return
        if not self._binders_apart(node, conjunct.binder_names, stmt):
            return
        actuals = [stmt.receiver, *(a.name for a in stmt.args if isinstance(a, Var))]
        if stmt.target in actuals:
            self._fail(node, "PROOF_SIDE_CONDITION", f"result variable {stmt.target} is also passed to the call")
            return
        if stmt.target == DISCARD and RES in free_vars(conjunct.post):
            self._fail(node, "PROOF_SIDE_CONDITION", "the postcondition talks about the discarded result")
            return
        to_caller: dict[str, Expr] = {THIS: Var(stmt.receiver)}
        to_caller.update({f.name: arg for f, arg in zip(conjunct.formals, stmt.args)})
        typing = [HasClass(Var(stmt.receiver), conjunct.cls)]
        typing += [HasClass(arg, f.type) for f, arg in zip(conjunct.formals, stmt.args)]
        typing += [typed(b.name, b.type) for b in conjunct.binders]
        pre = conj(*typing, substitute(conjunct.pre, to_caller))
        post = substitute(conjunct.post, {**to_caller, RES: Var(stmt.target)})
        self._entails(node, j.pre, pre, "precondition")
        self._entails(node, post, j.post, "postcondition")
        self._entails(node, conjunct.mid, j.mid, "mid-condition")

    def _call_ext(self, node: ProofNode, strong: bool) -> None:
        found = self._call(node)
        conjunct = self._conjunct(node)
        if found is None or conjunct is None:
            return
        j, stmt = found
        if not isinstance(conjunct, ScopedInvariant):
            self._fail(node, "PROOF_SHAPE", f"{node.rule.value} uses a scoped invariant")
            return
        if not all(isinstance(a, Var | Lit) for a in stmt.args):
            self._fail(node, "PROOF_SHAPE", "arguments must be variables or literals")
            return
        if not self._binders_apart(node, conjunct.binder_names, stmt):
            return
        body = conjunct.body
        adapted = adapt((Var(stmt.receiver), *stmt.args), body)
        typing = [typed(b.name, b.type) for b in conjunct.binders]
        if strong:
            pre = conj(External(Var(stmt.receiver)), *typing, body, adapted)
            post = conj(body, adapted)
        else:
            pre = conj(External(Var(stmt.receiver)), *typing, adapted)
            post = adapted
        self._entails(node, j.pre, pre, "precondition")
        self._entails(node, post, j.post, "postcondition")
        self._entails(node, body, j.mid, "mid-condition")
