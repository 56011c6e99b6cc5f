"""Parser for `.proof` scripts.

A script names the module and specification it is about, optional `let`
abbreviations, the derivations, trusted `assume` lemmas and `open` goals:

    bundle mgood_s2 module "m_good.loo" spec "shop.spec";
    target S2;
    let KEY := a:Account /\\ inside a.key;
    derive d1: Prot-New() |- {true} k := new Key {inside k};
    derive d2: Sequ(d0, d1) |- {$KEY} Account::set {$KEY} || {$KEY};
    derive s2: Invariant(d2, d3; spec=S2) |- spec S2;
    assume types_1: a:Account -> a.key:Key;
    open ERR_2: |- {$KEY} Account::set[1..1] {$KEY};

Statements inside judgments are written inline, or as `C::m` for a method
body, or `C::m[i..j]` for the i-th to j-th top-level statements of it.
"""

from __future__ import annotations

from collections.abc import Callable
from pathlib import Path

from loo_verifier.core.models.assertion import And, Assertion, Not
from loo_verifier.core.models.proof import (
    Assumption,
    Judgment,
    ModuleJudgment,
    OpenGoal,
    ProofBundle,
    ProofNode,
    Quadruple,
    RuleName,
    SpecJudgment,
    Triple,
)
from loo_verifier.core.models.syntax import Stmt, seq
from loo_verifier.infrastructure.parsers.base import LooParser
from loo_verifier.infrastructure.parsers.lexer import TokenKind
from loo_verifier.shared.exceptions import DuplicateDefinitionError, LooSyntaxError

# Resolves `C::m` (and slices) to statements; supplied once the module is known
BodyResolver = Callable[[str, str, int | None, int | None], Stmt]


class ProofParser(LooParser):
    """Parses a proof bundle."""

    def __init__(self, text: str, source: str = "<text>", bodies: BodyResolver | None = None):
        super().__init__(text, source)
        self.bodies = bodies
        self.abbreviations: dict[str, Assertion] = {}

    def parse_header(self) -> tuple[str, str, str]:
        """`bundle <name> module "<file>" spec "<file>";`"""
        self.expect("bundle")
        name = self.expect_ident("bundle name")
        self.expect("module")
        module_ref = self._expect_string()
        self.expect("spec")
        spec_ref = self._expect_string()
        self.expect(";")
        return name, module_ref, spec_ref

    def parse(self) -> ProofBundle:
        name, module_ref, spec_ref = self.parse_header()

        nodes: dict[str, ProofNode] = {}
        opens: dict[str, OpenGoal] = {}
        assumptions: dict[str, Assumption] = {}
        targets: list[str] = []
        taken: set[str] = set()

        while not self.at_eof():
            tok = self.current
            if self.accept("target"):
                targets.append(self.expect_ident("specification name"))
                while self.accept(","):
                    targets.append(self.expect_ident("specification name"))
                self.expect(";")
                continue
            if self.accept("let"):
                abbrev = self.expect_ident("abbreviation name")
                self.expect(":=")
                self.abbreviations[abbrev] = self.parse_assertion()
                self.expect(";")
                continue
            if self.at("derive"):
                node = self._parse_derivation()
                item_name = node.name
                nodes[item_name] = node
            elif self.at("assume"):
                assumption = self._parse_assumption()
                item_name = assumption.name
                assumptions[item_name] = assumption
            elif self.at("open"):
                goal = self._parse_open()
                item_name = goal.name
                opens[item_name] = goal
            else:
                raise self.error(f"expected 'derive', 'assume', 'open', 'let' or 'target', found {tok}")
            if item_name in taken:
                raise DuplicateDefinitionError(
                    f"{item_name} defined twice", tok.line, tok.column, self.source
                )
            taken.add(item_name)

        return ProofBundle(
            name=name,
            module_ref=module_ref,
            spec_ref=spec_ref,
            nodes=nodes,
            opens=opens,
            assumptions=assumptions,
            targets=tuple(targets),
        )

    # ------------------------------------------------------------------
    # Items
    # ------------------------------------------------------------------

    def _parse_derivation(self) -> ProofNode:
        span = self.span()
        self.expect("derive")
        name = self.expect_ident("derivation name")
        self.expect(":")
        rule = self._parse_rule_name()
        self.expect("(")
        premises: list[str] = []
        params: dict[str, tuple[str, ...]] = {}
        if not self.at(";") and not self.at(")"):
            premises.append(self.expect_ident("premise name"))
            while self.accept(","):
                premises.append(self.expect_ident("premise name"))
        if self.accept(";"):
            while not self.at(")"):
                key = self.expect_ident("parameter name")
                self.expect("=")
                params[key] = self._parse_param_value()
                if not self.accept(","):
                    break
        self.expect(")")
        self.expect("|-")
        conclusion = self._parse_judgment()
        self.expect(";")
        return ProofNode(name, rule, tuple(premises), params, conclusion, span)

    def _parse_assumption(self) -> Assumption:
        span = self.span()
        self.expect("assume")
        name = self.expect_ident("assumption name")
        self.expect(":")
        whole = self.parse_assertion()
        self.expect(";")
        # `A -> A'` parses to Not(And(A, Not(A')))
        if not (isinstance(whole, Not) and isinstance(whole.body, And)):
            raise self.error("an assumption has the form A -> A'")
        conclusion = whole.body.right
        if not isinstance(conclusion, Not):
            raise self.error("an assumption has the form A -> A'")
        return Assumption(name, whole.body.left, conclusion.body, span)

    def _parse_open(self) -> OpenGoal:
        span = self.span()
        self.expect("open")
        name = self.expect_ident("goal name")
        self.expect(":")
        self.expect("|-")
        conclusion = self._parse_judgment()
        self.expect(";")
        return OpenGoal(name, conclusion, span)

    def _parse_rule_name(self) -> RuleName:
        tok = self.current
        parts = [self.expect_ident("rule name")]
        while self.at("-") and self.peek().kind in (TokenKind.IDENT, TokenKind.INT):
            self.advance()
            parts.append(self.advance().text)
        text = "-".join(parts)
        try:
            return RuleName(text)
        except ValueError:
            raise LooSyntaxError(f"unknown rule {text}", tok.line, tok.column, self.source) from None

    def _parse_param_value(self) -> tuple[str, ...]:
        if self.accept("["):
            values: list[str] = []
            if not self.accept("]"):
                values.append(self._parse_atom_value())
                while self.accept(","):
                    values.append(self._parse_atom_value())
                self.expect("]")
            return tuple(values)
        return (self._parse_atom_value(),)

    def _parse_atom_value(self) -> str:
        tok = self.current
        if tok.kind == TokenKind.INT:
            return self.advance().text
        first = self.expect_ident("parameter value")
        if self.accept("::"):
            return f"{first}::{self.expect_ident('method name')}"
        if self.accept("->"):
            return f"{first}->{self.expect_ident('variable')}"
        return first

    # ------------------------------------------------------------------
    # Judgments
    # ------------------------------------------------------------------

    def _parse_judgment(self) -> Judgment:
        if self.accept("module"):
            return ModuleJudgment()
        if self.accept("spec"):
            names = [self.expect_ident("specification name")]
            while self.accept("/\\"):
                names.append(self.expect_ident("specification name"))
            return SpecJudgment(tuple(names))
        pre = self._braced_assertion()
        stmt = self._parse_subject()
        post = self._braced_assertion()
        if self.accept("||"):
            mid = self._braced_assertion()
            return Quadruple(pre, stmt, post, mid)
        return Triple(pre, stmt, post)

    def _braced_assertion(self) -> Assertion:
        self.expect("{")
        result = self.parse_assertion()
        self.expect("}")
        return result

    def _parse_subject(self) -> Stmt:
        """Statements up to the `{` of the postcondition."""
        parts: list[Stmt] = []
        while True:
            if self.current.kind == TokenKind.IDENT and self.peek().text == "::":
                parts.append(self._parse_body_reference())
            else:
                parts.append(self.parse_statement())
            if not self.accept(";"):
                break
        return seq(*parts)

    def _parse_body_reference(self) -> Stmt:
        tok = self.current
        cls = self.expect_ident("class name")
        self.expect("::")
        method = self.expect_ident("method name")
        start: int | None = None
        stop: int | None = None
        if self.accept("["):
            start = self._expect_int()
            self.expect("..")
            stop = self._expect_int()
            self.expect("]")
        if self.bodies is None:
            raise LooSyntaxError(
                f"{cls}::{method} needs the module", tok.line, tok.column, self.source
            )
        try:
            return self.bodies(cls, method, start, stop)
        except LookupError as exc:
            raise LooSyntaxError(str(exc), tok.line, tok.column, self.source) from None

    # ------------------------------------------------------------------
    # Abbreviations
    # ------------------------------------------------------------------

    def parse_reference_assertion(self) -> Assertion:
        tok = self.advance()
        name = self.expect_ident("abbreviation name")
        if name not in self.abbreviations:
            raise LooSyntaxError(f"unknown abbreviation ${name}", tok.line, tok.column, self.source)
        return self.abbreviations[name]

    # ------------------------------------------------------------------

    def _expect_string(self) -> str:
        tok = self.current
        if tok.kind != TokenKind.STRING:
            raise self.error(f"expected a quoted file name, found {tok}")
        self.advance()
        return tok.text

    def _expect_int(self) -> int:
        tok = self.current
        if tok.kind != TokenKind.INT:
            raise self.error(f"expected a number, found {tok}")
        self.advance()
        return int(tok.text)


def parse_proof(text: str, source: str = "<text>", bodies: BodyResolver | None = None) -> ProofBundle:
    """Parse a `.proof` script.

    `bodies` resolves `C::m` references; without it such references are a
    syntax error.
    """
    return ProofParser(text, source, bodies).parse()


def parse_proof_file(path: Path, bodies: BodyResolver | None = None) -> ProofBundle:
    return parse_proof(path.read_text(encoding="utf-8"), path.name, bodies)


def read_proof_header(text: str, source: str = "<text>") -> tuple[str, str, str]:
    """Bundle name, module file and spec file named by a script."""
    return ProofParser(text, source).parse_header()
