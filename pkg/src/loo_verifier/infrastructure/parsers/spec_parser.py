"""Parser for `.spec` files and standalone assertions."""

from __future__ import annotations

from pathlib import Path

from loo_verifier.core.models.assertion import A_TRUE, Assertion
from loo_verifier.core.models.enums import Privacy
from loo_verifier.core.models.spec import MethodSpec, ScopedInvariant, Spec, SpecConjunct
from loo_verifier.infrastructure.parsers.base import LooParser
from loo_verifier.shared.exceptions import DuplicateDefinitionError, LooSyntaxError


class SpecParser(LooParser):
    """Parses a sequence of specification clauses.

    Grammar:
        clause ::= "invariant" S "(" binders ")" "{" A "}"
                 | "method" S "(" binders ")" "{" "pre:" A "}"
                   ("public" | "private") C "::" m "(" params ")"
                   "{" ["post:" A] ["mid:" A] "}"
                 | "spec" S "=" S ("/\\" S)* ";"
    """

    def parse(self) -> Spec:
        conjuncts: list[SpecConjunct] = []
        groups: dict[str, tuple[str, ...]] = {}
        names: set[str] = set()
        while not self.at_eof():
            tok = self.current
            group_name = ""
            members: tuple[str, ...] = ()
            if self.at("invariant"):
                clause: SpecConjunct | None = self.parse_invariant()
            elif self.at("method"):
                clause = self.parse_method_spec()
            elif self.at("spec"):
                group_name, members = self._parse_group(names)
                clause = None
            else:
                raise self.error(f"expected 'invariant', 'method' or 'spec', found {tok}")
            name = clause.name if clause is not None else group_name
            if name in names:
                raise DuplicateDefinitionError(
                    f"specification {name} defined twice", tok.line, tok.column, self.source
                )
            names.add(name)
            if clause is not None:
                conjuncts.append(clause)
            else:
                groups[group_name] = members
        return Spec(tuple(conjuncts), groups)

    def parse_invariant(self) -> ScopedInvariant:
        span = self.span()
        self.expect("invariant")
        name = self.expect_ident("specification name")
        self.expect("(")
        binders = self.parse_params()
        self.expect(")")
        self.expect("{")
        body = self.parse_assertion()
        self.expect("}")
        return ScopedInvariant(name, binders, body, span)

    def parse_method_spec(self) -> MethodSpec:
        span = self.span()
        self.expect("method")
        name = self.expect_ident("specification name")
        self.expect("(")
        binders = self.parse_params()
        self.expect(")")
        self.expect("{")
        self._expect_label("pre")
        pre = self.parse_assertion()
        self.expect("}")
        if not (self.at("public") or self.at("private")):
            raise self.error(f"expected 'public' or 'private', found {self.current}")
        privacy = Privacy(self.advance().text)
        cls = self.expect_ident("class name")
        self.expect("::")
        method = self.expect_ident("method name")
        self.expect("(")
        formals = self.parse_params()
        self.expect(")")
        self.expect("{")
        post: Assertion = A_TRUE
        mid: Assertion = A_TRUE
        if self.at("post") and self.peek().text == ":":
            self._expect_label("post")
            post = self.parse_assertion()
        if self.at("mid") and self.peek().text == ":":
            self._expect_label("mid")
            mid = self.parse_assertion()
        self.expect("}")
        return MethodSpec(name, binders, pre, privacy, cls, method, formals, post, mid, span)

    def _parse_group(self, known: set[str]) -> tuple[str, tuple[str, ...]]:
        self.expect("spec")
        name = self.expect_ident("specification name")
        self.expect("=")
        members = [self._group_member(known)]
        while self.accept("/\\"):
            members.append(self._group_member(known))
        self.expect(";")
        return name, tuple(members)

    def _group_member(self, known: set[str]) -> str:
        tok = self.current
        member = self.expect_ident("specification name")
        if member not in known:
            raise LooSyntaxError(
                f"group refers to {member}, which is not defined before it",
                tok.line,
                tok.column,
                self.source,
            )
        return member

    def _expect_label(self, label: str) -> None:
        self.expect(label)
        self.expect(":")


def parse_spec(text: str, source: str = "<text>") -> Spec:
    """Parse `.spec` text.

    Raises:
        LooSyntaxError: text does not follow the grammar
        DuplicateDefinitionError: two clauses share a name
    """
    return SpecParser(text, source).parse()


def parse_spec_file(path: Path) -> Spec:
    return parse_spec(path.read_text(encoding="utf-8"), path.name)


def parse_assertion(text: str, source: str = "<assertion>") -> Assertion:
    """Parse a single assertion, e.g. `a:Account /\\ inside a.key`."""
    parser = LooParser(text, source)
    result = parser.parse_assertion()
    parser.expect_eof()
    return result
