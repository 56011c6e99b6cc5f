"""Parser for `.loo` module files."""

from __future__ import annotations

import logging
from pathlib import Path

from loo_verifier.core.models.enums import Privacy
from loo_verifier.core.models.syntax import (
    ClassDef,
    FieldDef,
    GhostDef,
    MethodDef,
    ModuleDef,
    Param,
)
from loo_verifier.infrastructure.parsers.base import LooParser
from loo_verifier.shared.exceptions import DuplicateDefinitionError

logger = logging.getLogger(__name__)


class ModuleParser(LooParser):
    """Parses `module <Name> { class ... }`.

    Grammar:
        module  ::= "module" Name "{" class* "}"
        class   ::= "class" C "{" member* "}"
        member  ::= "field" f ":" T ";"
                  | "ghost" gf ["(" params ")"] ":" T "=" expr ";"
                  | ("public" | "private") "method" m "(" params ")" ":" T body
        body    ::= "{" ("local" x ":" T ";")* stmts "}"
    """

    def parse(self) -> ModuleDef:
        self.expect("module")
        name = self.expect_ident("module name")
        self.expect("{")
        classes: dict[str, ClassDef] = {}
        while not self.accept("}"):
            tok = self.current
            cdef = self._parse_class()
            if cdef.name in classes:
                raise DuplicateDefinitionError(
                    f"class {cdef.name} defined twice", tok.line, tok.column, self.source
                )
            classes[cdef.name] = cdef
        self.expect_eof()
        logger.debug("parsed module %s with %d classes", name, len(classes))
        return ModuleDef(name, classes)

    def _parse_class(self) -> ClassDef:
        span = self.span()
        self.expect("class")
        name = self.expect_ident("class name")
        self.expect("{")
        fields: list[FieldDef] = []
        ghosts: list[GhostDef] = []
        methods: list[MethodDef] = []
        seen: set[str] = set()
        while not self.accept("}"):
            tok = self.current
            if self.at("field"):
                member: FieldDef | GhostDef | MethodDef = self._parse_field()
                fields.append(member)
            elif self.at("ghost"):
                member = self._parse_ghost()
                ghosts.append(member)
            elif self.at("public") or self.at("private"):
                member = self._parse_method()
                methods.append(member)
            else:
                raise self.error(f"expected a field, ghost or method, found {tok}")
            if member.name in seen:
                raise DuplicateDefinitionError(
                    f"member {member.name} defined twice in class {name}",
                    tok.line,
                    tok.column,
                    self.source,
                )
            seen.add(member.name)
        return ClassDef(name, tuple(fields), tuple(ghosts), tuple(methods), span)

    def _parse_field(self) -> FieldDef:
        span = self.span()
        self.expect("field")
        name = self.expect_ident("field name")
        self.expect(":")
        ftype = self.expect_type()
        self.expect(";")
        return FieldDef(name, ftype, span)

    def _parse_ghost(self) -> GhostDef:
        span = self.span()
        self.expect("ghost")
        name = self.expect_ident("ghost field name")
        params: tuple[Param, ...] = ()
        if self.accept("("):
            params = self.parse_params()
            self.expect(")")
        self.expect(":")
        rtype = self.expect_type()
        self.expect("=")
        body = self.parse_expr()
        self.expect(";")
        return GhostDef(name, params, rtype, body, span)

    def _parse_method(self) -> MethodDef:
        span = self.span()
        privacy = Privacy(self.advance().text)
        self.expect("method")
        name = self.expect_ident("method name")
        self.expect("(")
        params = self.parse_params()
        self.expect(")")
        self.expect(":")
        rtype = self.expect_type()
        self.expect("{")
        locals_: list[Param] = []
        while self.at("local"):
            self.advance()
            lname = self.expect_ident("local name")
            self.expect(":")
            locals_.append(Param(lname, self.expect_type()))
            self.expect(";")
        body = self.parse_statements()
        return MethodDef(privacy, name, params, rtype, body, tuple(locals_), span)


def parse_module(text: str, source: str = "<text>") -> ModuleDef:
    """Parse `.loo` text into a module.

    Raises:
        LooSyntaxError: text does not follow the grammar
        DuplicateDefinitionError: class or member defined twice
    """
    return ModuleParser(text, source).parse()


def parse_module_file(path: Path) -> ModuleDef:
    return parse_module(path.read_text(encoding="utf-8"), path.name)

