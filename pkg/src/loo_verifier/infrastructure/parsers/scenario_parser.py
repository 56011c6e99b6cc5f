"""Parser for `.scn` scenario files: a seed heap, a top frame and a continuation."""

from __future__ import annotations

import re
from pathlib import Path

from loo_verifier.core.models.spec import Scenario
from loo_verifier.core.models.state import Frame, Obj, State
from loo_verifier.core.models.syntax import THIS
from loo_verifier.core.models.values import FALSE, NULL, TRUE, Address, IntVal, StrVal, Value
from loo_verifier.infrastructure.parsers.base import LooParser
from loo_verifier.infrastructure.parsers.lexer import TokenKind
from loo_verifier.shared.exceptions import DuplicateDefinitionError, LooSyntaxError

_ADDRESS_NAME = re.compile(r"o([0-9]+)")


class ScenarioParser(LooParser):
    """Parses one or more scenarios.

    Grammar:
        scenario ::= "scenario" Name "{" heap frame run "}"
        heap     ::= "heap" "{" (oN ":" C ["{" (f "=" value ";")* "}"] ";")* "}"
        frame    ::= "frame" x "=" value ("," x "=" value)* ";"
        run      ::= "run" block

    Objects are named `o1`, `o2`, ...; the number is the address. Fields
    left out are filled with their declared defaults when the scenario is
    bound to a program.
    """

    def parse(self) -> tuple[Scenario, ...]:
        scenarios: list[Scenario] = []
        seen: set[str] = set()
        while not self.at_eof():
            tok = self.current
            scenario = self._parse_scenario()
            if scenario.name in seen:
                raise DuplicateDefinitionError(
                    f"scenario {scenario.name} defined twice", tok.line, tok.column, self.source
                )
            seen.add(scenario.name)
            scenarios.append(scenario)
        return tuple(scenarios)

    def _parse_scenario(self) -> Scenario:
        self.expect("scenario")
        name = self.expect_ident("scenario name")
        self.expect("{")
        heap = self._parse_heap()
        frame_vars = self._parse_frame(heap)
        self.expect("run")
        body = self.parse_block()
        self.expect("}")
        state = State((Frame(frame_vars, body),), heap)
        return Scenario(name, state, body)

    def _parse_heap(self) -> dict[Address, Obj]:
        self.expect("heap")
        self.expect("{")
        declared: list[tuple[Address, str, list[tuple[str, str | Value]]]] = []
        while not self.accept("}"):
            tok = self.current
            addr = self._address(self.expect_ident("object name"))
            if any(addr == a for a, _, _ in declared):
                raise DuplicateDefinitionError(
                    f"object {addr} declared twice", tok.line, tok.column, self.source
                )
            self.expect(":")
            cls = self.expect_ident("class name")
            fields: list[tuple[str, str | Value]] = []
            if self.accept("{"):
                while not self.accept("}"):
                    fname = self.expect_ident("field name")
                    self.expect("=")
                    fields.append((fname, self._parse_value_token()))
                    if not self.accept(";"):
                        self.expect("}")
                        break
            self.expect(";")
            declared.append((addr, cls, fields))

        addresses = {a for a, _, _ in declared}
        heap: dict[Address, Obj] = {}
        for addr, cls, fields in declared:
            values = {fname: self._resolve(raw, addresses) for fname, raw in fields}
            heap[addr] = Obj(cls, values)
        return heap

    def _parse_frame(self, heap: dict[Address, Obj]) -> dict[str, Value]:
        self.expect("frame")
        bindings: dict[str, Value] = {}
        while True:
            name = self.expect_ident("variable")
            self.expect("=")
            bindings[name] = self._resolve(self._parse_value_token(), set(heap))
            if not self.accept(","):
                break
        self.expect(";")
        if THIS not in bindings:
            raise self.error("the frame must bind 'this'")
        return bindings

    def _parse_value_token(self) -> str | Value:
        """A literal value, or an object name resolved once the heap is known."""
        tok = self.current
        if tok.kind == TokenKind.INT:
            self.advance()
            return IntVal(int(tok.text))
        if self.accept("-"):
            digits = self.current
            if digits.kind != TokenKind.INT:
                raise self.error("expected an integer after '-'")
            self.advance()
            return IntVal(-int(digits.text))
        if tok.kind == TokenKind.STRING:
            self.advance()
            return StrVal(tok.text)
        for word, value in (("true", TRUE), ("false", FALSE), ("null", NULL)):
            if self.accept(word):
                return value
        return self.expect_ident("value")

    def _resolve(self, raw: str | Value, addresses: set[Address]) -> Value:
        if not isinstance(raw, str):
            return raw
        addr = self._address(raw)
        if addr not in addresses:
            raise self.error(f"object {raw} is not declared in the heap")
        return addr

    def _address(self, name: str) -> Address:
        match = _ADDRESS_NAME.fullmatch(name)
        if match is None:
            raise LooSyntaxError(
                f"object names have the form o<number>, found {name!r}",
                self.current.line,
                self.current.column,
                self.source,
            )
        return Address(int(match.group(1)))


def parse_scenarios(text: str, source: str = "<text>") -> tuple[Scenario, ...]:
    return ScenarioParser(text, source).parse()


def parse_scenario_file(path: Path) -> tuple[Scenario, ...]:
    return parse_scenarios(path.read_text(encoding="utf-8"), path.name)
