"""Tokenizer shared by the `.loo`, `.spec`, `.scn` and `.proof` parsers."""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from loo_verifier.shared.exceptions import LooSyntaxError


class TokenKind(str, Enum):
    IDENT = "identifier"
    INT = "integer"
    STRING = "string"
    OP = "operator"
    EOF = "end of input"


@dataclass(frozen=True, slots=True)
class Token:
    kind: TokenKind
    text: str
    line: int
    column: int

    def __str__(self) -> str:
        return "end of input" if self.kind == TokenKind.EOF else repr(self.text)


# Longest operators first
OPERATORS = (
    ":=", "+=", "-=", "==", "!=", "<=", ">=", "&&", "||", "/\\", "\\/", "->", "|-", "..", "::",
    "{", "}", "(", ")", "[", "]", ";", ":", ",", ".", "<", ">", "+", "-", "*", "!", "=", "|", "$",
)

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*|\#[^\n]*)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<int>[0-9]+)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<op>""" + "|".join(re.escape(op) for op in OPERATORS) + r""")
    """,
    re.VERBOSE,
)


def _unescape(body: str) -> str:
    return re.sub(r"\\(.)", r"\1", body)


def tokenize(text: str, source: str = "<text>") -> list[Token]:
    """Split text into tokens, ending with an EOF token.

    Identifiers may carry primes (`key'`). Comments run from `//` or `#`
    to the end of the line.
    """
    tokens: list[Token] = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        column = pos - line_start + 1
        if match is None:
            raise LooSyntaxError(f"unexpected character {text[pos]!r}", line, column, source)
        kind = match.lastgroup
        lexeme = match.group()
        if kind == "nl":
            line += 1
            line_start = match.end()
        elif kind == "ident":
            tokens.append(Token(TokenKind.IDENT, lexeme, line, column))
        elif kind == "int":
            tokens.append(Token(TokenKind.INT, lexeme, line, column))
        elif kind == "string":
            tokens.append(Token(TokenKind.STRING, _unescape(lexeme[1:-1]), line, column))
        elif kind == "op":
            tokens.append(Token(TokenKind.OP, lexeme, line, column))
        pos = match.end()
    tokens.append(Token(TokenKind.EOF, "", line, pos - line_start + 1))
    return tokens
