"""Recursive-descent core: token cursor, expressions, assertions and statements.

The file parsers extend `LooParser` with their top-level productions.
"""

from __future__ import annotations

from loo_verifier.core.models.assertion import (
    AExpr,
    All,
    And,
    Assertion,
    External,
    HasClass,
    Not,
    Protected,
    ProtectedFrom,
    conj,
    disj,
    exists,
    implies,
    internal,
)
from loo_verifier.core.models.syntax import (
    DISCARD,
    BinOp,
    Call,
    CondExpr,
    Expr,
    ExprAssign,
    FieldAcc,
    FieldRead,
    FieldWrite,
    GhostCall,
    If,
    Lit,
    LitAssign,
    New,
    Param,
    SourceSpan,
    Stmt,
    Var,
    VarAssign,
    seq,
)
from loo_verifier.core.models.values import FALSE, NULL, TRUE, IntVal, StrVal
from loo_verifier.infrastructure.parsers.lexer import Token, TokenKind, tokenize
from loo_verifier.shared.exceptions import LooSyntaxError

KEYWORDS = frozenset(
    {
        "module", "class", "field", "ghost", "public", "private", "method", "local",
        "if", "then", "else", "skip", "new", "true", "false", "null",
        "forall", "exists", "external", "internal", "protected", "protectedFrom", "inside",
    }
)

# Binary expression operators by precedence level, loosest first
_BINARY_LEVELS: tuple[frozenset[str], ...] = (
    frozenset({"||"}),
    frozenset({"&&"}),
    frozenset({"==", "!="}),
    frozenset({"<", "<=", ">", ">="}),
    frozenset({"+", "-"}),
    frozenset({"*"}),
)


class LooParser:
    """Token cursor with the productions shared by every file format."""

    def __init__(self, text: str, source: str = "<text>"):
        self.source = source
        self.tokens = tokenize(text, source)
        self.pos = 0

    # ------------------------------------------------------------------
    # Cursor
    # ------------------------------------------------------------------

    @property
    def current(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset: int = 1) -> Token:
        index = min(self.pos + offset, len(self.tokens) - 1)
        return self.tokens[index]

    def span(self) -> SourceSpan:
        return SourceSpan(self.current.line, self.current.column)

    def error(self, message: str, token: Token | None = None) -> LooSyntaxError:
        tok = token or self.current
        return LooSyntaxError(message, tok.line, tok.column, self.source)

    def at(self, text: str) -> bool:
        tok = self.current
        return tok.kind in (TokenKind.OP, TokenKind.IDENT) and tok.text == text

    def at_eof(self) -> bool:
        return self.current.kind == TokenKind.EOF

    def advance(self) -> Token:
        tok = self.current
        if tok.kind != TokenKind.EOF:
            self.pos += 1
        return tok

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.advance()
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise self.error(f"expected {text!r}, found {self.current}")
        return self.advance()

    def expect_ident(self, what: str = "identifier") -> str:
        tok = self.current
        if tok.kind != TokenKind.IDENT or tok.text in KEYWORDS:
            raise self.error(f"expected {what}, found {tok}")
        self.advance()
        return tok.text

    def expect_type(self) -> str:
        """A declared type: class name, scalar type or `external`."""
        if self.at("external"):
            self.advance()
            return "external"
        return self.expect_ident("type name")

    def expect_eof(self) -> None:
        if not self.at_eof():
            raise self.error(f"unexpected {self.current} after end of input")

    # ------------------------------------------------------------------
    # Shared small productions
    # ------------------------------------------------------------------

    def parse_params(self, close: str = ")") -> tuple[Param, ...]:
        """`x:T, y:T` up to (not including) the closing token."""
        params: list[Param] = []
        if self.at(close):
            return ()
        while True:
            name = self.expect_ident("parameter name")
            self.expect(":")
            params.append(Param(name, self.expect_type()))
            if not self.accept(","):
                return tuple(params)

    # ------------------------------------------------------------------
    # Expressions
    # ------------------------------------------------------------------

    def parse_expr(self) -> Expr:
        if self.accept("if"):
            cond = self.parse_expr()
            self.expect("then")
            then = self.parse_expr()
            self.expect("else")
            return CondExpr(cond, then, self.parse_expr())
        return self._parse_binary(0)

    def _parse_binary(self, level: int) -> Expr:
        if level == len(_BINARY_LEVELS):
            return self._parse_unary()
        left = self._parse_binary(level + 1)
        while self.current.kind == TokenKind.OP and self.current.text in _BINARY_LEVELS[level]:
            op = self.advance().text
            right = self._parse_binary(level + 1)
            left = BinOp(op, left, right)
        return left

    def _parse_unary(self) -> Expr:
        if self.at("-"):
            self.advance()
            if self.current.kind == TokenKind.INT:
                return self._parse_postfix(Lit(IntVal(-int(self.advance().text))))
            return BinOp("-", Lit(IntVal(0)), self._parse_unary())
        return self._parse_postfix(self._parse_primary())

    def _parse_postfix(self, expr: Expr) -> Expr:
        while self.at("."):
            self.advance()
            name = self.expect_ident("field name")
            if self.accept("("):
                args = self._parse_args()
                expr = GhostCall(expr, name, args)
            else:
                expr = FieldAcc(expr, name)
        return expr

    def _parse_args(self) -> tuple[Expr, ...]:
        """Arguments after `(`, consuming the closing `)`."""
        args: list[Expr] = []
        if not self.accept(")"):
            while True:
                args.append(self.parse_expr())
                if self.accept(")"):
                    break
                self.expect(",")
        return tuple(args)

    def _parse_primary(self) -> Expr:
        tok = self.current
        if tok.kind == TokenKind.INT:
            self.advance()
            return Lit(IntVal(int(tok.text)))
        if tok.kind == TokenKind.STRING:
            self.advance()
            return Lit(StrVal(tok.text))
        if self.accept("true"):
            return Lit(TRUE)
        if self.accept("false"):
            return Lit(FALSE)
        if self.accept("null"):
            return Lit(NULL)
        if self.accept("("):
            inner = self.parse_expr()
            self.expect(")")
            return inner
        if self.at("$"):
            return self.parse_reference_expr()
        return Var(self.expect_ident("expression"))

    def parse_reference_expr(self) -> Expr:
        """Hook for formats with named abbreviations."""
        raise self.error("abbreviations are not allowed here")

    # ------------------------------------------------------------------
    # Assertions
    # ------------------------------------------------------------------

    def parse_assertion(self) -> Assertion:
        left = self._parse_disjunction()
        if self.accept("->"):
            return implies(left, self.parse_assertion())
        return left

    def _parse_disjunction(self) -> Assertion:
        left = self._parse_conjunction()
        while self.accept("\\/"):
            left = disj(left, self._parse_conjunction())
        return left

    def _parse_conjunction(self) -> Assertion:
        parts = [self._parse_unary_assertion()]
        while self.accept("/\\"):
            parts.append(self._parse_unary_assertion())
        result = parts[-1]
        for part in reversed(parts[:-1]):
            result = And(part, result)
        return result

    def _parse_unary_assertion(self) -> Assertion:
        if self.accept("!"):
            return Not(self._parse_unary_assertion())
        if self.at("forall") or self.at("exists"):
            universal = self.advance().text == "forall"
            binders = [self._parse_binder()]
            while self.accept(","):
                binders.append(self._parse_binder())
            self.expect(".")
            body = self.parse_assertion()
            for name, cls in reversed(binders):
                body = All(name, cls, body) if universal else exists(name, cls, body)
            return body
        if self.accept("external"):
            return External(self._parse_unary())
        if self.accept("internal"):
            return internal(self._parse_unary())
        if self.accept("protected") or self.accept("inside"):
            return Protected(self._parse_unary())
        if self.at("$"):
            return self.parse_reference_assertion()
        return self._parse_atomic_assertion()

    def parse_reference_assertion(self) -> Assertion:
        """Hook for formats with named abbreviations."""
        raise self.error("abbreviations are not allowed here")

    def _parse_binder(self) -> tuple[str, str]:
        name = self.expect_ident("bound variable")
        self.expect(":")
        return name, self.expect_type()

    def _parse_atomic_assertion(self) -> Assertion:
        if self.at("("):
            start = self.pos
            try:
                return self._parse_expression_assertion()
            except LooSyntaxError:
                self.pos = start
            self.expect("(")
            inner = self.parse_assertion()
            self.expect(")")
            return inner
        return self._parse_expression_assertion()

    def _parse_expression_assertion(self) -> Assertion:
        expr = self.parse_expr()
        if self.accept(":"):
            return HasClass(expr, self.expect_type())
        if self.accept("protectedFrom"):
            if self.accept("{"):
                sources = [self.parse_expr()]
                while self.accept(","):
                    sources.append(self.parse_expr())
                self.expect("}")
                return conj(*(ProtectedFrom(expr, s) for s in sources))
            return ProtectedFrom(expr, self._parse_unary())
        if self.at_assertion_end():
            return AExpr(expr)
        raise self.error(f"unexpected {self.current} in assertion")

    def at_assertion_end(self) -> bool:
        tok = self.current
        if tok.kind == TokenKind.EOF:
            return True
        if tok.kind == TokenKind.IDENT:
            return tok.text in ("mid", "post", "pre")
        return tok.text in (")", "}", "/\\", "\\/", "->", ";", ",", "]", "||", "|")

    # ------------------------------------------------------------------
    # Statements
    # ------------------------------------------------------------------

    def parse_block(self) -> Stmt:
        """`{ s1; s2; ... }`; an empty block is `skip`."""
        self.expect("{")
        return self.parse_statements()

    def parse_statements(self) -> Stmt:
        """Statements up to and including the closing `}`."""
        stmts: list[Stmt] = []
        while not self.at("}"):
            stmt = self.parse_statement()
            stmts.append(stmt)
            # `;` is optional after a conditional's closing brace
            if not self.accept(";") and not isinstance(stmt, If):
                break
        self.expect("}")
        return seq(*stmts)

    def parse_statement(self) -> Stmt:
        if self.accept("skip"):
            return seq()
        if self.at("if"):
            self.advance()
            cond = self.parse_expr()
            then = self.parse_block()
            orelse = seq()
            if self.accept("else"):
                orelse = self.parse_statement() if self.at("if") else self.parse_block()
            return If(cond, then, orelse)

        start = self.current
        lhs = self.parse_expr()
        if isinstance(lhs, GhostCall):
            return self._call_from(DISCARD, lhs, start)
        if self.current.text in (":=", "+=", "-=") and self.current.kind == TokenKind.OP:
            op = self.advance().text
            return self._assignment(lhs, op, start)
        raise self.error(f"expected a statement, found {start}", start)

    def _assignment(self, lhs: Expr, op: str, start: Token) -> Stmt:
        if isinstance(lhs, FieldAcc):
            if not isinstance(lhs.obj, Var):
                raise self.error("field writes need a variable receiver", start)
            rhs = self.parse_expr()
            if op != ":=":
                rhs = BinOp(op[0], FieldAcc(lhs.obj, lhs.field), rhs)
            return FieldWrite(lhs.obj.name, lhs.field, rhs)
        if not isinstance(lhs, Var):
            raise self.error("cannot assign to this expression", start)
        target = lhs.name
        if op != ":=":
            return ExprAssign(target, BinOp(op[0], Var(target), self.parse_expr()))
        if self.accept("new"):
            return New(target, self.expect_ident("class name"))
        rhs = self.parse_expr()
        match rhs:
            case GhostCall():
                return self._call_from(target, rhs, start)
            case Var(name):
                return VarAssign(target, name)
            case Lit(value):
                return LitAssign(target, value)
            case FieldAcc(Var(obj), fname):
                return FieldRead(target, obj, fname)
            case _:
                return ExprAssign(target, rhs)

    def _call_from(self, target: str, call: GhostCall, start: Token) -> Call:
        if not isinstance(call.recv, Var):
            raise self.error("method receivers must be variables", start)
        return Call(target, call.recv.name, call.name, call.args)
