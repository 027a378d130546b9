"""Equation parsing, exact evaluation, and canonical printing.

Grammar (left-associative, ``*``/``/`` bind tighter than ``+``/``-``)::

    equation := ident '=' expr
    expr     := term (('+' | '-') term)*
    term     := factor (('*' | '/') factor)*
    factor   := number | '(' expr ')'

Numbers accept ASCII or Bengali digits and an optional decimal point; they
are stored as exact :class:`fractions.Fraction` values, so evaluation never
rounds. Unary minus is not part of the grammar.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

from .preprocess import normalize_digits


class EquationError(Exception):
    """Base class for parse and evaluation failures, with a source offset."""

    def __init__(self, message: str, offset: int | None = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (offset {offset})"
        super().__init__(message)


class ParseError(EquationError):
    pass


class MissingEquals(ParseError):
    pass


class TrailingInput(ParseError):
    pass


class ParenMismatch(ParseError):
    pass


class EmptyExpression(ParseError):
    pass


class UnexpectedToken(ParseError):
    pass


class DivisionByZero(EquationError):
    pass


class Op(enum.Enum):
    ADD = "+"
    SUB = "-"
    MUL = "*"
    DIV = "/"

    @property
    def symbol(self) -> str:
        return self.value


_PRECEDENCE = {Op.ADD: 1, Op.SUB: 1, Op.MUL: 2, Op.DIV: 2}


@dataclass(frozen=True)
class Num:
    value: Fraction
    pos: int | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class BinOp:
    op: Op
    left: "Expr"
    right: "Expr"
    pos: int | None = field(default=None, compare=False, repr=False)


Expr = Union[Num, BinOp]


@dataclass(frozen=True)
class Equation:
    variable: str
    rhs: Expr


# --- lexer ------------------------------------------------------------

_SYMBOLS = set("=+-*/()")


@dataclass(frozen=True)
class _Token:
    kind: str  # IDENT | NUMBER | SYMBOL | END
    text: str
    offset: int


def _lex(s: str) -> list[_Token]:
    tokens: list[_Token] = []
    i, n = 0, len(s)
    while i < n:
        ch = s[i]
        if ch.isspace():
            i += 1
            continue
        if ch in _SYMBOLS:
            tokens.append(_Token("SYMBOL", ch, i))
            i += 1
            continue
        if ch.isascii() and ch.isalpha():
            j = i + 1
            while j < n and s[j].isascii() and s[j].isalnum():
                j += 1
            tokens.append(_Token("IDENT", s[i:j].lower(), i))
            i = j
            continue
        if ch.isascii() and ch.isdigit():
            j = i + 1
            while j < n and s[j].isascii() and s[j].isdigit():
                j += 1
            if j < n - 1 and s[j] == "." and s[j + 1].isascii() and s[j + 1].isdigit():
                j += 2
                while j < n and s[j].isascii() and s[j].isdigit():
                    j += 1
            tokens.append(_Token("NUMBER", s[i:j], i))
            i = j
            continue
        raise UnexpectedToken(f"unexpected character {ch!r}", offset=i)
    tokens.append(_Token("END", "", n))
    return tokens


# --- parser -----------------------------------------------------------


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.i = 0

    @property
    def cur(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        tok = self.cur
        self.i += 1
        return tok

    def parse_equation(self) -> Equation:
        if self.cur.kind != "IDENT":
            raise UnexpectedToken(
                f"expected a variable name, found {self.cur.text or 'end of input'!r}",
                offset=self.cur.offset,
            )
        variable = self.advance().text
        if not (self.cur.kind == "SYMBOL" and self.cur.text == "="):
            raise MissingEquals("expected '=' after the variable", offset=self.cur.offset)
        self.advance()
        if self.cur.kind == "END":
            raise EmptyExpression("nothing after '='", offset=self.cur.offset)
        rhs = self.parse_expr()
        if self.cur.kind != "END":
            if self.cur.text == ")":
                raise ParenMismatch("unmatched ')'", offset=self.cur.offset)
            raise TrailingInput(f"unexpected trailing {self.cur.text!r}", offset=self.cur.offset)
        return Equation(variable=variable, rhs=rhs)

    def parse_expr(self) -> Expr:
        node = self.parse_term()
        while self.cur.kind == "SYMBOL" and self.cur.text in "+-":
            op_tok = self.advance()
            right = self.parse_term()
            op = Op.ADD if op_tok.text == "+" else Op.SUB
            node = BinOp(op, node, right, pos=op_tok.offset)
        return node

    def parse_term(self) -> Expr:
        node = self.parse_factor()
        while self.cur.kind == "SYMBOL" and self.cur.text in "*/":
            op_tok = self.advance()
            right = self.parse_factor()
            op = Op.MUL if op_tok.text == "*" else Op.DIV
            node = BinOp(op, node, right, pos=op_tok.offset)
        return node

    def parse_factor(self) -> Expr:
        tok = self.cur
        if tok.kind == "NUMBER":
            self.advance()
            return Num(Fraction(tok.text), pos=tok.offset)
        if tok.kind == "SYMBOL" and tok.text == "(":
            self.advance()
            node = self.parse_expr()
            if not (self.cur.kind == "SYMBOL" and self.cur.text == ")"):
                raise ParenMismatch("expected ')'", offset=self.cur.offset)
            self.advance()
            return node
        if tok.kind == "END":
            raise UnexpectedToken("unexpected end of input", offset=tok.offset)
        raise UnexpectedToken(f"unexpected {tok.text!r}", offset=tok.offset)


def parse_equation(s: str) -> Equation:
    """Parse ``<variable> = <expression>`` into an :class:`Equation`.

    Bengali digits are accepted and normalized to ASCII before lexing (the
    character-wise mapping keeps error offsets aligned with the input).
    """
    normalized = normalize_digits(s, "bengali_to_ascii")
    tokens = _lex(normalized)
    if not any(t.kind == "SYMBOL" and t.text == "=" for t in tokens):
        raise MissingEquals("no '=' in input", offset=len(s))
    return _Parser(tokens).parse_equation()


# --- evaluation and printing ------------------------------------------


def evaluate(e: Expr) -> Fraction:
    """Evaluate an expression with exact rational arithmetic."""
    if isinstance(e, Num):
        return e.value
    left = evaluate(e.left)
    right = evaluate(e.right)
    if e.op is Op.ADD:
        return left + right
    if e.op is Op.SUB:
        return left - right
    if e.op is Op.MUL:
        return left * right
    if right == 0:
        raise DivisionByZero("division by zero", offset=e.pos)
    return left / right


def solve(eq: Equation) -> Fraction:
    """Solve an equation whose left side is a bare variable."""
    return evaluate(eq.rhs)


def count_operators(e: Expr) -> dict[Op, int]:
    """Count binary operator nodes by kind."""
    counts = {op: 0 for op in Op}

    def walk(node: Expr) -> None:
        if isinstance(node, BinOp):
            counts[node.op] += 1
            walk(node.left)
            walk(node.right)

    walk(e)
    return counts


def _precedence(e: Expr) -> int:
    return _PRECEDENCE[e.op] if isinstance(e, BinOp) else 3


def format_number(value: Fraction) -> str:
    """Render a rational as an integer or exact decimal literal.

    Only non-negative rationals with a terminating decimal expansion are
    representable in the grammar; anything else raises ``ValueError``.
    """
    if value < 0:
        raise ValueError(f"negative literal {value} is not representable")
    if value.denominator == 1:
        return str(value.numerator)
    den = value.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        raise ValueError(f"{value} has no terminating decimal form")
    k = max(twos, fives)
    scaled = value.numerator * 10**k // value.denominator
    digits = str(scaled).rjust(k + 1, "0")
    return f"{digits[:-k]}.{digits[-k:]}"


def to_canonical_string(eq: Equation) -> str:
    """Print with single-space-separated tokens, ASCII digits, and minimal
    parentheses; reparsing yields a structurally identical tree."""
    out: list[str] = [eq.variable.lower(), "="]

    def render(e: Expr) -> None:
        if isinstance(e, Num):
            out.append(format_number(e.value))
            return
        prec = _PRECEDENCE[e.op]
        # Left-associative grammar: a right child at equal precedence would
        # rebind on reparse, so it keeps its parentheses.
        _child(e.left, needs_parens=_precedence(e.left) < prec)
        out.append(e.op.symbol)
        _child(e.right, needs_parens=_precedence(e.right) <= prec)

    def _child(e: Expr, needs_parens: bool) -> None:
        if needs_parens:
            out.append("(")
            render(e)
            out.append(")")
        else:
            render(e)

    render(eq.rhs)
    return " ".join(out)
