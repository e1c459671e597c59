"""Recursive-descent parser for the expression grammar.

::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := '-' factor | power
    power  := base ('^' rational)?
    base   := number | symbol | func '(' expr (',' expr)? ')' | '(' expr ')'
    rational := '-'? number | '(' '-'? number ('/' number)? ')'
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Sequence

from .nodes import FUNCTIONS, Add, Const, Div, Expr, Func, Mul, Neg, Pow, Sub, Sym


class ParseError(ValueError):
    def __init__(self, message: str, position: int, text: str = ""):
        self.position = position
        self.text = text
        super().__init__(f"{message} at position {position}" + (f" in {text!r}" if text else ""))


class UndeclaredSymbolError(ValueError):
    def __init__(self, name: str, coords: Sequence[str]):
        self.name = name
        self.coords = tuple(coords)
        super().__init__(f"undeclared symbol {name!r} (declared: {', '.join(coords)})")


_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^(),]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, coords: Sequence[str]):
        self.text = text
        self.coords = tuple(coords)
        self.declared = frozenset(coords)
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, text, pos = self.take()
        if text != value or kind == "end":
            found = "end of input" if kind == "end" else repr(text)
            raise ParseError(f"expected {value!r}, found {found}", pos, self.text)

    def error(self, message: str):
        raise ParseError(message, self.peek()[2], self.text)

    def expr(self) -> Expr:
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.term()
            node = Add(node, rhs) if op == "+" else Sub(node, rhs)
        return node

    def term(self) -> Expr:
        node = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.factor()
            node = Mul(node, rhs) if op == "*" else Div(node, rhs)
        return node

    def factor(self) -> Expr:
        if self.peek()[0] == "op" and self.peek()[1] == "-":
            self.take()
            return Neg(self.factor())
        return self.power()

    def power(self) -> Expr:
        node = self.base()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            node = Pow(node, self.rational())
        return node

    def _number(self) -> str:
        kind, text, pos = self.take()
        if kind != "num":
            raise ParseError("expected a number", pos, self.text)
        return text

    def rational(self) -> Fraction:
        kind, text, pos = self.peek()
        if text == "(":
            self.take()
            sign = 1
            if self.peek()[1] == "-":
                self.take()
                sign = -1
            value = Fraction(self._number())
            if self.peek()[1] == "/":
                self.take()
                den = Fraction(self._number())
                if den == 0:
                    raise ParseError("zero denominator in exponent", pos, self.text)
                value /= den
            self.expect(")")
            return sign * value
        sign = 1
        if text == "-":
            self.take()
            sign = -1
        if self.peek()[0] != "num":
            raise ParseError("exponent must be a rational constant", self.peek()[2], self.text)
        return sign * Fraction(self._number())

    def base(self) -> Expr:
        kind, text, pos = self.take()
        if kind == "num":
            return Const(float(text))
        if kind == "name":
            if text in FUNCTIONS:
                self.expect("(")
                args = [self.expr()]
                while self.peek()[1] == ",":
                    self.take()
                    args.append(self.expr())
                self.expect(")")
                if len(args) != FUNCTIONS[text]:
                    raise ParseError(
                        f"{text} takes {FUNCTIONS[text]} argument(s), got {len(args)}", pos, self.text
                    )
                return Func(text, tuple(args))
            if text not in self.declared:
                raise UndeclaredSymbolError(text, self.coords)
            return Sym(text)
        if text == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(text)
        raise ParseError(f"unexpected {found}", pos, self.text)


def parse(text: str, coords: Sequence[str]) -> Expr:
    """Parse ``text`` into an expression over the declared ``coords``.

    Raises
    ------
    ParseError
        On malformed input; carries the character position.
    UndeclaredSymbolError
        When a name is neither a declared coordinate nor a known function.
    """
    if not coords:
        raise ValueError("coordinate list must be nonempty")
    p = _Parser(text, coords)
    node = p.expr()
    if p.peek()[0] != "end":
        p.error(f"unexpected {p.peek()[1]!r}")
    return node
