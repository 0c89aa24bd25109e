"""Parsing and printing of exact chart-function expressions.

Grammar (whitespace insensitive):

    expr   := term (("+" | "-") term)*
    term   := ("-")? factor (("*")? factor)*        juxtaposition multiplies
    factor := atom ("^" ("-")? INT)?
    atom   := NUMBER | "i" | "pi" | "z" | "zbar" | "z<k>" | "zbar<k>"
              | "D" | "(" expr ")"
    NUMBER := p or p/q with integer p, q               exact rationals

Negative exponents are allowed only on D (the chart denominator) and pi;
any other denominator shape is rejected.  The printer emits the canonical
form produced by ChartFunction.__str__, which this parser round-trips.
"""

from __future__ import annotations

import re
from typing import List, Tuple

from .scalars import Scalar, rat


class ParseError(ValueError):
    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} (at position {pos})")
        self.pos = pos


_TOKEN = re.compile(
    r"\s*(?:(?P<number>\d+(?:/\d+)?)|(?P<name>[A-Za-z]+\d*)|(?P<op>[-+*^()]))"
)


def _tokenize(text: str) -> List[Tuple[str, str, int]]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            rest = text[pos:]
            if rest.strip() == "":
                break
            bad = pos + len(rest) - len(rest.lstrip())
            raise ParseError(f"unexpected character {text[bad]!r}", bad)
        if m.lastgroup is None:  # pragma: no cover
            break
        kind = m.lastgroup
        out.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    return out


class _Parser:
    def __init__(self, text: str, ring):
        self.text = text
        self.ring = ring
        self.tokens = _tokenize(text)
        self.idx = 0

    def peek(self):
        return self.tokens[self.idx] if self.idx < len(self.tokens) else None

    def next(self):
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of expression", len(self.text))
        self.idx += 1
        return tok

    def expect_op(self, op: str):
        tok = self.next()
        if tok[0] != "op" or tok[1] != op:
            raise ParseError(f"expected {op!r}", tok[2])

    def parse(self):
        value = self.expr()
        tok = self.peek()
        if tok is not None:
            raise ParseError(f"trailing input {tok[1]!r}", tok[2])
        return value

    def expr(self):
        value = self.term()
        while True:
            tok = self.peek()
            if tok and tok[0] == "op" and tok[1] in "+-":
                self.next()
                rhs = self.term()
                value = value + rhs if tok[1] == "+" else value - rhs
            else:
                return value

    def term(self):
        negate = False
        while True:
            tok = self.peek()
            if tok and tok[0] == "op" and tok[1] == "-":
                self.next()
                negate = not negate
            else:
                break
        value = self.factor()
        while True:
            tok = self.peek()
            if tok is None or (tok[0] == "op" and tok[1] in "+-)"):
                break
            if tok[0] == "op" and tok[1] == "*":
                self.next()
                value = value * self.factor()
            elif tok[0] in ("number", "name") or (tok[0] == "op" and tok[1] == "("):
                value = value * self.factor()
            else:
                raise ParseError(f"unexpected token {tok[1]!r}", tok[2])
        return (-value) if negate else value

    def factor(self):
        base, kind = self.atom()
        tok = self.peek()
        if tok and tok[0] == "op" and tok[1] == "^":
            self.next()
            sign = 1
            tok = self.next()
            if tok[0] == "op" and tok[1] == "-":
                sign = -1
                tok = self.next()
            if tok[0] != "number" or "/" in tok[1]:
                raise ParseError("exponent must be an integer", tok[2])
            e = int(tok[1])
            if sign < 0:
                if kind == "D":
                    zero_mono = ((0,) * self.ring.n, (0,) * self.ring.n)
                    return self.ring.func({zero_mono: Scalar.one()}, e)
                if kind == "pi":
                    return self.ring.const(Scalar.pi(-e))
                raise ParseError("negative exponents are only allowed on D and pi", tok[2])
            out = self.ring.one()
            for _ in range(e):
                out = out * base
            return out
        return base

    def atom(self):
        tok = self.next()
        kind, text, pos = tok
        if kind == "number":
            if "/" in text:
                p, q = text.split("/")
                return self.ring.const(Scalar.of(rat(int(p), int(q)))), "num"
            return self.ring.const(Scalar.of(int(text))), "num"
        if kind == "name":
            if text == "i":
                return self.ring.const(Scalar.i()), "num"
            if text == "pi":
                return self.ring.const(Scalar.pi()), "pi"
            if text == "D":
                if getattr(self.ring, "mode", None) != "rational":
                    raise ParseError("D is not available on a jet chart", pos)
                return self.ring.d_func(), "D"
            m = re.fullmatch(r"(zbar|z)(\d*)", text)
            if m:
                idx = int(m.group(2)) - 1 if m.group(2) else 0
                if idx < 0 or idx >= self.ring.n:
                    raise ParseError(f"variable index out of range in {text!r}", pos)
                if m.group(1) == "z":
                    return self.ring.var_z(idx), "var"
                return self.ring.var_zbar(idx), "var"
            raise ParseError(f"unknown symbol {text!r}", pos)
        if kind == "op" and text == "(":
            value = self.expr()
            self.expect_op(")")
            return value, "paren"
        raise ParseError(f"unexpected token {text!r}", pos)


def parse_expression(text: str, ring):
    """Parse an exact chart-function expression over the given ring."""
    return _Parser(text, ring).parse()


def print_chart_function(f) -> str:
    """Canonical text form (round-trips through parse_expression)."""
    return str(f)
