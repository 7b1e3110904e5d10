"""Closed-form scalar field expressions and their parser.

The grammar is deliberately small: coordinates x1..xn, real literals, + - * /,
integer powers with ^, and the elementary functions sqrt/exp/log/sin/cos.
Parsing is recursive descent with ^ binding tighter than * and /, which bind
tighter than + and -.  Errors carry the source position.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .jets import (Jet, jet_cos, jet_exp, jet_log, jet_powi, jet_recip,
                   jet_sin, jet_sqrt)

_FUNCTIONS = ("sqrt", "exp", "log", "sin", "cos")


class Expr:
    """Base expression node."""

    def jet(self, coords, degree: int) -> Jet:
        raise NotImplementedError

    def is_zero(self) -> bool:
        return False

    def __str__(self):
        raise NotImplementedError


class Const(Expr):
    def __init__(self, value):
        self.value = float(value)

    def jet(self, coords, degree):
        batch = np.asarray(coords, dtype=float).shape[:-1]
        return Jet.constant(np.full(batch, self.value), _dim_of(coords), degree)

    def is_zero(self):
        return self.value == 0.0

    def __str__(self):
        if self.value == int(self.value) and abs(self.value) < 1e15:
            return str(int(self.value))
        return repr(self.value)


class Coord(Expr):
    def __init__(self, index):
        self.index = int(index)  # 1-based, as written in scene files

    def jet(self, coords, degree):
        dim = _dim_of(coords)
        if not 1 <= self.index <= dim:
            raise ConfigError(f"coordinate x{self.index} out of range for dim {dim}")
        return Jet.coordinate(self.index - 1, coords, dim, degree)

    def __str__(self):
        return f"x{self.index}"


class BinOp(Expr):
    op = "?"

    def __init__(self, left, right):
        self.left = left
        self.right = right

    def __str__(self):
        return f"({self.left} {self.op} {self.right})"


class Add(BinOp):
    op = "+"

    def jet(self, coords, degree):
        return self.left.jet(coords, degree) + self.right.jet(coords, degree)


class Sub(BinOp):
    op = "-"

    def jet(self, coords, degree):
        return self.left.jet(coords, degree) - self.right.jet(coords, degree)


class Mul(BinOp):
    op = "*"

    def is_zero(self):
        return self.left.is_zero() or self.right.is_zero()

    def jet(self, coords, degree):
        return self.left.jet(coords, degree) * self.right.jet(coords, degree)


class Div(BinOp):
    op = "/"

    def is_zero(self):
        return self.left.is_zero()

    def jet(self, coords, degree):
        denom = self.right.jet(coords, degree)
        return self.left.jet(coords, degree) * jet_recip(denom, subexpr=str(self.right))


class Neg(Expr):
    def __init__(self, operand):
        self.operand = operand

    def is_zero(self):
        return self.operand.is_zero()

    def jet(self, coords, degree):
        return -self.operand.jet(coords, degree)

    def __str__(self):
        return f"(-{self.operand})"


class Pow(Expr):
    """Integer power; negative exponents go through the reciprocal."""

    def __init__(self, base, exponent):
        self.base = base
        self.exponent = int(exponent)

    def is_zero(self):
        return self.base.is_zero() and self.exponent > 0

    def jet(self, coords, degree):
        return jet_powi(self.base.jet(coords, degree), self.exponent)

    def __str__(self):
        return f"({self.base}^{self.exponent})"


class Func(Expr):
    def __init__(self, name, operand):
        if name not in _FUNCTIONS:
            raise ConfigError(f"unsupported function '{name}'")
        self.name = name
        self.operand = operand

    def jet(self, coords, degree):
        inner = self.operand.jet(coords, degree)
        sub = str(self)
        if self.name == "sqrt":
            return jet_sqrt(inner, subexpr=sub)
        if self.name == "exp":
            return jet_exp(inner)
        if self.name == "log":
            return jet_log(inner, subexpr=sub)
        if self.name == "sin":
            return jet_sin(inner)
        return jet_cos(inner)

    def __str__(self):
        return f"{self.name}({self.operand})"


def _dim_of(coords):
    return np.asarray(coords).shape[-1]


ZERO = Const(0.0)
ONE = Const(1.0)


# -- parser -------------------------------------------------------------------

class _Parser:
    def __init__(self, text):
        self.text = text
        self.pos = 0

    def error(self, message):
        raise ConfigError(f"parse error at column {self.pos + 1}: {message} "
                          f"in '{self.text}'")

    def peek(self):
        self._skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def _skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def expect(self, ch):
        if self.peek() != ch:
            self.error(f"expected '{ch}'")
        self.pos += 1

    def parse(self):
        expr = self.expression()
        if self.peek():
            self.error("trailing input")
        return expr

    def expression(self):
        node = self.term()
        while self.peek() and self.peek() in "+-":
            op = self.peek()
            self.pos += 1
            rhs = self.term()
            node = Add(node, rhs) if op == "+" else Sub(node, rhs)
        return node

    def term(self):
        node = self.unary()
        while self.peek() and self.peek() in "*/":
            op = self.peek()
            self.pos += 1
            rhs = self.unary()
            node = Mul(node, rhs) if op == "*" else Div(node, rhs)
        return node

    def unary(self):
        if self.peek() == "-":
            self.pos += 1
            return Neg(self.unary())
        if self.peek() == "+":
            self.pos += 1
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek() == "^":
            self.pos += 1
            return Pow(base, self.int_exponent())
        return base

    def int_exponent(self):
        self._skip_ws()
        sign = 1
        if self.peek() == "(":
            self.pos += 1
            exp = self.int_exponent()
            self.expect(")")
            return exp
        if self.peek() == "-":
            sign = -1
            self.pos += 1
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        if start == self.pos:
            self.error("expected integer exponent")
        return sign * int(self.text[start:self.pos])

    def atom(self):
        ch = self.peek()
        if ch == "(":
            self.pos += 1
            node = self.expression()
            self.expect(")")
            return node
        if ch.isdigit() or ch == ".":
            return self.number()
        if ch.isalpha():
            return self.name()
        self.error("expected a number, name, or '('")

    def number(self):
        start = self.pos
        while self.pos < len(self.text) and (self.text[self.pos].isdigit()
                                             or self.text[self.pos] == "."):
            self.pos += 1
        if self.pos < len(self.text) and self.text[self.pos] in "eE":
            mark = self.pos
            self.pos += 1
            if self.pos < len(self.text) and self.text[self.pos] in "+-":
                self.pos += 1
            if self.pos < len(self.text) and self.text[self.pos].isdigit():
                while self.pos < len(self.text) and self.text[self.pos].isdigit():
                    self.pos += 1
            else:
                self.pos = mark
        try:
            return Const(float(self.text[start:self.pos]))
        except ValueError:
            self.error(f"bad number literal '{self.text[start:self.pos]}'")

    def name(self):
        start = self.pos
        while self.pos < len(self.text) and (self.text[self.pos].isalnum()
                                             or self.text[self.pos] == "_"):
            self.pos += 1
        word = self.text[start:self.pos]
        if word[0] == "x" and word[1:].isdigit():
            return Coord(int(word[1:]))
        if word in _FUNCTIONS:
            self.expect("(")
            inner = self.expression()
            self.expect(")")
            return Func(word, inner)
        self.pos = start
        self.error(f"unknown name '{word}'")


def parse_expr(text: str) -> Expr:
    if not isinstance(text, str) or not text.strip():
        raise ConfigError("expression must be a non-empty string")
    return _Parser(text).parse()
