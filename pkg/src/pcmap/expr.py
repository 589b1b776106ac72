"""Branch expressions over ``x``.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := number | 'x' | 'sqrt' '(' expr ')' | '(' expr ')'

Trees are immutable tuples of :class:`Num`, :class:`Var`, :class:`Sqrt` and
:class:`BinOp` nodes.  They can be evaluated pointwise (compiled to closures,
scalar or numpy input) and over intervals for conservative range bounds.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .errors import MapSpecSyntaxError


@dataclass(frozen=True)
class Num:
    value: float
    text: str


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Sqrt:
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


Node = Union[Num, Var, Sqrt, BinOp]

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/()]))"
)


def _tokenize(text: str, line: int, col0: int):
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            stripped = len(text[pos:]) - len(text[pos:].lstrip())
            raise MapSpecSyntaxError(
                f"unexpected character {text[pos + stripped]!r} in expression",
                line, col0 + pos + stripped)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), col0 + start))
        pos = m.end()
    tokens.append(("end", "", col0 + len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, line: int, col0: int):
        self.tokens = _tokenize(text, line, col0)
        self.i = 0
        self.line = line

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, msg, tok):
        raise MapSpecSyntaxError(msg, self.line, tok[2])

    def expect_op(self, op):
        tok = self.take()
        if tok[0] != "op" or tok[1] != op:
            self.fail(f"expected {op!r}, found {tok[1] or 'end of expression'!r}", tok)

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.factor()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            node = BinOp(op, node, self.factor())
        return node

    def factor(self) -> Node:
        tok = self.take()
        kind, text = tok[0], tok[1]
        if kind == "num":
            return Num(float(text), text)
        if kind == "name":
            if text == "x":
                return Var()
            if text == "sqrt":
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")")
                return Sqrt(arg)
            self.fail(f"unknown name {text!r}", tok)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        self.fail(f"unexpected {text or 'end of expression'!r}", tok)


def parse_expr(text: str, line: int = 1, column: int = 1) -> Node:
    """Parse ``text``; syntax errors report positions offset by ``column``."""
    parser = _Parser(text, line, column)
    node = parser.expr()
    tok = parser.peek()
    if tok[0] != "end":
        parser.fail(f"unexpected {tok[1]!r} after expression", tok)
    return node


def node_count(node: Node) -> int:
    if isinstance(node, (Num, Var)):
        return 1
    if isinstance(node, Sqrt):
        return 1 + node_count(node.arg)
    return 1 + node_count(node.left) + node_count(node.right)


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def to_text(node: Node, parent_prec: int = 0, right_side: bool = False) -> str:
    """Canonical source text; re-parses to an equal tree."""
    if isinstance(node, Num):
        return node.text
    if isinstance(node, Var):
        return "x"
    if isinstance(node, Sqrt):
        return f"sqrt({to_text(node.arg)})"
    prec = _PREC[node.op]
    text = f"{to_text(node.left, prec)} {node.op} {to_text(node.right, prec, True)}"
    if prec < parent_prec or (right_side and prec == parent_prec):
        return f"({text})"
    return text


def compile_expr(node: Node, vectorized: bool = False) -> Callable:
    """Compile ``node`` to a one-argument callable.

    With ``vectorized`` the callable accepts numpy arrays.  Domain failures
    (negative sqrt argument, division by zero) surface as ``ValueError`` or
    ``ZeroDivisionError`` in scalar mode and as nan/inf in vectorized mode.
    """
    sqrt = np.sqrt if vectorized else math.sqrt
    if isinstance(node, Num):
        v = node.value
        return lambda x: v + 0.0 * x if vectorized else v
    if isinstance(node, Var):
        return lambda x: x
    if isinstance(node, Sqrt):
        arg = compile_expr(node.arg, vectorized)
        return lambda x: sqrt(arg(x))
    left = compile_expr(node.left, vectorized)
    right = compile_expr(node.right, vectorized)
    if node.op == "+":
        return lambda x: left(x) + right(x)
    if node.op == "-":
        return lambda x: left(x) - right(x)
    if node.op == "*":
        return lambda x: left(x) * right(x)
    return lambda x: left(x) / right(x)


class IntervalDomainError(ValueError):
    """Interval evaluation met sqrt of a negative range or a zero divisor."""


def interval_eval(node: Node, lo: float, hi: float) -> tuple[float, float]:
    """Conservative enclosure of the range of ``node`` over ``[lo, hi]``.

    Plain interval arithmetic: sound but subject to the dependency problem,
    so the bound may be loose.
    """
    if isinstance(node, Num):
        return node.value, node.value
    if isinstance(node, Var):
        return lo, hi
    if isinstance(node, Sqrt):
        a, b = interval_eval(node.arg, lo, hi)
        if a < 0:
            raise IntervalDomainError("sqrt argument range reaches below 0")
        return math.sqrt(a), math.sqrt(b)
    a, b = interval_eval(node.left, lo, hi)
    c, d = interval_eval(node.right, lo, hi)
    if node.op == "+":
        return a + c, b + d
    if node.op == "-":
        return a - d, b - c
    if node.op == "/":
        if c <= 0 <= d:
            raise IntervalDomainError("divisor range contains 0")
        c, d = 1.0 / d, 1.0 / c
    products = (a * c, a * d, b * c, b * d)
    return min(products), max(products)
