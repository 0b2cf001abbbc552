"""A small expression language for boundary data.

Grammar (LL(1))::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := ("-" | "+") unary | power
    power  := atom ("^" unary)?
    atom   := NUMBER | NAME | NAME "(" expr ")" | "(" expr ")"

``^`` is right associative and binds tighter than a leading minus, so
``-x^2`` is ``-(x^2)``. Variables are ``x``, ``y`` and ``z = x + iy``;
constants ``pi``, ``e``, ``i``. Evaluation is complex throughout.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import ExprSyntaxError, NonRealResult

VARIABLES = ("x", "y", "z")
CONSTANTS = {"pi": np.pi, "e": np.e, "i": 1j}
FUNCTIONS = {
    "re": np.real,
    "im": np.imag,
    "abs": np.abs,
    "exp": np.exp,
    "log": np.log,
    "sin": np.sin,
    "cos": np.cos,
}
REAL_TOL = 1e-12


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str
    arg: object


@dataclass(frozen=True)
class Bin:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    fn: str
    arg: object


_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)|([A-Za-z_]\w*)|(\S))")


def tokenize(text):
    """List of ``(kind, value, position)``; kinds are num, name, op, end."""
    toks = []
    pos = 0
    while True:
        m = _TOKEN.match(text, pos)
        if not m:
            break
        num, name, op = m.groups()
        start = m.start(m.lastindex)
        if num is not None:
            toks.append(("num", num, start))
        elif name is not None:
            toks.append(("name", name, start))
        else:
            if op not in "+-*/^()":
                raise ExprSyntaxError(start, ["operand", "operator"], f"unexpected character {op!r}")
            toks.append(("op", op, start))
        pos = m.end()
    toks.append(("end", "", len(text.rstrip()) if text.strip() else len(text)))
    return toks


class _Parser:
    def __init__(self, text):
        self.toks = tokenize(text)
        self.k = 0

    @property
    def tok(self):
        return self.toks[self.k]

    def fail(self, expected):
        kind, value, pos = self.tok
        got = "end of input" if kind == "end" else repr(value)
        raise ExprSyntaxError(pos, expected, f"expected {' or '.join(expected)}, got {got}")

    def accept(self, op):
        if self.tok[0] == "op" and self.tok[1] == op:
            self.k += 1
            return True
        return False

    def expect(self, op):
        if not self.accept(op):
            self.fail([repr(op)])

    def parse(self):
        node = self.expr()
        if self.tok[0] != "end":
            self.fail(["operator", "end of input"])
        return node

    def expr(self):
        node = self.term()
        while self.tok[0] == "op" and self.tok[1] in "+-":
            op = self.tok[1]
            self.k += 1
            node = Bin(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.tok[0] == "op" and self.tok[1] in "*/":
            op = self.tok[1]
            self.k += 1
            node = Bin(op, node, self.unary())
        return node

    def unary(self):
        if self.tok[0] == "op" and self.tok[1] in "+-":
            op = self.tok[1]
            self.k += 1
            return Unary(op, self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.accept("^"):
            return Bin("^", base, self.unary())
        return base

    def atom(self):
        kind, value, pos = self.tok
        if kind == "num":
            self.k += 1
            return Num(float(value))
        if kind == "name":
            self.k += 1
            if value in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(value, arg)
            if value in VARIABLES:
                return Var(value)
            if value in CONSTANTS:
                return Const(value)
            raise ExprSyntaxError(pos, ["variable", "constant", "function"], f"unknown name {value!r}")
        if self.accept("("):
            node = self.expr()
            self.expect(")")
            return node
        self.fail(["number", "name", "'('"])


def to_text(node) -> str:
    """Fully parenthesized source; parses back to an equal tree."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, (Var, Const)):
        return node.name
    if isinstance(node, Unary):
        return f"({node.op}{to_text(node.arg)})"
    if isinstance(node, Bin):
        return f"({to_text(node.left)}{node.op}{to_text(node.right)})"
    if isinstance(node, Call):
        return f"{node.fn}({to_text(node.arg)})"
    raise TypeError(f"not an expression node: {node!r}")


def _ipow(base, n):
    result = np.ones_like(base)
    if n < 0:
        base = 1 / base
        n = -n
    while n:
        if n & 1:
            result = result * base
        base = base * base
        n >>= 1
    return result


def evaluate(node, x, y):
    """Complex value of ``node`` at ``(x, y)``; broadcasts over arrays."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    shape = np.broadcast(x, y).shape

    def ev(n):
        if isinstance(n, Num):
            return np.full(shape, n.value, dtype=complex)
        if isinstance(n, Var):
            if n.name == "x":
                return np.broadcast_to(x, shape).astype(complex)
            if n.name == "y":
                return np.broadcast_to(y, shape).astype(complex)
            return x + 1j * y + np.zeros(shape)
        if isinstance(n, Const):
            return np.full(shape, CONSTANTS[n.name], dtype=complex)
        if isinstance(n, Unary):
            a = ev(n.arg)
            return -a if n.op == "-" else a
        if isinstance(n, Call):
            return np.asarray(FUNCTIONS[n.fn](ev(n.arg)), dtype=complex)
        a = ev(n.left)
        if n.op == "^" and isinstance(n.right, Num) and n.right.value.is_integer() and abs(n.right.value) <= 64:
            return _ipow(a, int(n.right.value))
        b = ev(n.right)
        if n.op == "+":
            return a + b
        if n.op == "-":
            return a - b
        if n.op == "*":
            return a * b
        if n.op == "/":
            return a / b
        return a**b

    with np.errstate(all="ignore"):
        return ev(node)


@dataclass(frozen=True)
class BoundaryExpr:
    source: str
    ast: object

    def __call__(self, x, y):
        """Real values; raises :class:`NonRealResult` on a complex result."""
        v = evaluate(self.ast, x, y)
        bad = np.abs(v.imag) > REAL_TOL * np.maximum(1.0, np.abs(v.real))
        if np.any(bad) or not np.all(np.isfinite(v)):
            k = int(np.flatnonzero(bad | ~np.isfinite(v))[0])
            raise NonRealResult(f"{self.source!r} is not a finite real value: {np.ravel(v)[k]}")
        return v.real

    def __str__(self):
        return to_text(self.ast)


def parse_expr(text: str) -> BoundaryExpr:
    return BoundaryExpr(text, _Parser(text).parse())
