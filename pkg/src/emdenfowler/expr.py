"""Coefficient expressions: a small closed grammar in the single variable ``t``.

Grammar (lowest to highest precedence)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?          # right-associative
    atom   := NUMBER | 't' | FUNC '(' expr ')' | '(' expr ')'

Evaluation is vectorised over numpy arrays. Every evaluation takes the point
``t`` together with its complement ``tc = 1 - t``; the subtree ``1 - t`` is
evaluated from ``tc`` directly so that factors such as ``(1-t)^(-0.5)`` keep
full relative precision next to ``t = 1``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

__all__ = [
    "Expression",
    "EndpointOrders",
    "ExpressionError",
    "ExpressionSyntaxError",
    "DomainError",
    "DivergentValueError",
    "parse",
    "evaluate",
    "estimate_endpoint_order",
    "ladder_order",
    "LADDER",
]

LADDER = np.array([1e-2, 1e-3, 1e-4, 1e-5, 1e-6])


class ExpressionError(ValueError):
    pass


class ExpressionSyntaxError(ExpressionError):
    def __init__(self, message, offset):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class DomainError(ExpressionError):
    pass


class DivergentValueError(ExpressionError):
    pass


# --- AST -----------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    name: str
    arg: "Node"


Node = Union[Num, Var, Neg, BinOp, Call]

_FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt", "abs")

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>\*\*|[-+*/^()]))"
)


def _tokenize(text):
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ExpressionSyntaxError(f"unexpected character {text[pos]!r}", pos)
        start = m.start(m.lastgroup)
        kind = m.lastgroup
        value = m.group(kind)
        if value == "**":
            raise ExpressionSyntaxError("'**' is not an operator (use '^')", start)
        tokens.append((kind, value, start))
        pos = m.end()
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, text):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, pos = self.peek()
        if val != value or kind != "op":
            found = "end of input" if kind == "end" else repr(val)
            raise ExpressionSyntaxError(f"expected {value!r}, found {found}", pos)
        self.advance()

    def parse(self):
        node = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ExpressionSyntaxError(f"unexpected token {val!r}", pos)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.advance()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in ("*", "/"):
            op = self.advance()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[0] == "op" and self.peek()[1] == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        kind, val, pos = self.advance()
        if kind == "num":
            return Num(float(val))
        if kind == "name":
            if val == "t":
                return Var()
            if val in _FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(val, arg)
            if self.peek()[1] == "(":
                raise ExpressionSyntaxError(f"unknown function {val!r}", pos)
            raise ExpressionSyntaxError(f"unknown identifier {val!r}", pos)
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(val)
        raise ExpressionSyntaxError(f"expected an operand, found {found}", pos)


# --- printing --------------------------------------------------------------

def to_text(node: Node) -> str:
    """Canonical, fully parenthesised text; ``parse(to_text(n)) == n``."""
    if isinstance(node, Num):
        text = repr(float(node.value))
        return f"({text})" if node.value < 0 else text
    if isinstance(node, Var):
        return "t"
    if isinstance(node, Neg):
        return f"(-{to_text(node.operand)})"
    if isinstance(node, BinOp):
        return f"({to_text(node.left)}{node.op}{to_text(node.right)})"
    return f"{node.name}({to_text(node.arg)})"


def substitute_reflection(node: Node) -> Node:
    """Replace ``t`` by ``1 - t`` throughout."""
    if isinstance(node, Var):
        return BinOp("-", Num(1.0), Var())
    if isinstance(node, Num):
        return node
    if isinstance(node, Neg):
        return Neg(substitute_reflection(node.operand))
    if isinstance(node, BinOp):
        # 1 - t reflects to t exactly, keeping double reflection an identity
        if _is_complement(node):
            return Var()
        return BinOp(node.op, substitute_reflection(node.left), substitute_reflection(node.right))
    return Call(node.name, substitute_reflection(node.arg))


def _is_complement(node):
    return (
        isinstance(node, BinOp)
        and node.op == "-"
        and isinstance(node.left, Num)
        and node.left.value == 1.0
        and isinstance(node.right, Var)
    )


# --- evaluation ------------------------------------------------------------

def _check(values, what):
    if np.any(np.isnan(values)):
        raise DomainError(f"{what} is undefined at some evaluation point")
    if np.any(np.isinf(values)):
        raise DivergentValueError(f"{what} is infinite at some evaluation point")
    return values


def _eval(node, t, tc):
    if isinstance(node, Num):
        return np.full_like(t, node.value)
    if isinstance(node, Var):
        return t
    if isinstance(node, Neg):
        return -_eval(node.operand, t, tc)
    if isinstance(node, Call):
        x = _eval(node.arg, t, tc)
        if node.name == "log":
            if np.any(x <= 0):
                raise DomainError("log of a non-positive value")
            return np.log(x)
        if node.name == "sqrt":
            if np.any(x < 0):
                raise DomainError("sqrt of a negative value")
            return np.sqrt(x)
        if node.name == "exp":
            return _check(np.exp(x), "exp")
        return getattr(np, node.name)(x)
    if _is_complement(node):
        return tc
    a = _eval(node.left, t, tc)
    b = _eval(node.right, t, tc)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return _check(a * b, "product")
    if node.op == "/":
        if np.any(b == 0):
            raise DomainError("division by zero")
        return _check(a / b, "quotient")
    # power
    if np.any((a < 0) & (b != np.round(b))):
        raise DomainError("negative base with non-integer exponent")
    if np.any((a == 0) & (b < 0)):
        raise DivergentValueError("zero raised to a negative power")
    return _check(np.power(a, b), "power")


@dataclass(frozen=True, eq=False)
class Expression:
    ast: Node
    source: str

    def __call__(self, t, tc=None):
        return evaluate(self, t, tc)

    def reflected(self) -> "Expression":
        ast = substitute_reflection(self.ast)
        return Expression(ast, to_text(ast))

    def is_zero(self) -> bool:
        return isinstance(self.ast, Num) and self.ast.value == 0.0

    def __str__(self):
        return self.source

    def __repr__(self):
        return f"Expression({self.source!r})"


def parse(text: str) -> Expression:
    if not text or not text.strip():
        raise ExpressionSyntaxError("empty expression", 0)
    return Expression(_Parser(text).parse(), text)


def evaluate(e: Expression, t, tc=None):
    """Evaluate at scalar or array ``t``; raises rather than returning NaN/inf."""
    scalar = np.ndim(t) == 0
    t = np.atleast_1d(np.asarray(t, dtype=float))
    tc = 1.0 - t if tc is None else np.atleast_1d(np.asarray(tc, dtype=float))
    with np.errstate(all="ignore"):
        values = _eval(e.ast, t, tc)
        values = _check(np.broadcast_to(values, t.shape).astype(float), repr(e.source))
    return float(values[0]) if scalar else values


# --- endpoint orders -----------------------------------------------------------

@dataclass(frozen=True)
class EndpointOrders:
    """Growth orders: f ~ C t^sigma0 near 0 and f ~ C (1-t)^sigma1 near 1."""

    sigma0: float
    sigma1: float
    declared: bool = False
    residual0: float = 0.0
    residual1: float = 0.0


def ladder_order(func: Callable, endpoint: int):
    """Least-squares log-log slope of |func| over the distance ladder.

    ``func(t, tc)`` is sampled at distances 1e-2 .. 1e-6 from ``endpoint``.
    Returns ``(slope, rms_residual)``; any zero sample gives ``(inf, 0.0)``.
    """
    d = LADDER
    if endpoint == 0:
        values = func(d.copy(), 1.0 - d)
    else:
        values = func(1.0 - d, d.copy())
    values = np.abs(np.asarray(values, dtype=float))
    if np.any(values == 0):
        return math.inf, 0.0
    x = np.log(d)
    y = np.log(values)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return float(slope), float(np.sqrt(np.mean(resid**2)))


def estimate_endpoint_order(e: Expression, endpoint: int):
    """Returns ``(order, fit_residual)`` of ``e`` at ``endpoint`` (0 or 1)."""
    if endpoint not in (0, 1):
        raise ValueError("endpoint must be 0 or 1")
    return ladder_order(e, endpoint)
