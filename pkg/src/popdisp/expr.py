"""Closed-form expressions in one variable ``x``.

Grammar (lowest to highest binding)::

    sum     := product (('+' | '-') product)*
    product := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := atom ('^' unary)?          # right-associative
    atom    := NUMBER | 'x' | 'pi' | FUNC '(' sum ')' | '(' sum ')'

Unary minus binds looser than ``^``, so ``-2^2`` is ``-(2^2)``.  There is no
implicit multiplication.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "Expression", "Num", "Var", "Pi", "Neg", "BinOp", "Call",
    "ExpressionSyntaxError", "DomainError",
    "parse", "evaluate", "sample", "to_text", "FUNCTIONS",
]


class ExpressionSyntaxError(ValueError):
    """Parse failure at a character offset of the source text."""

    def __init__(self, position: int, message: str):
        super().__init__(f"{message} (at offset {position})")
        self.position = position
        self.message = message


class DomainError(ArithmeticError):
    """Evaluation left the real domain (ln/sqrt of bad argument, etc.)."""

    def __init__(self, message: str, index: int | None = None):
        if index is not None:
            message = f"{message} at node {index}"
        super().__init__(message)
        self.index = index


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Pi:
    pass


@dataclass(frozen=True)
class Neg:
    arg: "Expression"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    left: "Expression"
    right: "Expression"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expression"


Expression = Union[Num, Var, Pi, Neg, BinOp, Call]


def _ln(a):
    if a <= 0:
        raise DomainError(f"ln of non-positive argument {a!r}")
    return math.log(a)


def _sqrt(a):
    if a < 0:
        raise DomainError(f"sqrt of negative argument {a!r}")
    return math.sqrt(a)


FUNCTIONS = {
    "cos": math.cos,
    "sin": math.sin,
    "exp": math.exp,
    "ln": _ln,
    "sqrt": _sqrt,
    "abs": abs,
}

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()])"
    r")"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    end = len(text.rstrip())
    while pos < end:
        m = _TOKEN.match(text, pos)
        if m is None or m.lastgroup is None:
            bad = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ExpressionSyntaxError(bad, f"unexpected character {text[bad]!r}")
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
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
            raise ExpressionSyntaxError(pos, f"expected {value!r}, found {found}")

    def parse(self) -> Expression:
        node = self.sum()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ExpressionSyntaxError(pos, f"unexpected trailing token {text!r}")
        return node

    def sum(self):
        node = self.product()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.product())
        return node

    def product(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        kind, text, pos = self.take()
        if kind == "num":
            return Num(float(text))
        if kind == "name":
            if text == "x":
                return Var()
            if text == "pi":
                return Pi()
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.sum()
                self.expect(")")
                return Call(text, arg)
            raise ExpressionSyntaxError(pos, f"unknown identifier {text!r}")
        if (kind, text) == ("op", "("):
            node = self.sum()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(text)
        raise ExpressionSyntaxError(pos, f"expected a value, found {found}")


def parse(text: str) -> Expression:
    """Parse ``text`` into an expression tree.

    Raises ExpressionSyntaxError carrying the offending offset, e.g. ``"2x"``
    fails at offset 1 because multiplication must be explicit.
    """
    if not text.isascii():
        bad = next(i for i, ch in enumerate(text) if not ch.isascii())
        raise ExpressionSyntaxError(bad, "non-ASCII character")
    return _Parser(text).parse()


def _power(a: float, b: float) -> float:
    if a < 0 and not float(b).is_integer():
        raise DomainError(f"negative base {a!r} with non-integer exponent {b!r}")
    if a == 0 and b < 0:
        raise DomainError("zero raised to a negative power")
    return a ** b


def _eval(e: Expression, x: float) -> float:
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        return x
    if isinstance(e, Pi):
        return math.pi
    if isinstance(e, Neg):
        return -_eval(e.arg, x)
    if isinstance(e, Call):
        return FUNCTIONS[e.func](_eval(e.arg, x))
    a = _eval(e.left, x)
    b = _eval(e.right, x)
    if e.op == "+":
        return a + b
    if e.op == "-":
        return a - b
    if e.op == "*":
        return a * b
    if e.op == "/":
        if b == 0:
            raise DomainError("division by zero")
        return a / b
    return _power(a, b)


def evaluate(e: Expression, x: float) -> float:
    """Evaluate ``e`` at ``x`` in IEEE double precision."""
    try:
        value = float(_eval(e, float(x)))
    except OverflowError as exc:
        raise DomainError(f"overflow at x={x!r}") from exc
    if not math.isfinite(value):
        raise DomainError(f"non-finite value at x={x!r}")
    return value


def sample(e: Expression, grid):
    """Evaluate ``e`` at every node of ``grid`` and wrap it as a ScalarField.

    Uses the scalar evaluator node by node so sampled values agree exactly
    with :func:`evaluate`.
    """
    from .grid import ScalarField

    nodes = grid.nodes()
    values = np.empty(nodes.size)
    for i, xi in enumerate(nodes):
        try:
            values[i] = evaluate(e, xi)
        except DomainError as exc:
            raise DomainError(str(exc), index=i) from exc
    return ScalarField(grid, values)


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}
_NEG_PREC = 3


def _prec(e: Expression) -> int:
    if isinstance(e, BinOp):
        return _PREC[e.op]
    if isinstance(e, Neg):
        return _NEG_PREC
    if isinstance(e, Num) and e.value < 0:
        return _NEG_PREC
    return 5


def _wrap(e: Expression, min_prec: int) -> str:
    s = to_text(e)
    return f"({s})" if _prec(e) < min_prec else s


def to_text(e: Expression) -> str:
    """Render ``e`` back to source text that parses to an equivalent tree."""
    if isinstance(e, Num):
        if not math.isfinite(e.value):
            raise ValueError("cannot print a non-finite literal")
        s = repr(abs(e.value))
        return f"-{s}" if e.value < 0 or math.copysign(1.0, e.value) < 0 else s
    if isinstance(e, Var):
        return "x"
    if isinstance(e, Pi):
        return "pi"
    if isinstance(e, Neg):
        return "-" + _wrap(e.arg, _NEG_PREC)
    if isinstance(e, Call):
        return f"{e.func}({to_text(e.arg)})"
    p = _PREC[e.op]
    if e.op == "^":
        # right-associative; a negated base needs parentheses
        return f"{_wrap(e.left, p + 1)}^{_wrap(e.right, _NEG_PREC)}"
    right_min = p + 1 if e.op in "-/" else p
    return f"{_wrap(e.left, p)}{e.op}{_wrap(e.right, right_min)}"
