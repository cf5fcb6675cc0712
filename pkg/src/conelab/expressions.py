"""Differentiable expression trees for the potential fields.

Expressions are parsed from infix strings over coordinates ``x1..xd``,
numeric literals, ``+ - * / **`` and the smooth primitives ``sin``, ``cos``,
``exp``.  Derivatives are propagated forward through the tree, so gradients
and Hessians are exact up to roundoff.  Evaluation broadcasts over trailing
point batches: ``x`` may be a single point of shape ``(d,)`` or a batch
``(n, d)``.

``abs`` (or any other non-smooth primitive) is rejected at parse time: the
conical norm term of a potential is the only non-smooth object in the
laboratory and it is handled separately, never inside a field expression.
"""

from __future__ import annotations

import math
import re

import numpy as np

from .errors import ParseError

__all__ = ["Node", "parse_expression", "ScalarField"]

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/()]))"
)

_SMOOTH_FUNCS = ("sin", "cos", "exp")


class Node:
    """Base expression node: evaluates value, gradient and Hessian."""

    def eval(self, x: np.ndarray, order: int):
        """Return ``(v,)``, ``(v, g)`` or ``(v, g, H)`` depending on order.

        ``x`` has shape ``(..., d)``; ``v`` has shape ``(...)``, ``g``
        ``(..., d)`` and ``H`` ``(..., d, d)``.
        """
        raise NotImplementedError

    def constant_value(self):
        """Float if the subtree is a constant, else None."""
        return None


class Const(Node):
    def __init__(self, value: float):
        self.value = float(value)

    def eval(self, x, order):
        base = np.zeros(x.shape[:-1])
        v = base + self.value
        if order == 0:
            return (v,)
        d = x.shape[-1]
        g = np.zeros(x.shape[:-1] + (d,))
        if order == 1:
            return v, g
        return v, g, np.zeros(x.shape[:-1] + (d, d))

    def constant_value(self):
        return self.value


class Coord(Node):
    def __init__(self, index: int):
        self.index = index  # zero-based

    def eval(self, x, order):
        v = x[..., self.index].copy()
        if order == 0:
            return (v,)
        d = x.shape[-1]
        g = np.zeros(x.shape[:-1] + (d,))
        g[..., self.index] = 1.0
        if order == 1:
            return v, g
        return v, g, np.zeros(x.shape[:-1] + (d, d))


class _Binary(Node):
    def __init__(self, left: Node, right: Node):
        self.left = left
        self.right = right


class Add(_Binary):
    def eval(self, x, order):
        a = self.left.eval(x, order)
        b = self.right.eval(x, order)
        return tuple(u + v for u, v in zip(a, b))

    def constant_value(self):
        a, b = self.left.constant_value(), self.right.constant_value()
        return None if a is None or b is None else a + b


class Sub(_Binary):
    def eval(self, x, order):
        a = self.left.eval(x, order)
        b = self.right.eval(x, order)
        return tuple(u - v for u, v in zip(a, b))

    def constant_value(self):
        a, b = self.left.constant_value(), self.right.constant_value()
        return None if a is None or b is None else a - b


def _outer(a, b):
    return a[..., :, None] * b[..., None, :]


class Mul(_Binary):
    def eval(self, x, order):
        a = self.left.eval(x, order)
        b = self.right.eval(x, order)
        v = a[0] * b[0]
        if order == 0:
            return (v,)
        g = a[1] * b[0][..., None] + b[1] * a[0][..., None]
        if order == 1:
            return v, g
        h = (
            a[2] * b[0][..., None, None]
            + b[2] * a[0][..., None, None]
            + _outer(a[1], b[1])
            + _outer(b[1], a[1])
        )
        return v, g, h

    def constant_value(self):
        a, b = self.left.constant_value(), self.right.constant_value()
        if a == 0.0 or b == 0.0:
            return 0.0
        return None if a is None or b is None else a * b


class Div(_Binary):
    def eval(self, x, order):
        a = self.left.eval(x, order)
        b = self.right.eval(x, order)
        w = 1.0 / b[0]
        v = a[0] * w
        if order == 0:
            return (v,)
        # f' = u'/v - u v'/v^2
        g = a[1] * w[..., None] - b[1] * (a[0] * w * w)[..., None]
        if order == 1:
            return v, g
        w2 = (w * w)[..., None, None]
        h = (
            a[2] * w[..., None, None]
            - (_outer(a[1], b[1]) + _outer(b[1], a[1])) * w2
            - b[2] * (a[0][..., None, None] * w2)
            + 2.0 * _outer(b[1], b[1]) * (a[0] * w * w * w)[..., None, None]
        )
        return v, g, h

    def constant_value(self):
        a, b = self.left.constant_value(), self.right.constant_value()
        if a is None or b in (None, 0.0):
            return None
        return a / b


class Neg(Node):
    def __init__(self, child: Node):
        self.child = child

    def eval(self, x, order):
        return tuple(-u for u in self.child.eval(x, order))

    def constant_value(self):
        c = self.child.constant_value()
        return None if c is None else -c


class Pow(Node):
    """Power with a constant real exponent."""

    def __init__(self, base: Node, exponent: float):
        self.base = base
        self.exponent = float(exponent)

    def eval(self, x, order):
        c = self.exponent
        a = self.base.eval(x, order)
        u = a[0]
        v = u**c
        if order == 0:
            return (v,)
        du = c * u ** (c - 1.0)
        g = a[1] * du[..., None]
        if order == 1:
            return v, g
        ddu = c * (c - 1.0) * u ** (c - 2.0)
        h = _outer(a[1], a[1]) * ddu[..., None, None] + a[2] * du[..., None, None]
        return v, g, h

    def constant_value(self):
        b = self.base.constant_value()
        return None if b is None else b**self.exponent


class Call(Node):
    _TABLE = {
        "sin": (np.sin, np.cos, lambda u: -np.sin(u)),
        "cos": (np.cos, lambda u: -np.sin(u), lambda u: -np.cos(u)),
        "exp": (np.exp, np.exp, np.exp),
    }

    def __init__(self, name: str, arg: Node):
        self.name = name
        self.arg = arg

    def eval(self, x, order):
        f, df, ddf = self._TABLE[self.name]
        a = self.arg.eval(x, order)
        v = f(a[0])
        if order == 0:
            return (v,)
        du = df(a[0])
        g = a[1] * du[..., None]
        if order == 1:
            return v, g
        h = _outer(a[1], a[1]) * ddf(a[0])[..., None, None] + a[2] * du[..., None, None]
        return v, g, h

    def constant_value(self):
        c = self.arg.constant_value()
        if c is None:
            return None
        return float({"sin": math.sin, "cos": math.cos, "exp": math.exp}[self.name](c))


class _Parser:
    def __init__(self, text: str, dimension: int):
        self.text = text
        self.dimension = dimension
        self.tokens = self._tokenize(text)
        self.pos = 0

    @staticmethod
    def _tokenize(text):
        tokens = []
        pos = 0
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if m is None:
                if text[pos:].strip() == "":
                    break
                raise ParseError(f"unexpected character {text[pos]!r} in {text!r}")
            tokens.append((m.lastgroup, m.group(m.lastgroup)))
            pos = m.end()
        tokens.append(("end", ""))
        return tokens

    def _peek(self):
        return self.tokens[self.pos]

    def _next(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def parse(self) -> Node:
        node = self._expr()
        if self._peek()[0] != "end":
            raise ParseError(f"trailing input near {self._peek()[1]!r} in {self.text!r}")
        return node

    def _expr(self):
        node = self._term()
        while self._peek() == ("op", "+") or self._peek() == ("op", "-"):
            op = self._next()[1]
            rhs = self._term()
            node = Add(node, rhs) if op == "+" else Sub(node, rhs)
        return node

    def _term(self):
        node = self._unary()
        while self._peek() == ("op", "*") or self._peek() == ("op", "/"):
            op = self._next()[1]
            rhs = self._unary()
            node = Mul(node, rhs) if op == "*" else Div(node, rhs)
        return node

    def _unary(self):
        if self._peek() == ("op", "-"):
            self._next()
            return Neg(self._unary())
        if self._peek() == ("op", "+"):
            self._next()
            return self._unary()
        return self._power()

    def _power(self):
        base = self._atom()
        if self._peek() == ("op", "**"):
            self._next()
            exponent = self._unary()
            c = exponent.constant_value()
            if c is None:
                raise ParseError("exponent must be a numeric constant")
            return Pow(base, c)
        return base

    def _atom(self):
        kind, value = self._next()
        if kind == "num":
            return Const(float(value))
        if kind == "name":
            if value in _SMOOTH_FUNCS:
                if self._next() != ("op", "("):
                    raise ParseError(f"expected '(' after {value}")
                arg = self._expr()
                if self._next() != ("op", ")"):
                    raise ParseError(f"unclosed argument of {value}")
                return Call(value, arg)
            if value == "abs":
                raise ParseError(
                    "abs is not allowed in field expressions; the conical norm "
                    "is the only admissible non-smooth term"
                )
            m = re.fullmatch(r"x(\d+)", value)
            if m:
                index = int(m.group(1))
                if not 1 <= index <= self.dimension:
                    raise ParseError(
                        f"coordinate {value} outside dimension {self.dimension}"
                    )
                return Coord(index - 1)
            raise ParseError(f"unknown symbol {value!r}")
        if (kind, value) == ("op", "("):
            node = self._expr()
            if self._next() != ("op", ")"):
                raise ParseError("unbalanced parentheses")
            return node
        raise ParseError(f"unexpected token {value!r} in {self.text!r}")


def parse_expression(text: str, dimension: int) -> Node:
    """Parse an infix expression over x1..xd into an evaluable tree."""
    return _Parser(text, dimension).parse()


class ScalarField:
    """Smooth scalar field over R^d backed by an expression tree.

    Invariant: gradients and Hessians come from exact forward-mode
    differentiation of the tree, so they agree with finite differences of
    the value to roundoff-limited accuracy.
    """

    def __init__(self, expression: str, dimension: int):
        if dimension < 1:
            raise ParseError("dimension must be positive")
        self.expression = expression
        self.dimension = int(dimension)
        self._tree = parse_expression(expression, dimension)
        const = self._tree.constant_value()
        self.is_zero = const == 0.0

    def value(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self._tree.eval(x, 0)[0]

    def gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self._tree.eval(x, 1)[1]

    def hessian(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self._tree.eval(x, 2)[2]

    def value_gradient(self, x):
        x = np.asarray(x, dtype=float)
        return self._tree.eval(x, 1)

    def __repr__(self):
        return f"ScalarField({self.expression!r}, d={self.dimension})"
