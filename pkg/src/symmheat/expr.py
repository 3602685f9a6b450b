"""Arithmetic expressions over the cell coordinates ``x``, ``y`` and ``r``.

Grammar (``^`` and ``**`` are the same operator, right associative)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := ('+' | '-') unary | power
    power   := atom (('^' | '**') unary)?
    atom    := NUMBER | NAME | NAME '(' expr (',' expr)* ')' | '(' expr ')'

Names are the variables ``x``, ``y``, ``r`` and the constants ``pi`` and
``e``. Functions: ``sin cos exp pow min max``.

Expressions are parsed once into a small tree and evaluated with numpy on
whole coordinate arrays.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import ExpressionError

VARIABLES = ("x", "y", "r")
CONSTANTS = {"pi": math.pi, "e": math.e}
FUNCTIONS = {
    "sin": (1, np.sin),
    "cos": (1, np.cos),
    "exp": (1, np.exp),
    "pow": (2, np.power),
    "min": (None, lambda *a: _reduce(np.minimum, a)),
    "max": (None, lambda *a: _reduce(np.maximum, a)),
}

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_]\w*)"
    r"|(?P<op>\*\*|[-+*/^(),]))"
)


def _reduce(fn, args):
    out = args[0]
    for a in args[1:]:
        out = fn(out, a)
    return out


@dataclass(frozen=True)
class Token:
    kind: str  # "num", "name", "op" or "end"
    text: str
    pos: int


def tokenize(source: str):
    tokens = []
    pos = 0
    while True:
        while pos < len(source) and source[pos].isspace():
            pos += 1
        if pos == len(source):
            break
        m = _TOKEN.match(source, pos)
        if m is None or m.end() == pos:
            raise ExpressionError(f"unexpected character {source[pos]!r} at position {pos}")
        kind = m.lastgroup
        tokens.append(Token(kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(Token("end", "", len(source)))
    return tokens


# tree nodes: ("num", value) | ("var", name) | ("neg", node)
#             | ("bin", op, left, right) | ("call", name, [args])

class Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = tokenize(source)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def _error(self, msg):
        raise ExpressionError(f"{msg} at position {self.tok.pos} in {self.source!r}")

    def _accept(self, *ops):
        if self.tok.kind == "op" and self.tok.text in ops:
            self.i += 1
            return self.tokens[self.i - 1].text
        return None

    def _expect(self, op):
        if not self._accept(op):
            self._error(f"expected {op!r}")

    def parse(self):
        if self.tok.kind == "end":
            self._error("empty expression")
        node = self.expr()
        if self.tok.kind != "end":
            self._error(f"unexpected {self.tok.text!r}")
        return node

    def expr(self):
        node = self.term()
        while (op := self._accept("+", "-")):
            node = ("bin", op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while (op := self._accept("*", "/")):
            node = ("bin", op, node, self.unary())
        return node

    def unary(self):
        if self._accept("-"):
            return ("neg", self.unary())
        if self._accept("+"):
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self._accept("^", "**"):
            return ("bin", "^", base, self.unary())
        return base

    def atom(self):
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            return ("num", float(tok.text))
        if tok.kind == "name":
            self.i += 1
            if self._accept("("):
                return self._call(tok)
            if tok.text in VARIABLES:
                return ("var", tok.text)
            if tok.text in CONSTANTS:
                return ("num", CONSTANTS[tok.text])
            self.i -= 1
            self._error(f"unknown name {tok.text!r}")
        if self._accept("("):
            node = self.expr()
            self._expect(")")
            return node
        self._error("expected a number, name or '('" if tok.kind != "end"
                    else "unexpected end of expression")

    def _call(self, tok):
        if tok.text not in FUNCTIONS:
            self.i -= 2
            self._error(f"unknown function {tok.text!r}")
        args = [self.expr()]
        while self._accept(","):
            args.append(self.expr())
        self._expect(")")
        arity = FUNCTIONS[tok.text][0]
        if (arity is not None and len(args) != arity) or (arity is None and len(args) < 1):
            raise ExpressionError(
                f"{tok.text}() takes {arity or 'at least 1'} argument(s), got {len(args)}")
        return ("call", tok.text, args)


def _eval(node, env):
    kind = node[0]
    if kind == "num":
        return node[1]
    if kind == "var":
        return env[node[1]]
    if kind == "neg":
        return -_eval(node[1], env)
    if kind == "bin":
        a, b = _eval(node[2], env), _eval(node[3], env)
        op = node[1]
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            return a / b
        return np.power(a, b)
    fn = FUNCTIONS[node[1]][1]
    return fn(*[_eval(arg, env) for arg in node[2]])


class Expression:
    """A parsed expression, callable on coordinate arrays."""

    def __init__(self, source: str):
        self.source = source
        self.tree = Parser(source).parse()

    def __call__(self, x=0.0, y=0.0, r=0.0):
        env = {"x": np.asarray(x, dtype=float), "y": np.asarray(y, dtype=float),
               "r": np.asarray(r, dtype=float)}
        with np.errstate(all="ignore"):
            out = _eval(self.tree, env)
        shape = np.broadcast_shapes(env["x"].shape, env["y"].shape, env["r"].shape)
        return np.broadcast_to(np.asarray(out, dtype=float), shape).copy()

    def __repr__(self):
        return f"Expression({self.source!r})"


def parse(source: str) -> Expression:
    return Expression(source)


def evaluate(source: str, **coords):
    return Expression(source)(**coords)
