"""Arithmetic expression trees for structural equations.

Grammar: variables, one error symbol, real literals, +, -, *, unary minus
and parentheses. Evaluation works elementwise on numpy arrays as well as on
floats, which lets the equilibrium solvers run whole sample batches through
one tree walk.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Union

from .errors import ParseError, UnknownSymbol


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class Add:
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Sub:
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Mul:
    left: "Node"
    right: "Node"


Node = Union[Num, Var, Neg, Add, Sub, Mul]

_TOKEN = re.compile(
    r"\s*(?:(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<number>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<op>[+\-*()]))"
)


def _tokenize(text: str, line: int, col: int) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        match = _TOKEN.match(text, pos)
        if match is None or match.end() == pos:
            rest = text[pos:].lstrip()
            if not rest:
                break
            raise ParseError(f"unexpected character {rest[0]!r}", line, col + pos + 1)
        kind = match.lastgroup
        tokens.append((kind, match.group(kind), col + match.start(kind) + 1))
        pos = match.end()
    return tokens


class _Parser:
    def __init__(self, tokens, line, end_col):
        self.tokens = tokens
        self.line = line
        self.end_col = end_col
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self):
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of expression", self.line, self.end_col)
        self.pos += 1
        return tok

    def expression(self) -> Node:
        node = self.term()
        while (tok := self.peek()) is not None and tok[1] in "+-":
            self.take()
            right = self.term()
            node = Add(node, right) if tok[1] == "+" else Sub(node, right)
        return node

    def term(self) -> Node:
        node = self.factor()
        while (tok := self.peek()) is not None and tok[1] == "*":
            self.take()
            node = Mul(node, self.factor())
        return node

    def factor(self) -> Node:
        kind, value, col = self.take()
        if kind == "op" and value == "-":
            return Neg(self.factor())
        if kind == "op" and value == "(":
            node = self.expression()
            kind, value, col = self.take()
            if value != ")":
                raise ParseError("expected ')'", self.line, col)
            return node
        if kind == "number":
            return Num(float(value))
        if kind == "name":
            return Var(value)
        raise ParseError(f"unexpected {value!r}", self.line, col)


def parse(text: str, line: int = 1, col: int = 0) -> Node:
    """Parse one expression; positions in errors are absolute in the source."""
    tokens = _tokenize(text, line, col)
    if not tokens:
        raise ParseError("empty expression", line, col + 1)
    parser = _Parser(tokens, line, col + len(text) + 1)
    node = parser.expression()
    leftover = parser.peek()
    if leftover is not None:
        raise ParseError(f"unexpected {leftover[1]!r}", line, leftover[2])
    return node


def variables(node: Node) -> set[str]:
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Num):
        return set()
    if isinstance(node, Neg):
        return variables(node.operand)
    return variables(node.left) | variables(node.right)


def evaluate(node: Node, env: Mapping[str, object]):
    """Evaluate with values (floats or aligned arrays) from `env`."""
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        try:
            return env[node.name]
        except KeyError:
            raise UnknownSymbol(node.name) from None
    if isinstance(node, Neg):
        return -evaluate(node.operand, env)
    left = evaluate(node.left, env)
    right = evaluate(node.right, env)
    if isinstance(node, Add):
        return left + right
    if isinstance(node, Sub):
        return left - right
    return left * right


class NotAffine(Exception):
    """The expression multiplies two subterms that both involve unknowns."""


def affine_form(node: Node, unknowns: frozenset, env: Mapping[str, object]):
    """Decompose as (constant, {unknown: coefficient}) when affine in `unknowns`.

    Constants and coefficients may be arrays when `env` holds arrays.
    Raises NotAffine otherwise.
    """
    if isinstance(node, Num):
        return node.value, {}
    if isinstance(node, Var):
        if node.name in unknowns:
            return 0.0, {node.name: 1.0}
        try:
            return env[node.name], {}
        except KeyError:
            raise UnknownSymbol(node.name) from None
    if isinstance(node, Neg):
        const, coeffs = affine_form(node.operand, unknowns, env)
        return -const, {k: -v for k, v in coeffs.items()}
    lc, lk = affine_form(node.left, unknowns, env)
    rc, rk = affine_form(node.right, unknowns, env)
    if isinstance(node, (Add, Sub)):
        sign = 1.0 if isinstance(node, Add) else -1.0
        coeffs = dict(lk)
        for k, v in rk.items():
            coeffs[k] = coeffs.get(k, 0.0) + sign * v
        return lc + sign * rc, coeffs
    if lk and rk:
        raise NotAffine
    if rk:  # constant * affine
        lc, lk, rc, rk = rc, rk, lc, lk
    return lc * rc, {k: v * rc for k, v in lk.items()}


def flatten_sum(node: Node) -> list[Node]:
    """Top-level addends, looking through +, - and unary minus."""
    if isinstance(node, (Add, Sub)):
        return flatten_sum(node.left) + flatten_sum(node.right)
    if isinstance(node, Neg):
        return flatten_sum(node.operand)
    return [node]


def flatten_product(node: Node) -> list[Node]:
    if isinstance(node, Mul):
        return flatten_product(node.left) + flatten_product(node.right)
    if isinstance(node, Neg):
        return flatten_product(node.operand)
    return [node]
