"""Recursive-descent parser and evaluator for habitat/initial-condition formulas.

Formulas are written in the two spatial variables x and y, e.g.

    2*exp(-5*((x+.75)^2+(y-.75)^2))

Grammar (left-associative binaries, '^' binds tighter than unary minus):

    expr     := term (('+' | '-') term)*
    term     := unary (('*' | '/') unary)*
    unary    := '-' unary | power
    power    := atom ('^' exponent)*
    exponent := ['-'] NUMBER
    atom     := NUMBER | 'x' | 'y' | FUNC '(' expr (',' expr)* ')' | '(' expr ')'

NUMBER accepts leading-dot literals (.75) and exponent notation (1e-3).
FUNC is one of exp, sin, cos, sqrt. Evaluation follows IEEE double
semantics (exp overflow yields inf); division by zero and sqrt of a
negative are reported as domain errors naming the offending subexpression.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

__all__ = [
    "ExprSyntaxError",
    "EvalDomainError",
    "Num",
    "Var",
    "Neg",
    "Bin",
    "Call",
    "Expr",
    "parse",
    "to_string",
    "evaluate",
    "sample",
]

FUNCTIONS = ("exp", "sin", "cos", "sqrt")
VARIABLES = ("x", "y")


class ExprSyntaxError(ValueError):
    """Parse failure; carries the byte offset of the offending token."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


class EvalDomainError(ArithmeticError):
    """Division by zero or sqrt of a negative during evaluation."""

    def __init__(self, message: str, subexpr: str):
        super().__init__(f"{message} in '{subexpr}'")
        self.subexpr = subexpr


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    child: "Expr"


@dataclass(frozen=True)
class Bin:
    op: str
    lhs: "Expr"
    rhs: "Expr"


@dataclass(frozen=True)
class Call:
    fn: str
    arg: "Expr"


Expr = Union[Num, Var, Neg, Bin, Call]

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            at = len(text) - len(stripped)
            raise ExprSyntaxError(f"unexpected character {stripped[0]!r}", at)
        if m.group("num") is not None:
            tokens.append(("num", m.group("num"), m.start("num")))
        elif m.group("ident") is not None:
            tokens.append(("ident", m.group("ident"), m.start("ident")))
        else:
            tokens.append(("op", m.group("op"), m.start("op")))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str):
        kind, value, offset = self.peek()
        if kind != "op" or value != op:
            shown = value if value else "end of input"
            raise ExprSyntaxError(f"expected {op!r}, found {shown!r}", offset)
        return self.advance()

    def parse(self) -> Expr:
        node = self.expr()
        kind, value, offset = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected trailing token {value!r}", offset)
        return node

    def expr(self) -> Expr:
        node = self.term()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "+-":
                self.advance()
                node = Bin(value, node, self.term())
            else:
                return node

    def term(self) -> Expr:
        node = self.unary()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "*/":
                self.advance()
                node = Bin(value, node, self.unary())
            else:
                return node

    def unary(self) -> Expr:
        kind, value, _ = self.peek()
        if kind == "op" and value == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        node = self.atom()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value == "^":
                self.advance()
                node = Bin("^", node, self.exponent())
            else:
                return node

    def exponent(self) -> Expr:
        # The exponent is restricted to a (possibly negated) numeric literal.
        kind, value, offset = self.peek()
        if kind == "op" and value == "-":
            self.advance()
            return Neg(self.number())
        return self.number()

    def number(self) -> Num:
        kind, value, offset = self.peek()
        if kind != "num":
            shown = value if value else "end of input"
            raise ExprSyntaxError(f"expected numeric exponent, found {shown!r}", offset)
        self.advance()
        return Num(float(value))

    def atom(self) -> Expr:
        kind, value, offset = self.advance()
        if kind == "num":
            return Num(float(value))
        if kind == "ident":
            if value in VARIABLES:
                return Var(value)
            if value in FUNCTIONS:
                self.expect_op("(")
                args = [self.expr()]
                while True:
                    k, v, _ = self.peek()
                    if k == "op" and v == ",":
                        self.advance()
                        args.append(self.expr())
                    else:
                        break
                self.expect_op(")")
                if len(args) != 1:
                    raise ExprSyntaxError(
                        f"function {value!r} takes 1 argument, got {len(args)}", offset
                    )
                return Call(value, args[0])
            raise ExprSyntaxError(f"unknown identifier {value!r}", offset)
        if kind == "op" and value == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        shown = value if value else "end of input"
        raise ExprSyntaxError(f"unexpected token {shown!r}", offset)


def parse(text: str) -> Expr:
    """Parse a formula into its syntax tree."""
    return _Parser(text).parse()


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4, "atom": 5}


def _prec(node: Expr) -> int:
    if isinstance(node, Bin):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return _PREC["neg"]
    return _PREC["atom"]


def to_string(node: Expr) -> str:
    """Print a tree so that parsing the result reproduces the tree exactly."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        inner = to_string(node.child)
        if _prec(node.child) < _PREC["neg"]:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(node, Call):
        return f"{node.fn}({to_string(node.arg)})"
    if isinstance(node, Bin):
        if node.op == "^":
            base = to_string(node.lhs)
            if _prec(node.lhs) < _PREC["^"]:
                base = f"({base})"
            # Exponents are numeric literals by construction, no parens needed.
            return f"{base}^{to_string(node.rhs)}"
        lhs = to_string(node.lhs)
        rhs = to_string(node.rhs)
        p = _PREC[node.op]
        if _prec(node.lhs) < p:
            lhs = f"({lhs})"
        # Equal precedence on the right would re-associate, so force parens.
        if _prec(node.rhs) <= p:
            rhs = f"({rhs})"
        return f"{lhs}{node.op}{rhs}"
    raise TypeError(f"not an expression node: {node!r}")


def evaluate(node: Expr, x: float, y: float) -> float:
    """Evaluate at a point. Deterministic; IEEE doubles throughout."""
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return x if node.name == "x" else y
    if isinstance(node, Neg):
        return -evaluate(node.child, x, y)
    if isinstance(node, Call):
        v = evaluate(node.arg, x, y)
        if node.fn == "exp":
            try:
                return math.exp(v)
            except OverflowError:
                return math.inf
        if node.fn == "sin":
            return math.sin(v)
        if node.fn == "cos":
            return math.cos(v)
        if v < 0.0:
            raise EvalDomainError("sqrt of negative value", to_string(node))
        return math.sqrt(v)
    if isinstance(node, Bin):
        a = evaluate(node.lhs, x, y)
        b = evaluate(node.rhs, x, y)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            if b == 0.0:
                raise EvalDomainError("division by zero", to_string(node))
            return a / b
        # '^': exponent is a literal, so only a zero/negative base can misbehave.
        try:
            return math.pow(a, b)
        except (ValueError, ZeroDivisionError) as err:
            raise EvalDomainError(str(err), to_string(node)) from None
    raise TypeError(f"not an expression node: {node!r}")


def sample(node: Expr, xs, ys):
    """Evaluate at paired coordinate arrays, returning a float64 array."""
    import numpy as np

    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape:
        raise ValueError(f"coordinate shapes differ: {xs.shape} vs {ys.shape}")
    out = np.empty(xs.shape, dtype=float)
    flat_x = xs.ravel()
    flat_y = ys.ravel()
    flat_o = out.ravel()
    for i in range(flat_x.size):
        flat_o[i] = evaluate(node, flat_x[i], flat_y[i])
    return out
