"""Prescribed curvature fields k(x, y, t).

A field is written as a small arithmetic expression in the variables
``x``, ``y`` and ``t``::

    expr   := term (("+" | "-") term)*
    term   := factor (("*" | "/") factor)*
    factor := "-" factor | power
    power  := atom ("^" factor)?
    atom   := number | "x" | "y" | "t" | "pi" | func "(" expr ")" | "(" expr ")"
    func   := "sin" | "cos" | "exp" | "sqrt" | "abs" | "tanh"

``^`` is right-associative and binds tighter than unary minus, so
``-x^2`` means ``-(x^2)``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Tuple, Union

import numpy as np

FUNCTIONS: dict[str, Callable[[float], float]] = {
    "sin": math.sin,
    "cos": math.cos,
    "exp": math.exp,
    "sqrt": math.sqrt,
    "abs": abs,
    "tanh": math.tanh,
}
VARIABLES = ("x", "y", "t")

Box = Tuple[float, float, float, float]  # (x0, y0, x1, y1)


class FieldError(Exception):
    """Base class for curvature-field errors."""


class ExprSyntaxError(FieldError):
    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} at position {pos}")
        self.pos = pos


class UnknownIdentifierError(ExprSyntaxError):
    pass


class ArityError(ExprSyntaxError):
    pass


class FieldDomainError(FieldError):
    """Evaluation left the domain of an operation (division by zero etc.)."""

    def __init__(self, message: str, where: Tuple[float, float, float]):
        x, y, t = where
        super().__init__(f"{message} at (x={x!r}, y={y!r}, t={t!r})")
        self.where = where


# -- AST -------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Name:
    name: str  # "x", "y", "t" or "pi"


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
    func: str
    arg: "Node"


Node = Union[Num, Name, Neg, BinOp, Call]


def unparse(node: Node) -> str:
    """Canonical, fully parenthesised text for ``node``."""
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, Name):
        return node.name
    if isinstance(node, Neg):
        return f"(-{unparse(node.operand)})"
    if isinstance(node, BinOp):
        return f"({unparse(node.left)} {node.op} {unparse(node.right)})"
    if isinstance(node, Call):
        return f"{node.func}({unparse(node.arg)})"
    raise TypeError(node)


def free_variables(node: Node) -> frozenset[str]:
    if isinstance(node, Name):
        return frozenset() if node.name == "pi" else frozenset({node.name})
    if isinstance(node, Num):
        return frozenset()
    if isinstance(node, Neg):
        return free_variables(node.operand)
    if isinstance(node, Call):
        return free_variables(node.arg)
    return free_variables(node.left) | free_variables(node.right)


# -- tokenizer / parser ----------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),]))"
)


class _Tok(NamedTuple):
    kind: str
    text: str
    pos: int


def _tokenize(source: str) -> list[_Tok]:
    tokens = []
    pos = 0
    while pos < len(source):
        while pos < len(source) and source[pos].isspace():
            pos += 1
        if pos == len(source):
            break
        m = _TOKEN.match(source, pos)
        if m is None or m.end() == pos:
            raise ExprSyntaxError(f"unexpected character {source[pos]!r}", pos)
        kind = m.lastgroup
        tokens.append(_Tok(kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(_Tok("end", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.tokens = _tokenize(source)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.tokens[self.i]

    def _accept(self, text: str) -> bool:
        if self.tok.kind == "op" and self.tok.text == text:
            self.i += 1
            return True
        return False

    def _expect(self, text: str) -> None:
        if not self._accept(text):
            found = self.tok.text or "end of input"
            raise ExprSyntaxError(f"expected {text!r}, found {found!r}", self.tok.pos)

    def parse(self) -> Node:
        node = self.expr()
        if self.tok.kind != "end":
            raise ExprSyntaxError(f"unexpected {self.tok.text!r}", self.tok.pos)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.tok.text
            self.i += 1
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.factor()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.tok.text
            self.i += 1
            node = BinOp(op, node, self.factor())
        return node

    def factor(self) -> Node:
        if self._accept("-"):
            return Neg(self.factor())
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self._accept("^"):
            return BinOp("^", base, self.factor())
        return base

    def atom(self) -> Node:
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            return Num(float(tok.text))
        if tok.kind == "ident":
            self.i += 1
            if tok.text in VARIABLES or tok.text == "pi":
                return Name(tok.text)
            if tok.text in FUNCTIONS:
                if not (self.tok.kind == "op" and self.tok.text == "("):
                    raise ArityError(f"function {tok.text!r} needs one argument", self.tok.pos)
                self.i += 1
                arg = self.expr()
                if self.tok.kind == "op" and self.tok.text == ",":
                    raise ArityError(f"function {tok.text!r} takes exactly one argument", self.tok.pos)
                self._expect(")")
                return Call(tok.text, arg)
            raise UnknownIdentifierError(f"unknown identifier {tok.text!r}", tok.pos)
        if self._accept("("):
            node = self.expr()
            self._expect(")")
            return node
        found = tok.text or "end of input"
        raise ExprSyntaxError(f"unexpected {found!r}", tok.pos)


# -- compiled evaluation ---------------------------------------------------

_Fn = Callable[[float, float, float], float]


def _compile(node: Node) -> _Fn:
    if isinstance(node, Num):
        value = float(node.value)
        return lambda x, y, t: value
    if isinstance(node, Name):
        if node.name == "pi":
            return lambda x, y, t: math.pi
        idx = VARIABLES.index(node.name)
        return lambda x, y, t: (x, y, t)[idx]
    if isinstance(node, Neg):
        f = _compile(node.operand)
        return lambda x, y, t: -f(x, y, t)
    if isinstance(node, Call):
        fn = FUNCTIONS[node.func]
        g = _compile(node.arg)
        return lambda x, y, t: fn(g(x, y, t))
    lhs, rhs = _compile(node.left), _compile(node.right)
    if node.op == "+":
        return lambda x, y, t: lhs(x, y, t) + rhs(x, y, t)
    if node.op == "-":
        return lambda x, y, t: lhs(x, y, t) - rhs(x, y, t)
    if node.op == "*":
        return lambda x, y, t: lhs(x, y, t) * rhs(x, y, t)
    if node.op == "/":
        return lambda x, y, t: lhs(x, y, t) / rhs(x, y, t)
    return lambda x, y, t: math.pow(lhs(x, y, t), rhs(x, y, t))


@dataclass(frozen=True)
class CurvatureExpr:
    """A parsed curvature field. Immutable and safe to share."""

    source: str
    ast: Node
    _fn: _Fn = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        if self._fn is None:
            object.__setattr__(self, "_fn", _compile(self.ast))

    @property
    def is_constant(self) -> bool:
        return not free_variables(self.ast)

    def __call__(self, x: float, y: float, t: float) -> float:
        return eval_field(self, x, y, t)


def parse_expr(source: str) -> CurvatureExpr:
    """Parse ``source`` into a :class:`CurvatureExpr`.

    Raises
    ------
    ExprSyntaxError
        With the character position of the offending token. The subclasses
        :class:`UnknownIdentifierError` and :class:`ArityError` flag unknown
        names and wrong function call arity.
    """
    if not source or not source.strip():
        raise ExprSyntaxError("empty expression", 0)
    return CurvatureExpr(source, _Parser(source).parse())


def constant_field(value: float) -> CurvatureExpr:
    return CurvatureExpr(repr(float(value)), Num(float(value)))


def eval_field(f: CurvatureExpr, x: float, y: float, t: float) -> float:
    try:
        value = f._fn(float(x), float(y), float(t))
    except ZeroDivisionError:
        raise FieldDomainError("division by zero", (x, y, t)) from None
    except (ValueError, OverflowError) as exc:
        raise FieldDomainError(f"math domain error ({exc})", (x, y, t)) from None
    if isinstance(value, complex) or not math.isfinite(value):
        raise FieldDomainError("non-finite value", (x, y, t))
    return value


def grad_field(
    f: CurvatureExpr, x: float, y: float, t: float, h: Optional[float] = None
) -> Tuple[float, float]:
    """Central-difference spatial gradient (dk/dx, dk/dy)."""
    if h is None:
        h = 1e-6 * max(1.0, abs(x), abs(y))
    if h <= 0:
        raise ValueError("h must be positive")
    dx = (eval_field(f, x + h, y, t) - eval_field(f, x - h, y, t)) / (2 * h)
    dy = (eval_field(f, x, y + h, t) - eval_field(f, x, y - h, t)) / (2 * h)
    return dx, dy


# -- bounds and the pinching test -----------------------------------------


@dataclass(frozen=True)
class FieldBounds:
    k_inf: float
    k_sup: float
    box: Box
    provenance: str = "declared"  # "declared" | "sampled"
    conflict: bool = False  # declared bounds disagree with samples

    def __post_init__(self):
        if not self.k_inf <= self.k_sup:
            raise ValueError(f"k_inf={self.k_inf} exceeds k_sup={self.k_sup}")
        if self.provenance not in ("declared", "sampled"):
            raise ValueError(f"unknown provenance {self.provenance!r}")

    def contains(self, x: float, y: float) -> bool:
        x0, y0, x1, y1 = self.box
        return x0 <= x <= x1 and y0 <= y <= y1


def estimate_bounds(
    f: CurvatureExpr,
    box: Box,
    n_grid: int = 21,
    declared: Optional[Tuple[float, float]] = None,
) -> FieldBounds:
    """Sample ``f`` on an ``n_grid**3`` lattice over ``box x [0, 1]``.

    With ``declared`` bounds the returned bounds are the declared ones and
    ``conflict`` is set when any sample falls outside them; otherwise the
    sampled extrema are returned.
    """
    if n_grid < 2:
        raise ValueError("n_grid must be at least 2")
    x0, y0, x1, y1 = box
    lo, hi = math.inf, -math.inf
    for x in np.linspace(x0, x1, n_grid):
        for y in np.linspace(y0, y1, n_grid):
            for t in np.linspace(0.0, 1.0, n_grid):
                v = eval_field(f, x, y, t)
                lo = min(lo, v)
                hi = max(hi, v)
    if declared is None:
        return FieldBounds(lo, hi, tuple(box), "sampled")
    d_lo, d_hi = declared
    return FieldBounds(d_lo, d_hi, tuple(box), "declared", conflict=lo < d_lo or hi > d_hi)


class PinchReport(NamedTuple):
    holds_basic: bool
    holds_pinch: bool
    ratio: float


def check_pinching(b: FieldBounds, a: float) -> PinchReport:
    """Hypotheses of the two-solution existence theorem.

    ``holds_basic`` is ``0 < inf k`` and ``sup k < 1/a``; ``holds_pinch`` is
    ``sup k / (a sup k + 1) < inf k``.
    """
    if a <= 0:
        raise ValueError("a must be positive")
    ratio = b.k_sup / (b.k_sup * a + 1.0)
    return PinchReport(0.0 < b.k_inf and b.k_sup * a < 1.0, ratio < b.k_inf, ratio)
