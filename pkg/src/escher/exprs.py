"""Expression trees shared by invariant clauses and transformer bodies.

Two sub-languages draw from one node pool:

* invariant bodies: boolean connectives and comparisons over arithmetic,
  with ``AttrRef`` atoms naming attributes of the owning schema;
* transformer assignment sources: arithmetic only, with ``OldField``,
  ``InputRef`` and ``Convert`` atoms.

Rendering inserts parentheses exactly where reparsing would otherwise
associate differently, so render/parse is structurally lossless.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from ._lex import escape_string

ARITH_OPS = ("+", "-", "*", "//")
COMPARE_OPS = ("=", "/=", "<", "<=", ">", ">=")


@dataclass(frozen=True)
class IntLit:
    value: int


@dataclass(frozen=True)
class RealLit:
    value: float


@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class StrLit:
    value: str


@dataclass(frozen=True)
class VoidLit:
    pass


@dataclass(frozen=True)
class AttrRef:
    """Reference to an attribute of the schema owning the invariant."""

    name: str


@dataclass(frozen=True)
class OldField:
    """``oldc.<name>``: a field of the record being migrated."""

    name: str


@dataclass(frozen=True)
class InputRef:
    """``input <key>``: a developer-supplied value, resolved by key."""

    key: str


@dataclass(frozen=True)
class Convert:
    """``convert <ID> (<arg>)``: converter application."""

    converter_id: str
    arg: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of ARITH_OPS
    left: "Expr"
    right: "Expr"

    def __post_init__(self) -> None:
        if self.op not in ARITH_OPS:
            raise ValueError(f"unknown arithmetic operator {self.op!r}")


@dataclass(frozen=True)
class Compare:
    op: str  # one of COMPARE_OPS
    left: "Expr"
    right: "Expr"

    def __post_init__(self) -> None:
        if self.op not in COMPARE_OPS:
            raise ValueError(f"unknown comparison operator {self.op!r}")


@dataclass(frozen=True)
class And:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Or:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Not:
    operand: "Expr"


Expr = Union[
    IntLit, RealLit, BoolLit, StrLit, VoidLit,
    AttrRef, OldField, InputRef, Convert,
    BinOp, Compare, And, Or, Not,
]

_ATOM = 10
_PREC = {"or": 1, "and": 2, "not": 3, "cmp": 4, "+": 5, "-": 5, "*": 6, "//": 6}


def _prec(expr: Expr) -> int:
    if isinstance(expr, Or):
        return _PREC["or"]
    if isinstance(expr, And):
        return _PREC["and"]
    if isinstance(expr, Not):
        return _PREC["not"]
    if isinstance(expr, Compare):
        return _PREC["cmp"]
    if isinstance(expr, BinOp):
        return _PREC[expr.op]
    return _ATOM


def children(expr: Expr) -> tuple[Expr, ...]:
    if isinstance(expr, (BinOp, And, Or)):
        return (expr.left, expr.right)
    if isinstance(expr, Compare):
        return (expr.left, expr.right)
    if isinstance(expr, Not):
        return (expr.operand,)
    if isinstance(expr, Convert):
        return (expr.arg,)
    return ()


def walk(expr: Expr):
    """Yield ``expr`` and every descendant, depth-first."""
    yield expr
    for child in children(expr):
        yield from walk(child)


def render_real(value: float) -> str:
    """Shortest round-tripping decimal form with a mandatory dot."""
    text = repr(value)
    if "e" in text or "E" in text:
        mantissa, _, exponent = text.partition("e")
        if "." not in mantissa:
            mantissa += ".0"
        return f"{mantissa}e{exponent}"
    if "." not in text:
        text += ".0"
    return text


def render_expr(expr: Expr) -> str:
    return _render(expr, 0)


def _wrap(text: str, prec: int, context: int) -> str:
    return f"({text})" if prec < context else text


def _render(expr: Expr, context: int) -> str:
    if isinstance(expr, IntLit):
        return str(expr.value)
    if isinstance(expr, RealLit):
        return render_real(expr.value)
    if isinstance(expr, BoolLit):
        return "true" if expr.value else "false"
    if isinstance(expr, StrLit):
        return escape_string(expr.value)
    if isinstance(expr, VoidLit):
        return "Void"
    if isinstance(expr, AttrRef):
        return expr.name
    if isinstance(expr, OldField):
        return f"oldc.{expr.name}"
    if isinstance(expr, InputRef):
        return f"input {expr.key}"
    if isinstance(expr, Convert):
        return f"convert {expr.converter_id} ({_render(expr.arg, 0)})"
    if isinstance(expr, Not):
        p = _prec(expr)
        return _wrap(f"not {_render(expr.operand, p)}", p, context)
    if isinstance(expr, Compare):
        p = _prec(expr)
        # operands live at arithmetic level; nested comparisons need parens
        text = f"{_render(expr.left, p + 1)} {expr.op} {_render(expr.right, p + 1)}"
        return _wrap(text, p, context)
    if isinstance(expr, (BinOp, And, Or)):
        if isinstance(expr, And):
            op, p = "and", _PREC["and"]
        elif isinstance(expr, Or):
            op, p = "or", _PREC["or"]
        else:
            op, p = expr.op, _PREC[expr.op]
        # left-associative: equal precedence on the right needs parens
        text = f"{_render(expr.left, p)} {op} {_render(expr.right, p + 1)}"
        return _wrap(text, p, context)
    raise TypeError(f"not an expression node: {expr!r}")
