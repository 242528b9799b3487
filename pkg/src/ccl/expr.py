"""Expression trees used for guards, actions and symbolic values.

Nodes are immutable and compare structurally; source spans are carried for
diagnostics but never take part in equality.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from fractions import Fraction
from typing import Iterator, Optional, Tuple

from .values import BOOL, INT, NULL, RAT, STR, EnumVal, TypeTag, format_value, type_of_value

CMP_OPS = ("<", "<=", "==", "!=", ">=", ">")


@dataclass(frozen=True)
class SourceSpan:
    file: str
    line: int
    column: int
    length: int

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


class Expr:
    __slots__ = ()

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True, eq=True)
class Const(Expr):
    value: object
    ty: Optional[TypeTag] = None
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.ty is None and self.value is not NULL:
            object.__setattr__(self, "ty", type_of_value(self.value))


@dataclass(frozen=True)
class Var(Expr):
    """Reference to a port, internal variable or parameter by surface name."""

    name: str
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Sym(Expr):
    """Symbolic input constant."""

    name: str
    ty: TypeTag
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Add(Expr):
    left: Expr
    right: Expr
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Sub(Expr):
    left: Expr
    right: Expr
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Mul(Expr):
    left: Expr
    right: Expr
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Not(Expr):
    arg: Expr
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class And(Expr):
    args: Tuple[Expr, ...]
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Or(Expr):
    args: Tuple[Expr, ...]
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Cmp(Expr):
    op: str
    left: Expr
    right: Expr
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


def _cache_hash(cls):
    """Memoize the generated structural hash; trees are immutable and hashed often."""
    generated = cls.__hash__

    def __hash__(self):
        d = self.__dict__
        h = d.get("_hash")
        if h is None:
            h = generated(self)
            d["_hash"] = h
        return h

    cls.__hash__ = __hash__
    return cls


for _cls in (Const, Var, Sym, Neg, Add, Sub, Mul, Not, And, Or, Cmp):
    _cache_hash(_cls)

TRUE = Const(True, BOOL)
FALSE = Const(False, BOOL)
NULL_CONST = Const(NULL, None)


def const(value, ty: Optional[TypeTag] = None) -> Const:
    return Const(value, ty)


def rat(text) -> Const:
    return Const(Fraction(text), RAT)


def children(e: Expr) -> Tuple[Expr, ...]:
    if isinstance(e, (Neg, Not)):
        return (e.arg,)
    if isinstance(e, (Add, Sub, Mul, Cmp)):
        return (e.left, e.right)
    if isinstance(e, (And, Or)):
        return e.args
    return ()


def walk(e: Expr) -> Iterator[Expr]:
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(children(node)))


@lru_cache(maxsize=100_000)
def _free_names(e: Expr) -> frozenset:
    return frozenset(n.name for n in walk(e) if isinstance(n, Var))


def free_vars(e: Expr) -> set:
    return set(_free_names(e))


def free_names(e: Expr) -> tuple:
    """Sorted free ``Var`` names (cached; do not mutate)."""
    return _sorted_names(_free_names(e))


@lru_cache(maxsize=100_000)
def _sorted_names(names: frozenset) -> tuple:
    return tuple(sorted(names))


@lru_cache(maxsize=100_000)
def _sym_items(e: Expr) -> tuple:
    return tuple(sorted({n.name: n.ty for n in walk(e) if isinstance(n, Sym)}.items()))


def sym_vars(e: Expr) -> dict:
    return dict(_sym_items(e))


@lru_cache(maxsize=100_000)
def string_literals(e: Expr) -> frozenset:
    return frozenset(n.value for n in walk(e) if isinstance(n, Const) and isinstance(n.value, str))


def map_children(e: Expr, fn) -> Expr:
    if isinstance(e, Neg):
        return Neg(fn(e.arg))
    if isinstance(e, Not):
        return Not(fn(e.arg))
    if isinstance(e, Add):
        return Add(fn(e.left), fn(e.right))
    if isinstance(e, Sub):
        return Sub(fn(e.left), fn(e.right))
    if isinstance(e, Mul):
        return Mul(fn(e.left), fn(e.right))
    if isinstance(e, Cmp):
        return Cmp(e.op, fn(e.left), fn(e.right))
    if isinstance(e, And):
        return And(tuple(fn(a) for a in e.args))
    if isinstance(e, Or):
        return Or(tuple(fn(a) for a in e.args))
    return e


def promote_consts(e: Expr) -> Expr:
    """Retype integer constants as rationals (used when storing into rat slots)."""
    if isinstance(e, Const):
        if e.ty == INT:
            return Const(Fraction(e.value), RAT)
        return e
    return map_children(e, promote_consts)


# -- typing -----------------------------------------------------------------


def type_of(e: Expr, scope: Optional[dict] = None) -> Optional[TypeTag]:
    """Result type of ``e``; ``None`` for the Null constant.

    ``scope`` maps ``Var`` names to their declared types.
    """
    if isinstance(e, Const):
        return e.ty
    if isinstance(e, Sym):
        return e.ty
    if isinstance(e, Var):
        if scope is None or e.name not in scope:
            raise KeyError(e.name)
        return scope[e.name]
    if isinstance(e, (Not, And, Or, Cmp)):
        return BOOL
    if isinstance(e, Neg):
        return type_of(e.arg, scope)
    if isinstance(e, (Add, Sub, Mul)):
        lt = type_of(e.left, scope)
        rt = type_of(e.right, scope)
        if lt == RAT or rt == RAT:
            return RAT
        if lt is None:
            return rt
        if rt is None:
            return lt
        return INT
    raise TypeError(f"unknown node {e!r}")


# -- printing ---------------------------------------------------------------

_PREC_OR, _PREC_AND, _PREC_NOT, _PREC_CMP, _PREC_ADD, _PREC_MUL, _PREC_NEG, _PREC_ATOM = range(1, 9)


def _prec(e: Expr) -> int:
    if isinstance(e, Or):
        return _PREC_OR if len(e.args) > 1 else _PREC_ATOM
    if isinstance(e, And):
        return _PREC_AND if len(e.args) > 1 else _PREC_ATOM
    if isinstance(e, Not):
        return _PREC_NOT
    if isinstance(e, Cmp):
        return _PREC_CMP
    if isinstance(e, (Add, Sub)):
        return _PREC_ADD
    if isinstance(e, Mul):
        return _PREC_MUL
    if isinstance(e, Neg):
        return _PREC_NEG
    if isinstance(e, Const) and _negative_literal(e):
        return _PREC_NEG
    return _PREC_ATOM


def _negative_literal(e: Const) -> bool:
    v = e.value
    return not isinstance(v, bool) and isinstance(v, (int, Fraction)) and v < 0


def _const_text(e: Const) -> str:
    if e.ty == RAT and isinstance(e.value, (int, Fraction)) and not isinstance(e.value, bool):
        from .values import format_rational

        return format_rational(Fraction(e.value))
    if isinstance(e.value, EnumVal):
        return str(e.value)
    return format_value(e.value)


def _wrap(e: Expr, min_prec: int) -> str:
    text = to_text(e)
    return f"({text})" if _prec(e) < min_prec else text


def to_text(e: Expr) -> str:
    """Deterministic surface rendering; reparses to a structurally equal tree."""
    if isinstance(e, Const):
        return _const_text(e)
    if isinstance(e, (Var, Sym)):
        return e.name
    if isinstance(e, Neg):
        if isinstance(e.arg, (Var, Sym)):
            return f"-{e.arg.name}"
        return f"-({to_text(e.arg)})"
    if isinstance(e, Not):
        return f"!{_wrap(e.arg, _PREC_NOT)}"
    if isinstance(e, (Add, Sub)):
        op = "+" if isinstance(e, Add) else "-"
        return f"{_wrap(e.left, _PREC_ADD)} {op} {_wrap(e.right, _PREC_MUL)}"
    if isinstance(e, Mul):
        return f"{_wrap(e.left, _PREC_MUL)} * {_wrap(e.right, _PREC_NEG)}"
    if isinstance(e, Cmp):
        return f"{_wrap(e.left, _PREC_ADD)} {e.op} {_wrap(e.right, _PREC_ADD)}"
    if isinstance(e, And):
        if not e.args:
            return "true"
        if len(e.args) == 1:
            return f"({to_text(e.args[0])})"
        return " && ".join(_wrap(a, _PREC_NOT) for a in e.args)
    if isinstance(e, Or):
        if not e.args:
            return "false"
        if len(e.args) == 1:
            return f"({to_text(e.args[0])})"
        return " || ".join(_wrap(a, _PREC_AND) for a in e.args)
    raise TypeError(f"unknown node {e!r}")
