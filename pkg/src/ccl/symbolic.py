"""Symbolic algebra: concrete evaluation, substitution, canonical simplification.

Canonical form rules:

* numeric terms become ``c1*x1 + ... + cn*xn + k`` with variables sorted by name;
* comparisons become ``sum op k`` with a positive leading coefficient; when every
  variable is an integer the coefficients are made coprime integers and strict
  inequalities are tightened (``x < 4`` becomes ``x <= 3``); otherwise the
  leading coefficient is scaled to one;
* ``!`` is pushed down to atoms, ``&&``/``||`` are flattened, sorted and
  deduplicated, and boolean constants are folded.

Null follows the message-absence semantics of the executor: arithmetic on Null
yields Null, comparisons involving Null are false, and a Null operand of a
boolean connective counts as false.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import SymbolicError
from .expr import (
    FALSE,
    NULL_CONST,
    TRUE,
    Add,
    And,
    Cmp,
    Const,
    Expr,
    Mul,
    Neg,
    Not,
    Or,
    Sub,
    Sym,
    Var,
    map_children,
    to_text,
)
from .values import BOOL, INT, NULL, RAT, EnumVal, check_int

_FLIP = {"<": ">", "<=": ">=", ">": "<", ">=": "<=", "==": "==", "!=": "!="}
_NEGATE = {"<": ">=", "<=": ">", ">": "<=", ">=": "<", "==": "!=", "!=": "=="}


# -- concrete evaluation -----------------------------------------------------------


def _num_op(op, a, b):
    if a is NULL or b is NULL:
        return NULL
    if isinstance(a, bool) or isinstance(b, bool) or not isinstance(a, (int, Fraction)) or not isinstance(b, (int, Fraction)):
        raise SymbolicError("TYPE_MISMATCH", f"arithmetic on {a!r} and {b!r}")
    r = op(a, b)
    if isinstance(r, int):
        return check_int(r)
    return r


def _compare(op: str, a, b) -> bool:
    if a is NULL or b is NULL:
        return False
    a_num = isinstance(a, (int, Fraction)) and not isinstance(a, bool)
    b_num = isinstance(b, (int, Fraction)) and not isinstance(b, bool)
    if a_num != b_num:
        raise SymbolicError("TYPE_MISMATCH", f"comparing {a!r} with {b!r}")
    if not a_num:
        if type(a) is not type(b) or (isinstance(a, EnumVal) and a.enum != b.enum):
            raise SymbolicError("TYPE_MISMATCH", f"comparing {a!r} with {b!r}")
        if op == "==":
            return a == b
        if op == "!=":
            return a != b
        raise SymbolicError("TYPE_MISMATCH", f"ordering comparison {op} on {a!r}")
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == "==":
        return a == b
    if op == "!=":
        return a != b
    if op == ">=":
        return a >= b
    if op == ">":
        return a > b
    raise SymbolicError("TYPE_MISMATCH", f"unknown operator {op}")


def _truthy(v) -> bool:
    if v is NULL:
        return False
    if not isinstance(v, bool):
        raise SymbolicError("TYPE_MISMATCH", f"{v!r} is not boolean")
    return v


def eval_concrete(e: Expr, env: Dict[str, object]):
    """Value of ``e`` with ``Var``/``Sym`` names looked up in ``env``."""
    if isinstance(e, Const):
        return e.value
    if isinstance(e, (Var, Sym)):
        try:
            return env[e.name]
        except KeyError:
            raise SymbolicError("UNBOUND_NAME", f"no value for {e.name}") from None
    if isinstance(e, Add):
        return _num_op(lambda a, b: a + b, eval_concrete(e.left, env), eval_concrete(e.right, env))
    if isinstance(e, Sub):
        return _num_op(lambda a, b: a - b, eval_concrete(e.left, env), eval_concrete(e.right, env))
    if isinstance(e, Mul):
        return _num_op(lambda a, b: a * b, eval_concrete(e.left, env), eval_concrete(e.right, env))
    if isinstance(e, Neg):
        v = eval_concrete(e.arg, env)
        return _num_op(lambda a, b: a - b, 0, v) if v is not NULL else NULL
    if isinstance(e, Cmp):
        return _compare(e.op, eval_concrete(e.left, env), eval_concrete(e.right, env))
    if isinstance(e, Not):
        return not _truthy(eval_concrete(e.arg, env))
    if isinstance(e, And):
        return all(_truthy(eval_concrete(a, env)) for a in e.args)
    if isinstance(e, Or):
        return any(_truthy(eval_concrete(a, env)) for a in e.args)
    raise SymbolicError("TYPE_MISMATCH", f"cannot evaluate {e!r}")


def substitute(e: Expr, bind: Dict[str, Expr]) -> Expr:
    """Replace every ``Var`` by its binding; unbound names are an error."""
    if isinstance(e, Var):
        try:
            return bind[e.name]
        except KeyError:
            raise SymbolicError("UNBOUND_NAME", f"no binding for {e.name}") from None
    if isinstance(e, (Const, Sym)):
        return e
    return map_children(e, lambda c: substitute(c, bind))


# -- linear normal form --------------------------------------------------------


class _Nullish(Exception):
    pass


@dataclass
class Linear:
    coeffs: Dict[str, Fraction] = field(default_factory=dict)
    const: Fraction = Fraction(0)
    is_rat: bool = False
    atoms: Dict[str, Expr] = field(default_factory=dict)
    int_vars: bool = True  # every atom is an int-typed Sym

    def scaled(self, k: Fraction) -> "Linear":
        return Linear(
            {n: c * k for n, c in self.coeffs.items()},
            self.const * k,
            self.is_rat or Fraction(k).denominator != 1,
            dict(self.atoms),
            self.int_vars,
        )

    def plus(self, other: "Linear", sign: int = 1) -> "Linear":
        coeffs = dict(self.coeffs)
        for n, c in other.coeffs.items():
            coeffs[n] = coeffs.get(n, Fraction(0)) + sign * c
        coeffs = {n: c for n, c in coeffs.items() if c != 0}
        atoms = dict(self.atoms)
        atoms.update(other.atoms)
        return Linear(
            coeffs,
            self.const + sign * other.const,
            self.is_rat or other.is_rat,
            atoms,
            self.int_vars and other.int_vars,
        )


def linear(e: Expr) -> Linear:
    """Linear form of a numeric expression; raises ``_Nullish`` for Null."""
    if isinstance(e, Const):
        if e.value is NULL:
            raise _Nullish()
        if isinstance(e.value, bool) or not isinstance(e.value, (int, Fraction)):
            raise SymbolicError("TYPE_MISMATCH", f"{to_text(e)} is not numeric")
        return Linear({}, Fraction(e.value), e.ty == RAT)
    if isinstance(e, Sym):
        return Linear({e.name: Fraction(1)}, Fraction(0), e.ty == RAT, {e.name: e}, e.ty == INT)
    if isinstance(e, Var):
        return Linear({e.name: Fraction(1)}, Fraction(0), False, {e.name: e}, False)
    if isinstance(e, Neg):
        return linear(e.arg).scaled(Fraction(-1))
    if isinstance(e, Add):
        return linear(e.left).plus(linear(e.right))
    if isinstance(e, Sub):
        return linear(e.left).plus(linear(e.right), -1)
    if isinstance(e, Mul):
        a, b = linear(e.left), linear(e.right)
        if a.coeffs and b.coeffs:
            raise SymbolicError("NONLINEAR", f"nonlinear product {to_text(e)}")
        if not a.coeffs:
            a, b = b, a
        out = a.scaled(b.const)
        out.is_rat = a.is_rat or b.is_rat
        return out
    raise SymbolicError("TYPE_MISMATCH", f"{to_text(e)} is not numeric")


def _num_const(v: Fraction, rat: bool) -> Const:
    v = Fraction(v)
    if rat:
        return Const(v, RAT)
    if v.denominator != 1:
        return Const(v, RAT)
    return Const(int(v), INT)


def _term(c: Fraction, atom: Expr, rat: bool) -> Expr:
    if c == 1:
        return atom
    if c == -1:
        return Neg(atom)
    return Mul(_num_const(c, rat), atom)


def build_linear(lin: Linear, with_const: bool = True) -> Expr:
    rat = lin.is_rat or any(c.denominator != 1 for c in lin.coeffs.values())
    names = sorted(n for n, c in lin.coeffs.items() if c != 0)
    out: Optional[Expr] = None
    for n in names:
        c = lin.coeffs[n]
        atom = lin.atoms[n]
        if out is None:
            out = _term(c, atom, rat)
        elif c < 0:
            out = Sub(out, _term(-c, atom, rat))
        else:
            out = Add(out, _term(c, atom, rat))
    if with_const or out is None:
        k = lin.const if with_const else Fraction(0)
        if out is None:
            return _num_const(k, lin.is_rat)
        if k > 0:
            out = Add(out, _num_const(k, rat))
        elif k < 0:
            out = Sub(out, _num_const(-k, rat))
    return out


def _lcm(a: int, b: int) -> int:
    return a * b // math.gcd(a, b)


def _canonical_numeric_cmp(op: str, lin: Linear) -> Expr:
    """Canonical ``sum op k`` for ``lin op 0``."""
    if not lin.coeffs:
        return TRUE if _compare(op, lin.const, 0) else FALSE
    rhs = -lin.const
    coeffs = dict(lin.coeffs)
    names = sorted(coeffs)
    if lin.int_vars:
        scale = 1
        for c in coeffs.values():
            scale = _lcm(scale, c.denominator)
        coeffs = {n: c * scale for n, c in coeffs.items()}
        rhs = rhs * scale
        # tighten to non-strict over the integers first so rounding is uniform
        if op == "<":
            op, rhs = "<=", Fraction(math.ceil(rhs) - 1)
        elif op == ">":
            op, rhs = ">=", Fraction(math.floor(rhs) + 1)
        if coeffs[names[0]] < 0:
            coeffs = {n: -c for n, c in coeffs.items()}
            rhs = -rhs
            op = _FLIP[op]
        g = 0
        for c in coeffs.values():
            g = math.gcd(g, int(c))
        coeffs = {n: c / g for n, c in coeffs.items()}
        rhs = rhs / g
        if op == "<=":
            rhs = Fraction(math.floor(rhs))
        elif op == ">=":
            rhs = Fraction(math.ceil(rhs))
        elif rhs.denominator != 1:
            return FALSE if op == "==" else TRUE
        # integer upper bounds are strict and lower bounds are not (x < 4, x >= 5),
        # so a bound and its negation share the constant
        if op == "<=":
            op, rhs = "<", rhs + 1
        lhs = build_linear(Linear(coeffs, Fraction(0), False, lin.atoms, True), with_const=False)
        return Cmp(op, lhs, Const(int(rhs), INT))
    lead = coeffs[names[0]]
    coeffs = {n: c / lead for n, c in coeffs.items()}
    rhs = rhs / lead
    if lead < 0:
        op = _FLIP[op]
    lhs = build_linear(Linear(coeffs, Fraction(0), True, lin.atoms, False), with_const=False)
    return Cmp(op, lhs, Const(rhs, RAT))


def _is_numeric_side(e: Expr) -> bool:
    if isinstance(e, Const):
        return e.value is not NULL and not isinstance(e.value, bool) and isinstance(e.value, (int, Fraction))
    if isinstance(e, Sym):
        return e.ty.numeric
    return isinstance(e, (Add, Sub, Mul, Neg))


@lru_cache(maxsize=200_000)
def _key(e: Expr) -> str:
    return to_text(e)


@lru_cache(maxsize=200_000)
def simplify(e: Expr) -> Expr:
    """Canonical normal form of ``e``; idempotent and semantics-preserving."""
    if isinstance(e, (Const, Sym, Var)):
        return e
    if isinstance(e, (Add, Sub, Mul, Neg)):
        try:
            return build_linear(linear(e))
        except _Nullish:
            return NULL_CONST
    if isinstance(e, Cmp):
        return _simplify_cmp(e)
    if isinstance(e, Not):
        return _negate_canonical(simplify(e.arg))
    if isinstance(e, (And, Or)):
        return _simplify_junction(type(e), [simplify(a) for a in e.args])
    raise SymbolicError("TYPE_MISMATCH", f"cannot simplify {e!r}")


def _simplify_cmp(e: Cmp) -> Expr:
    l, r = simplify(e.left), simplify(e.right)
    if l == NULL_CONST or r == NULL_CONST:
        return FALSE
    if e.op not in ("==", "!=") or _is_numeric_side(l) or _is_numeric_side(r):
        try:
            lin = linear(l).plus(linear(r), -1)
        except _Nullish:
            return FALSE
        return _canonical_numeric_cmp(e.op, lin)
    if isinstance(l, Const) and isinstance(r, Const):
        return TRUE if _compare(e.op, l.value, r.value) else FALSE
    if _is_bool_side(l) or _is_bool_side(r):
        return _simplify_bool_eq(e.op, l, r)
    if isinstance(l, Const) or (not isinstance(r, Const) and _key(r) < _key(l)):
        l, r = r, l
    if e.op not in ("==", "!="):
        raise SymbolicError("TYPE_MISMATCH", f"ordering comparison on {to_text(l)}")
    return Cmp(e.op, l, r)


def _is_bool_side(e: Expr) -> bool:
    if isinstance(e, Const):
        return isinstance(e.value, bool)
    if isinstance(e, Sym):
        return e.ty == BOOL
    return isinstance(e, (Not, And, Or, Cmp))


def _simplify_bool_eq(op: str, l: Expr, r: Expr) -> Expr:
    if isinstance(l, Const):
        l, r = r, l
    if isinstance(r, Const):
        out = l if r.value else _negate_canonical(l)
    else:
        out = simplify(Or((And((l, r)), And((Not(l), Not(r))))))
    return out if op == "==" else _negate_canonical(out)


def _negate_canonical(e: Expr) -> Expr:
    """Negation of an already canonical boolean expression."""
    if isinstance(e, Const):
        if e.value is NULL:
            return TRUE
        return FALSE if e.value else TRUE
    if isinstance(e, Not):
        return e.arg
    if isinstance(e, Cmp):
        return simplify(Cmp(_NEGATE[e.op], e.left, e.right))
    if isinstance(e, And):
        return _simplify_junction(Or, [_negate_canonical(a) for a in e.args])
    if isinstance(e, Or):
        return _simplify_junction(And, [_negate_canonical(a) for a in e.args])
    return Not(e)


def _simplify_junction(kind, args: List[Expr]) -> Expr:
    unit, zero = (TRUE, FALSE) if kind is And else (FALSE, TRUE)
    flat: Dict[str, Expr] = {}
    stack = list(reversed(args))
    while stack:
        a = stack.pop()
        if isinstance(a, kind):
            stack.extend(reversed(a.args))
            continue
        if a == NULL_CONST:
            a = FALSE
        if a == zero:
            return zero
        if a == unit:
            continue
        flat.setdefault(_key(a), a)
    keys = set(flat)
    if kind is And:
        pinned: Dict[str, Expr] = {}
        for a in flat.values():
            if isinstance(a, Cmp) and a.op == "==" and isinstance(a.right, Const):
                lhs = _key(a.left)
                if lhs in pinned and pinned[lhs] != a.right:
                    return FALSE
                pinned[lhs] = a.right
    for k, a in flat.items():
        if _is_literal(a) and _key(_negate_canonical(a)) in keys:
            return zero
    if not flat:
        return unit
    items = [flat[k] for k in sorted(flat)]
    if len(items) == 1:
        return items[0]
    return kind(tuple(items))


def _is_literal(e: Expr) -> bool:
    return isinstance(e, (Cmp, Sym, Var)) or (isinstance(e, Not) and isinstance(e.arg, (Sym, Var)))


def negate(e: Expr) -> Expr:
    """Logical negation in canonical form."""
    return simplify(Not(e))


def canonical_text(e: Expr) -> str:
    return to_text(simplify(e))


# -- co-execution records ---------------------------------------------------------


@dataclass(frozen=True)
class AnnotatedValue:
    sym: Expr
    conc: object

    def __str__(self) -> str:
        from .values import format_value

        return f"({to_text(self.sym)}, {format_value(self.conc)})"


def null_value() -> AnnotatedValue:
    return AnnotatedValue(NULL_CONST, NULL)


@dataclass(frozen=True)
class BranchRecord:
    branch_id: Tuple[str, str, int]  # (instance path, transition id, tick)
    cond: Expr
    taken: bool

    def signed(self) -> Expr:
        return self.cond if self.taken else negate(self.cond)

    def key(self) -> tuple:
        return ("b", self.branch_id, self.taken)


@dataclass(frozen=True)
class PathCondition:
    records: Tuple[BranchRecord, ...] = ()

    def conjunction(self) -> Expr:
        return simplify(And(tuple(r.signed() for r in self.records))) if self.records else TRUE

    def __len__(self) -> int:
        return len(self.records)


def decompose(pc: PathCondition) -> List[Expr]:
    """Signed, simplified branch conditions in execution order."""
    return [simplify(r.signed()) for r in pc.records]
