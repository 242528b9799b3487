"""Self-contained decision procedure for the supported constraint fragment.

Boolean structure is handled by case splitting over disjunctions (with
equality propagation and a theory consistency check at every decision).
Theory conjunctions are decided by

* union-find with disequalities for string and enum atoms (enums backtrack
  over their finite variant set, strings get fresh values), then
* Fourier-Motzkin elimination over the rationals, with branch-and-bound on
  integer variables.
"""

from __future__ import annotations

import math
import time
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from ..expr import FALSE, TRUE, And, Cmp, Const, Expr, Not, Or, Sym, map_children, string_literals, sym_vars
from ..symbolic import _is_numeric_side, eval_concrete, linear, simplify
from ..values import BOOL, INT, RAT, STR, EnumVal, TypeTag

BB_BOUND = 2**20
BB_NODE_CAP = 20_000


class SolverTimeout(Exception):
    pass


class SolverUnsupported(Exception):
    pass


class _Clock:
    def __init__(self, deadline: Optional[float]):
        self.deadline = deadline

    def tick(self):
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise SolverTimeout()


# -- helpers over canonical formulas ----------------------------------------------


def _bind_syms(e: Expr, fixed: Dict[str, object]) -> Expr:
    if isinstance(e, Sym):
        if e.name in fixed:
            return Const(fixed[e.name], e.ty)
        return e
    if isinstance(e, Const):
        return e
    return map_children(e, lambda c: _bind_syms(c, fixed))


def _eq_const(lit: Expr) -> Optional[Tuple[Sym, object]]:
    """``x == c`` with a single variable on the left (any theory)."""
    if isinstance(lit, Cmp) and lit.op == "==" and isinstance(lit.left, Sym) and isinstance(lit.right, Const):
        v = lit.right.value
        if lit.left.ty == RAT and isinstance(v, int) and not isinstance(v, bool):
            v = Fraction(v)
        return lit.left, v
    return None


def _is_numeric_cmp(e: Cmp) -> bool:
    return _is_numeric_side(e.left) or _is_numeric_side(e.right)


# -- string / enum theory ---------------------------------------------------------


class _UnionFind:
    def __init__(self):
        self.parent: Dict[tuple, tuple] = {}

    def find(self, x):
        self.parent.setdefault(x, x)
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # keep a constant as representative when there is one
            if ra[0] == "c":
                self.parent[rb] = ra
            else:
                self.parent[ra] = rb


def _node(e: Expr) -> tuple:
    if isinstance(e, Sym):
        return ("v", e.name)
    return ("c", type(e.value).__name__, e.value)


def _solve_eq_theory(atoms: List[Cmp], types: Dict[str, TypeTag], enums, literals: set, clock: _Clock):
    uf = _UnionFind()
    diseqs = []
    for a in atoms:
        l, r = _node(a.left), _node(a.right)
        uf.find(l)
        uf.find(r)
        if a.op == "==":
            uf.union(l, r)
        else:
            diseqs.append((l, r))
    # a class may hold at most one constant
    const_of: Dict[tuple, object] = {}
    for n in list(uf.parent):
        if n[0] == "c":
            root = uf.find(n)
            if root in const_of and const_of[root] != n[2]:
                return None
            const_of[root] = n[2]
    neq: Dict[tuple, set] = {}
    for l, r in diseqs:
        rl, rr = uf.find(l), uf.find(r)
        if rl == rr:
            return None
        neq.setdefault(rl, set()).add(rr)
        neq.setdefault(rr, set()).add(rl)
    classes: Dict[tuple, List[str]] = {}
    for n in uf.parent:
        if n[0] == "v":
            classes.setdefault(uf.find(n), []).append(n[1])
    value: Dict[tuple, object] = dict(const_of)
    free = sorted((r for r in classes if r not in value), key=lambda r: min(classes[r]))
    fresh = 0
    enum_free = []
    for root in free:
        ty = types[classes[root][0]]
        if ty.kind == "enum":
            enum_free.append(root)
        else:
            while f"s{fresh}" in literals:
                fresh += 1
            value[root] = f"s{fresh}"
            fresh += 1

    def assign(i: int) -> bool:
        clock.tick()
        if i == len(enum_free):
            return True
        root = enum_free[i]
        ty = types[classes[root][0]]
        for variant in enums[ty.enum]:
            cand = EnumVal(ty.enum, variant)
            if any(value.get(o) == cand for o in neq.get(root, ())):
                continue
            value[root] = cand
            if assign(i + 1):
                return True
            del value[root]
        return False

    if not assign(0):
        return None
    model = {}
    for root, names in classes.items():
        for n in names:
            model[n] = value[root]
    return model


# -- linear arithmetic ------------------------------------------------------------

# A constraint is (coeffs, const, kind) meaning  sum(coeffs[x] * x) + const  KIND 0
# with KIND one of "le", "lt", "eq".


def _constraint(lit: Cmp):
    lin = linear(lit.left).plus(linear(lit.right), -1)
    coeffs = dict(lin.coeffs)
    k = lin.const
    op = lit.op
    if op in (">=", ">"):
        coeffs = {n: -c for n, c in coeffs.items()}
        k = -k
        op = "<=" if op == ">=" else "<"
    kind = {"<=": "le", "<": "lt", "==": "eq"}[op]
    return coeffs, k, kind


def _norm(coeffs: Dict[str, Fraction], k: Fraction, kind: str):
    coeffs = {n: c for n, c in coeffs.items() if c != 0}
    if not coeffs:
        return (), k, kind
    lead = abs(coeffs[min(coeffs)])
    items = tuple(sorted((n, c / lead) for n, c in coeffs.items()))
    return items, k / lead, kind


def _const_ok(k: Fraction, kind: str) -> bool:
    if kind == "le":
        return k <= 0
    if kind == "lt":
        return k < 0
    return k == 0


def _substitute(items, k, var, expr_coeffs, expr_const):
    """Replace ``var`` by ``sum(expr_coeffs) + expr_const`` in a constraint."""
    coeffs = dict(items)
    a = coeffs.pop(var, None)
    if a is None:
        return coeffs, k
    for n, c in expr_coeffs.items():
        coeffs[n] = coeffs.get(n, Fraction(0)) + a * c
    return coeffs, k + a * expr_const


def _pick_value(lo, lo_strict, hi, hi_strict, prefer_int: bool):
    def inside(v):
        if lo is not None and (v < lo or (lo_strict and v == lo)):
            return False
        if hi is not None and (v > hi or (hi_strict and v == hi)):
            return False
        return True

    if inside(Fraction(0)):
        return Fraction(0)
    if lo is not None and hi is not None:
        cand = Fraction(math.floor(lo) + 1) if lo_strict or lo.denominator != 1 else lo
        if inside(cand):
            return cand
        cand = Fraction(math.ceil(hi) - 1) if hi_strict or hi.denominator != 1 else hi
        if inside(cand):
            return cand
        return (lo + hi) / 2
    if lo is not None:
        return Fraction(math.floor(lo) + 1) if (lo_strict or lo.denominator != 1) else lo
    if hi is not None:
        return Fraction(math.ceil(hi) - 1) if (hi_strict or hi.denominator != 1) else hi
    return Fraction(0)


def _lra(constraints, clock: _Clock, int_vars: frozenset = frozenset()) -> Optional[Dict[str, Fraction]]:
    """Rational solution of a constraint conjunction, or ``None`` if infeasible.

    Equalities are solved for rational variables first, then for integer
    variables with a unit coefficient, so integer unknowns stay free when
    possible and branch-and-bound has less to repair.
    """
    eqs = [c for c in constraints if c[2] == "eq"]
    ineqs = [c for c in constraints if c[2] != "eq"]
    subs = []  # (var, coeffs, const): var = sum(coeffs) + const
    while eqs:
        clock.tick()
        items, k, _ = eqs.pop()
        coeffs = dict(items)
        if not coeffs:
            if k != 0:
                return None
            continue
        var = min(coeffs, key=lambda n: (n in int_vars, abs(coeffs[n]) != 1, n))
        a = coeffs.pop(var)
        expr_coeffs = {n: -c / a for n, c in coeffs.items()}
        expr_const = -k / a
        subs.append((var, expr_coeffs, expr_const))
        eqs = [_norm(*_substitute(i, kk, var, expr_coeffs, expr_const), kd) for i, kk, kd in eqs]
        ineqs = [_norm(*_substitute(i, kk, var, expr_coeffs, expr_const), kd) for i, kk, kd in ineqs]
    current = set()
    for c in ineqs:
        if not c[0]:
            if not _const_ok(c[1], c[2]):
                return None
        else:
            current.add(c)
    variables = sorted({n for c in current for n, _ in c[0]})
    log = []
    for x in variables:
        clock.tick()
        lowers, uppers, rest = [], [], []
        for c in current:
            coeffs = dict(c[0])
            a = coeffs.get(x)
            if a is None:
                rest.append(c)
            elif a > 0:
                uppers.append((coeffs, c[1], c[2], a))
            else:
                lowers.append((coeffs, c[1], c[2], a))
        log.append((x, lowers, uppers))
        new = set(rest)
        for lc, lk, lkind, la in lowers:
            for uc, uk, ukind, ua in uppers:
                clock.tick()
                # ua * (lower row) - la * (upper row) eliminates x (la < 0 < ua)
                coeffs = {}
                for n, c in lc.items():
                    coeffs[n] = coeffs.get(n, Fraction(0)) + ua * c
                for n, c in uc.items():
                    coeffs[n] = coeffs.get(n, Fraction(0)) - la * c
                coeffs.pop(x, None)
                kind = "lt" if "lt" in (lkind, ukind) else "le"
                item = _norm(coeffs, ua * lk - la * uk, kind)
                if not item[0]:
                    if not _const_ok(item[1], item[2]):
                        return None
                    continue
                new.add(item)
        current = new
    model: Dict[str, Fraction] = {}
    for x, lowers, uppers in reversed(log):
        clock.tick()
        lo = hi = None
        lo_strict = hi_strict = False
        for coeffs, k, kind, a in lowers:
            rest = sum((c * model.get(n, Fraction(0)) for n, c in coeffs.items() if n != x), Fraction(0)) + k
            bound = -rest / a
            if lo is None or bound > lo or (bound == lo and kind == "lt"):
                lo, lo_strict = bound, kind == "lt"
        for coeffs, k, kind, a in uppers:
            rest = sum((c * model.get(n, Fraction(0)) for n, c in coeffs.items() if n != x), Fraction(0)) + k
            bound = -rest / a
            if hi is None or bound < hi or (bound == hi and kind == "lt"):
                hi, hi_strict = bound, kind == "lt"
        model[x] = _pick_value(lo, lo_strict, hi, hi_strict, True)
    for var, expr_coeffs, expr_const in reversed(subs):
        model[var] = sum((c * model.setdefault(n, Fraction(0)) for n, c in expr_coeffs.items()), Fraction(0)) + expr_const
    return model


def _solve_arith(constraints, int_vars: set, clock: _Clock, relax: bool = False):
    """Branch-and-bound over :func:`_lra`, depth-first with an explicit stack.

    Branching bounds are kept per variable (only the tightest lower and upper
    bound), so a node's problem never grows beyond the base constraints plus
    two bounds per integer variable. ``relax`` solves the rational relaxation.
    """
    ints = frozenset(int_vars)
    base = [_norm(*c[:2], c[2]) for c in constraints]
    if relax or not ints:
        return _lra(base, clock, ints)
    stack = [{}]  # var -> (lower, upper) integer bounds, either may be None
    nodes = 0
    while stack:
        clock.tick()
        bounds = stack.pop()
        nodes += 1
        if nodes > BB_NODE_CAP:
            raise SolverUnsupported("branch-and-bound node limit")
        cons = list(base)
        for x, (lo, hi) in bounds.items():
            if lo is not None:
                cons.append(_norm({x: Fraction(-1)}, lo, "le"))
            if hi is not None:
                cons.append(_norm({x: Fraction(1)}, -hi, "le"))
        m = _lra(cons, clock, ints)
        if m is None:
            continue
        split = None
        for x in sorted(ints):
            v = m.get(x)
            if v is not None and v.denominator != 1:
                split = (x, v)
                break
        if split is None:
            return m
        x, v = split
        if abs(v) > BB_BOUND:
            raise SolverUnsupported("integer search bound exceeded")
        fl = Fraction(math.floor(v))
        lo, hi = bounds.get(x, (None, None))
        stack.append({**bounds, x: (fl + 1, hi)})
        stack.append({**bounds, x: (lo, fl)})
    return None


# -- boolean search ---------------------------------------------------------------


class BuiltinSolver:
    def __init__(self, enums: Optional[Dict[str, Tuple[str, ...]]] = None):
        self.enums = dict(enums or {})

    def solve(self, formulas: List[Expr], deadline: Optional[float] = None):
        """Returns ``("sat", model)``, ``("unsat", None)`` or ``("unknown", reason)``."""
        clock = _Clock(deadline)
        types: Dict[str, TypeTag] = {}
        for f in formulas:
            types.update(sym_vars(f))
        literals = set()
        for f in formulas:
            literals |= string_literals(f)
        self._types = types
        self._literals = literals
        conj = simplify(And(tuple(formulas))) if formulas else TRUE
        try:
            model = self._search([conj], [], {}, clock)
        except SolverTimeout:
            return "unknown", "timeout"
        except SolverUnsupported:
            return "unknown", "unsupported"
        if model is None:
            return "unsat", None
        full = {}
        for name, ty in sorted(types.items()):
            full[name] = model[name] if name in model else self._default(ty)
            if ty == INT:
                full[name] = int(full[name])
            elif ty == RAT:
                full[name] = Fraction(full[name])
        check = eval_concrete(And(tuple(formulas)), full) if formulas else True
        if check is not True:
            raise AssertionError(f"builtin solver produced a non-model {full!r}")
        return "sat", full

    def _default(self, ty: TypeTag):
        if ty == INT:
            return 0
        if ty == RAT:
            return Fraction(0)
        if ty == BOOL:
            return False
        if ty == STR:
            i = 0
            while f"s{i}" in self._literals:
                i += 1
            return f"s{i}"
        return EnumVal(ty.enum, self.enums[ty.enum][0])

    def _search(self, goals: List[Expr], lits: List[Expr], fixed: Dict[str, object], clock: _Clock):
        clock.tick()
        goals = list(goals)
        lits = list(lits)
        fixed = dict(fixed)
        ors: List[Or] = []
        while True:
            # flatten goals into literals and disjunctions
            while goals:
                g = goals.pop()
                if g == TRUE:
                    continue
                if g == FALSE:
                    return None
                if isinstance(g, And):
                    goals.extend(g.args)
                elif isinstance(g, Or):
                    ors.append(g)
                elif isinstance(g, Cmp) and g.op == "!=" and _is_numeric_cmp(g):
                    ors.append(simplify(Or((Cmp("<", g.left, g.right), Cmp(">", g.left, g.right)))))
                else:
                    lits.append(g)
            # propagate single-variable equalities
            new_fixed = {}
            for lit in lits:
                ec = _eq_const(lit)
                if ec is not None:
                    sym, v = ec
                    prev = fixed.get(sym.name, new_fixed.get(sym.name))
                    if prev is not None and prev != v:
                        return None
                    if sym.name not in fixed:
                        new_fixed[sym.name] = v
                elif isinstance(lit, Sym):
                    if fixed.get(lit.name, True) is not True:
                        return None
                    new_fixed.setdefault(lit.name, True)
                elif isinstance(lit, Not) and isinstance(lit.arg, Sym):
                    if fixed.get(lit.arg.name, False) is not False:
                        return None
                    new_fixed.setdefault(lit.arg.name, False)
            new_fixed = {n: v for n, v in new_fixed.items() if n not in fixed}
            if not new_fixed:
                break
            fixed.update(new_fixed)
            for lit in lits:
                b = simplify(_bind_syms(lit, fixed))
                if b == FALSE:
                    return None
                goals.append(b)
            lits = []
            for o in ors:
                goals.append(simplify(_bind_syms(o, fixed)))
            ors = []
        if not ors:
            return self._theory(lits, fixed, clock)
        # partial check on the rational relaxation: only a refutation prunes
        try:
            if self._theory(lits, fixed, clock, relax=True) is None:
                return None
        except SolverUnsupported:
            pass
        ors.sort(key=lambda o: len(o.args))
        first, rest = ors[0], ors[1:]
        undecided = None
        for child in first.args:
            try:
                r = self._search(rest + [child], lits, fixed, clock)
            except SolverUnsupported as exc:
                undecided = exc
                continue
            if r is not None:
                return r
        if undecided is not None:
            raise undecided
        return None

    def _theory(self, lits: List[Expr], fixed: Dict[str, object], clock: _Clock, relax: bool = False):
        model = dict(fixed)
        eq_atoms, arith, int_vars = [], [], set()
        for lit in lits:
            if isinstance(lit, Cmp):
                if _is_numeric_cmp(lit):
                    c = _constraint(lit)
                    arith.append(c)
                    int_vars.update(n for n in c[0] if self._types.get(n) == INT)
                else:
                    eq_atoms.append(lit)
            elif isinstance(lit, (Sym, Not)):
                continue  # booleans were fixed during propagation
            else:
                raise SolverUnsupported(f"atom {lit!r}")
        if eq_atoms:
            m = _solve_eq_theory(eq_atoms, self._types, self.enums, self._literals, clock)
            if m is None:
                return None
            model.update(m)
        if arith:
            m = _solve_arith(arith, int_vars, clock, relax)
            if m is None:
                return None
            model.update(m)
        return model
