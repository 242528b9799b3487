"""Shared fixtures for the test suite: model loading and the solver fuzzer."""

from __future__ import annotations

import random
from fractions import Fraction
from pathlib import Path

from ccl.expr import Add, And, Cmp, Const, Mul, Not, Or, Sym, Sub
from ccl.ir import flatten
from ccl.parser import parse_file
from ccl.symbolic import eval_concrete
from ccl.values import INT, RAT, STR, EnumVal, enum_type

ROOT = Path(__file__).resolve().parent.parent
MODELS = ROOT / "models"

DOMAIN_SV = {"mtr": [349999, 355555, 400001], "vote": ["mbse", "sa", "mbse&sa", "x"]}


def model(name: str):
    return parse_file(MODELS / f"{name}.arc")


def flat(name: str, *args):
    return flatten(model(name), list(args))


def all_model_paths():
    return sorted(MODELS.glob("*.arc"))


# -- solver fuzzing ---------------------------------------------------------------------

COLOR = enum_type("Color")
ENUMS = {"Color": ("Red", "Green", "Blue")}

DOMAINS = {
    INT: [-2, -1, 0, 1, 2],
    RAT: [Fraction(-1), Fraction(-1, 2), Fraction(0), Fraction(1, 2), Fraction(1)],
    STR: ["a", "b", ""],
    COLOR: [EnumVal("Color", v) for v in ENUMS["Color"]],
}

_VARS = {
    INT: [Sym("i0", INT), Sym("i1", INT), Sym("i2", INT)],
    RAT: [Sym("r0", RAT), Sym("r1", RAT)],
    STR: [Sym("s0", STR), Sym("s1", STR)],
    COLOR: [Sym("e0", COLOR), Sym("e1", COLOR)],
}


def _num_term(rng: random.Random, ty):
    pool = _VARS[INT] + (_VARS[RAT] if ty == RAT else [])
    terms = []
    for v in rng.sample(pool, rng.randint(1, min(3, len(pool)))):
        c = rng.choice([-3, -2, -1, 1, 2, 3])
        terms.append(v if c == 1 else Mul(Const(c, INT), v))
    e = terms[0]
    for t in terms[1:]:
        e = Add(e, t) if rng.random() < 0.6 else Sub(e, t)
    if rng.random() < 0.4:
        e = Add(e, Const(rng.randint(-3, 3), INT))
    return e


def _num_const(rng: random.Random, ty):
    if ty == RAT and rng.random() < 0.5:
        return Const(Fraction(rng.randint(-6, 6), rng.choice([1, 2, 3, 4])), RAT)
    return Const(rng.randint(-5, 5), INT)


def random_atom(rng: random.Random):
    kind = rng.random()
    if kind < 0.6:
        ty = INT if rng.random() < 0.6 else RAT
        return Cmp(rng.choice(["<", "<=", ">", ">=", "==", "!="]), _num_term(rng, ty), _num_const(rng, ty))
    ty = STR if kind < 0.8 else COLOR
    a = rng.choice(_VARS[ty])
    if rng.random() < 0.4:
        b = rng.choice([v for v in _VARS[ty] if v != a])
    else:
        b = Const(rng.choice(DOMAINS[ty] + (["zz"] if ty == STR else [])), ty)
    return Cmp(rng.choice(["==", "!="]), a, b)


def random_literal(rng: random.Random):
    r = rng.random()
    if r < 0.15:
        return Or((random_atom(rng), random_atom(rng)))
    if r < 0.25:
        return Not(random_atom(rng))
    return random_atom(rng)


def random_conjunction(rng: random.Random, max_atoms: int = 4):
    return [random_literal(rng) for _ in range(rng.randint(1, max_atoms))]


def domain_constraints(formulas):
    """Membership disjunctions pinning every variable to its finite test domain."""
    from ccl.expr import sym_vars

    names = {}
    for f in formulas:
        names.update(sym_vars(f))
    out = []
    for name, ty in sorted(names.items()):
        out.append(Or(tuple(Cmp("==", Sym(name, ty), Const(v, ty)) for v in DOMAINS[ty])))
    return names, out


def brute_sat(formulas, names) -> bool:
    """Exhaustive search over the test domains.

    Variables are assigned in name order; each formula is evaluated as soon as
    all of its variables are bound, which prunes dead prefixes early.
    """
    from ccl.expr import sym_vars

    ordered = sorted(names.items())
    index = {n: k for k, (n, _) in enumerate(ordered)}
    ready = [[] for _ in ordered]
    for f in formulas:
        vs = sym_vars(f)
        ready[max(index[n] for n in vs) if vs else 0].append(f)
    if not ordered:
        return all(eval_concrete(f, {}) is True for f in formulas)
    env = {}

    def go(k):
        if k == len(ordered):
            return True
        name, ty = ordered[k]
        for v in DOMAINS[ty]:
            env[name] = v
            if all(eval_concrete(f, env) is True for f in ready[k]) and go(k + 1):
                return True
        del env[name]
        return False

    return go(0)
