from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ccl.errors import SymbolicError
from ccl.expr import FALSE, TRUE, Add, And, Cmp, Const, Mul, Neg, Not, Or, Sub, Sym, Var, to_text
from ccl.parser import parse_expr
from ccl.symbolic import (
    BranchRecord,
    PathCondition,
    decompose,
    eval_concrete,
    negate,
    simplify,
    substitute,
)
from ccl.values import INT, NULL, RAT

X = Sym("x", INT)
Y = Sym("y", INT)
R = Sym("r", RAT)


def c(v, ty=INT):
    return Const(v, ty)


def test_eval_examples():
    assert eval_concrete(parse_expr("2*x"), {"x": 6}) == 12
    assert eval_concrete(parse_expr("x+1-4"), {"x": 7}) == 4
    assert eval_concrete(And((TRUE, Var("b"))), {"b": False}) is False


def test_eval_unbound():
    with pytest.raises(SymbolicError) as exc:
        eval_concrete(parse_expr("x + 1"), {})
    assert exc.value.code == "UNBOUND_NAME"


def test_null_in_arithmetic_and_connectives():
    assert eval_concrete(Add(Var("n"), c(1)), {"n": NULL}) is NULL
    # comparisons with Null are false, so such a guard never enables a transition
    assert eval_concrete(Cmp(">", Var("n"), c(0)), {"n": NULL}) is False
    assert eval_concrete(Cmp("<=", Var("n"), c(0)), {"n": NULL}) is False
    assert eval_concrete(And((TRUE, Cmp(">", Var("n"), c(0)))), {"n": NULL}) is False


def test_substitute():
    z = Var("z")
    assert substitute(Cmp("<", z, c(10)), {"z": Mul(c(2), X)}) == Cmp("<", Mul(c(2), X), c(10))
    e = Add(X, c(1))
    assert substitute(e, {}) == e


def test_simplify_anchors():
    assert simplify(Sub(Add(X, c(1)), c(4))) == simplify(Add(Sub(X, c(5)), c(2)))
    assert to_text(simplify(Sub(Add(X, c(1)), c(4)))) == "x - 3"
    assert simplify(Cmp("<", Add(X, c(1)), c(5))) == simplify(Cmp("<", Add(X, c(2)), c(6)))
    assert to_text(simplify(Cmp("<", Add(X, c(1)), c(5)))) == "x < 4"
    assert simplify(X) == X


def test_int_comparisons_are_tightened():
    assert to_text(simplify(Cmp("<=", X, c(3)))) == "x < 4"
    assert to_text(simplify(Cmp(">=", Mul(c(2), X), c(5)))) == "x >= 3"
    assert to_text(simplify(Cmp(">", X, c(2)))) == "x >= 3"
    assert simplify(And((Cmp(">", X, c(3)), Cmp("<", X, c(4))))) == FALSE


def test_rational_comparisons_keep_strictness():
    assert to_text(simplify(Cmp("<=", R, Const(Fraction(3, 2), RAT)))) == "r <= 1.5"


def test_negate():
    e = Cmp("<", Mul(c(2), X), c(10))
    assert to_text(negate(e)) == "x >= 5"
    assert negate(negate(e)) == simplify(e)
    assert negate(TRUE) == FALSE


def test_decompose():
    a = Cmp(">", X, c(5))
    b = Cmp("<", Add(Y, c(2)), c(6))
    pc = PathCondition((BranchRecord(("", "t1", 1), a, True), BranchRecord(("", "t2", 1), b, False)))
    assert decompose(pc) == [simplify(a), simplify(Not(b))]
    assert decompose(PathCondition()) == []


def test_counter_update_text():
    e = substitute(parse_expr("counter + factor"), {"counter": Add(Const(Fraction(0), RAT), Const(Fraction(3, 2), RAT)), "factor": Const(Fraction(1), RAT)})
    assert to_text(e) == "0.0 + 1.5 + 1.0"
    assert to_text(simplify(e)) == "2.5"


# -- properties -----------------------------------------------------------------------------

_ATOMS = [X, Y, Sym("z", INT)]


def _lin():
    leaf = st.one_of(st.sampled_from(_ATOMS), st.integers(-6, 6).map(c))
    return st.recursive(
        leaf,
        lambda inner: st.one_of(
            st.tuples(inner, inner).map(lambda t: Add(*t)),
            st.tuples(inner, inner).map(lambda t: Sub(*t)),
            st.tuples(st.integers(-3, 3).map(c), inner).map(lambda t: Mul(*t)),
            inner.map(Neg),
        ),
        max_leaves=6,
    )


def _bool():
    cmp = st.tuples(st.sampled_from(["<", "<=", ">", ">=", "==", "!="]), _lin(), _lin()).map(lambda t: Cmp(*t))
    return st.recursive(
        cmp,
        lambda inner: st.one_of(
            inner.map(Not),
            st.lists(inner, min_size=1, max_size=3).map(lambda xs: And(tuple(xs))),
            st.lists(inner, min_size=1, max_size=3).map(lambda xs: Or(tuple(xs))),
        ),
        max_leaves=4,
    )


_ENV = st.fixed_dictionaries({"x": st.integers(-5, 5), "y": st.integers(-5, 5), "z": st.integers(-5, 5)})


@settings(max_examples=300, deadline=None)
@given(_lin(), _ENV)
def test_simplify_preserves_value(e, env):
    assert eval_concrete(simplify(e), env) == eval_concrete(e, env)


@settings(max_examples=300, deadline=None)
@given(_bool(), _ENV)
def test_simplify_preserves_truth(e, env):
    assert eval_concrete(simplify(e), env) == eval_concrete(e, env)


@settings(max_examples=300, deadline=None)
@given(_bool())
def test_simplify_idempotent(e):
    s = simplify(e)
    assert simplify(s) == s


@settings(max_examples=200, deadline=None)
@given(_bool(), _ENV)
def test_negate_flips_truth(e, env):
    assert eval_concrete(negate(e), env) == (not eval_concrete(e, env))
