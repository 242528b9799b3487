import pytest

from helpers import flat

from ccl.analyses import ALTERNATIVE, DISJOINT, INCOMPARABLE, coverage, minimality, nondet_compare, nondet_pairs, redundancy_pairs
from ccl.bruteforce import enumerate_runs
from ccl.controllers import ControllerConfig, InterestingInput, explore
from ccl.errors import AnalysisError
from ccl.executor import default_oracle
from ccl.expr import Add, Cmp, Const, Sub, Sym
from ccl.symbolic import BranchRecord, PathCondition
from ccl.values import INT

X = Sym("x", INT)
Y = Sym("y", INT)


def c(v):
    return Const(v, INT)


def item(conds=(), outs=()):
    records = tuple(BranchRecord(("", f"t{k}", 1), e, True) for k, e in enumerate(conds))
    return InterestingInput([], [], [{"y": o} for o in outs], PathCondition(records), default_oracle())


def test_minimality_duplicates():
    a = item(outs=[Sub(Add(X, c(1)), c(4))])
    b = item(outs=[Add(Sub(X, c(5)), c(2))])
    rep = minimality([a, b])
    assert rep.groups == [[0, 1]]
    assert rep.duplicate_ratio == 0.5
    assert minimality([a]).duplicate_ratio == 0
    with pytest.raises(AnalysisError):
        minimality([])


def test_redundancy():
    p1 = item([Cmp("<", Add(X, c(1)), c(5))], [Sub(Add(X, c(1)), c(2))])
    p2 = item([Cmp("<", Add(X, c(2)), c(6))], [Sub(Add(X, c(2)), c(3))])
    p3 = item([Cmp("<", X, c(7))], [Sub(X, c(1))])
    pairs = redundancy_pairs([p1, p2, p3])
    assert [(p.first, p.second) for p in pairs] == [(0, 1)]
    assert pairs[0].condition == "x < 4"
    assert redundancy_pairs([p1, p1])[0].outputs == ((("y", "x - 1"),),)


def test_nondet_compare():
    gt = Cmp(">", X, c(5))
    a = [gt, Cmp("<", Add(Y, c(2)), c(6))]
    b = [gt, Cmp("<", Add(Y, c(2)), c(8))]
    assert nondet_compare(a, b) == (ALTERNATIVE, ["equal", "sat"])
    assert nondet_compare([gt], [Cmp("<", X, c(3))])[0] == DISJOINT
    assert nondet_compare(a, a)[0] == ALTERNATIVE
    assert nondet_compare(a, [gt])[0] == INCOMPARABLE


def test_nondet_pairs_modes():
    gt = Cmp(">", X, c(5))
    items = [
        item([gt, Cmp("<", Add(Y, c(2)), c(6))]),
        item([gt, Cmp("<", Add(Y, c(2)), c(8))]),
        item([Cmp("<", X, c(3)), Cmp("<", Y, c(0))]),
        item([gt, Cmp(">", Y, c(10))]),
    ]
    full = nondet_pairs(items)
    # y > 10 is disjoint from both y + 2 < 6 and y + 2 < 8
    assert [(i, j) for i, j, _ in full.pairs] == [(0, 1)]
    ex = nondet_pairs(items, mode="exists")
    assert ex.exists and len(ex.pairs) == 1
    with pytest.raises(AnalysisError):
        nondet_pairs(items, mode="some")


def _pairwise(lists):
    out = []
    for i in range(len(lists)):
        for j in range(i + 1, len(lists)):
            if nondet_compare(lists[i], lists[j])[0] == ALTERNATIVE:
                out.append((i, j))
    return out


def test_nondet_pairs_match_pairwise_definition():
    res = explore(flat("nondet"), ControllerConfig(kind="pc", input_length=2))
    from ccl.symbolic import decompose

    lists = [decompose(i.path_condition) for i in res.interesting]
    assert [(i, j) for i, j, _ in nondet_pairs(res).pairs] == _pairwise(lists)


def test_nondet_model_has_alternatives():
    res = explore(flat("nondet"), ControllerConfig(kind="pc", input_length=1))
    assert nondet_pairs(res).exists
    det = explore(flat("explanation_b"), ControllerConfig(kind="pc", input_length=2))
    assert not nondet_pairs(det).exists


@pytest.mark.slow
def test_coverage_student_vote():
    f = flat("student_vote", 400000)
    res = explore(f, ControllerConfig(kind="pc", input_length=3))
    cov = coverage(res, f)
    assert cov.transition_ratio == 1.0
    assert cov.transitions_total == 8


def test_coverage_empty_and_run_once():
    f = flat("explanation_b")
    empty = coverage([], f)
    assert (empty.transitions_visited, empty.states_visited) == (0, 0)
    once = explore(f, ControllerConfig(kind="run-once", input_length=2, initial_inputs=[{"x": 1}, {"x": 6}]))
    cov = coverage(once, f)
    fired = {t for tick in once.interesting[0].trace.ticks for t in tick.fired}
    assert cov.transitions_visited == len(fired) == 2


def test_coverage_brute_force_cross_check():
    f = flat("partial")
    dom = {"cmd": ["arm", "fire", "x"], "level": [1, 2, 3]}
    res = explore(f, ControllerConfig(kind="pc", input_length=3, domain=dom))
    fired = {t for r in enumerate_runs(f, dom, 3) for tick in r.trace.ticks for t in tick.fired}
    assert coverage(res, f).transitions_visited == len(fired)


def test_coverage_with_vars():
    f = flat("partial")
    res = explore(f, ControllerConfig(kind="pc", input_length=3))
    cov = coverage(res, f, with_vars=True, reachable_bound=10)
    assert cov.states_with_vars_visited >= cov.states_visited
    assert 0 < cov.states_with_vars_ratio <= 1
