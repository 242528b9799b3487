import pytest

from helpers import DOMAIN_SV, flat

from ccl.analyses import minimality
from ccl.bruteforce import enumerate_runs, feasible_path_classes
from ccl.controllers import ControllerConfig, explore, next_negation_target
from ccl.errors import BudgetExceeded, ExplorationError
from ccl.executor import replay_check, run
from ccl.symbolic import BranchRecord, PathCondition

SEED = [{"x": 1}, {"x": 6}]


def names(key):
    return [("" if taken else "-") + bid[1] for _, bid, taken in key]


def paths(res):
    return [names(i.path_key) for i in res.interesting]


def test_narrative_order():
    res = explore(flat("explanation_b"), ControllerConfig(kind="pc", input_length=2, initial_inputs=SEED))
    log = [(names(k), s) for k, s in res.log]
    assert paths(res)[:2] == [["A", "-B", "C", "-D"], ["-A", "B"]]
    assert log[:2] == [(["-A"], "sat"), (["-A", "-B"], "unsat")]
    # after backtracking the search moves on to C in the first run's second tick
    assert log[3] == (["A", "-B", "-C"], "sat")
    assert len(res.interesting) == 4


def test_path_coverage_matches_brute_force():
    f = flat("explanation_b")
    dom = {"x": [-1, 0, 1, 2, 3, 4, 6]}
    brute = feasible_path_classes(enumerate_runs(f, dom, 3))
    for kind in ("pc", "pc-gc", "pc-random-negation"):
        res = explore(f, ControllerConfig(kind=kind, input_length=3, domain=dom, seed=3))
        assert {i.path_key for i in res.interesting} == brute, kind


def test_nondeterministic_choices_are_explored():
    f = flat("nondet")
    dom = {"x": [-1, 0, 1, 2]}
    res = explore(f, ControllerConfig(kind="pc", input_length=2, domain=dom))
    assert {i.path_key for i in res.interesting} == feasible_path_classes(enumerate_runs(f, dom, 2))
    assert any(i.oracle.choices for i in res.interesting)


def test_every_result_replays():
    f = flat("student_vote", 400000)
    res = explore(f, ControllerConfig(kind="pc", input_length=2))
    assert all(replay_check(f, i) for i in res.interesting)


def test_visit_once_aborts_reuse_of_a():
    res = explore(flat("explanation_b"), ControllerConfig(kind="term-transition", input_length=2, initial_inputs=SEED))
    assert paths(res) == [["A", "-B", "C", "-D"], ["-A", "B"]]
    assert res.stats.paths_aborted == 1


def test_term_automaton_state():
    res = explore(flat("explanation_b"), ControllerConfig(kind="term-automaton-state", input_length=2, initial_inputs=SEED))
    assert len(res.interesting) == 1
    assert res.stats.paths_aborted == 2


def test_boring_interesting_allows_more_visits():
    f = flat("explanation_b")
    base = ControllerConfig(kind="boring-interesting", input_length=2, initial_inputs=SEED)
    boring = explore(f, base)
    loose = explore(
        f,
        ControllerConfig(
            kind="boring-interesting", input_length=2, initial_inputs=SEED, max_boring=3, interesting=frozenset({"/C"})
        ),
    )
    assert len(loose.interesting) > len(boring.interesting)


def test_run_once():
    res = explore(flat("student_vote", 400000), ControllerConfig(kind="run-once", input_length=3))
    assert len(res.interesting) == 1
    assert res.stats.solver_calls == 0
    assert minimality(res).duplicate_ratio == 0


def test_random_input():
    f = flat("student_vote", 400000)
    a = explore(f, ControllerConfig(kind="random-input", input_length=2, seed=4))
    b = explore(f, ControllerConfig(kind="random-input", input_length=2, seed=4))
    assert a.stats.paths_explored == 10 and a.stats.solver_calls == 0
    assert [i.inputs for i in a.interesting] == [i.inputs for i in b.interesting]
    assert all(replay_check(f, i) for i in a.interesting)


def test_random_input_respects_domain():
    res = explore(flat("student_vote", 400000), ControllerConfig(kind="random-input", input_length=2, domain=DOMAIN_SV))
    for ii in res.interesting:
        for tick in ii.inputs:
            assert tick["mtr"] in DOMAIN_SV["mtr"] and tick["vote"] in DOMAIN_SV["vote"]


def test_path_budget():
    with pytest.raises(BudgetExceeded) as exc:
        explore(flat("student_vote", 400000), ControllerConfig(kind="pc", input_length=2, max_paths=5))
    assert len(exc.value.partial.interesting) == 5


def test_bad_config():
    for kw in ({"kind": "nope"}, {"input_length": 0}, {"max_visits": 0}, {"iterations": -1}):
        with pytest.raises(ExplorationError):
            ControllerConfig(**kw)
    with pytest.raises(ExplorationError):
        ControllerConfig(input_length=2, initial_inputs=[{"x": 1}])


def test_timeout_skips_but_stays_sound():
    f = flat("adversarial")
    res = explore(f, ControllerConfig(kind="pc", input_length=1, solver_timeout_ms=1))
    assert res.stats.paths_skipped_timeout > 0
    assert all(replay_check(f, i) for i in res.interesting)


# -- negation target --------------------------------------------------------------------------


def _pc(*signs):
    trace = run(flat("explanation_b"), SEED)
    recs = trace.path_condition.records
    return PathCondition(tuple(BranchRecord(r.branch_id, r.cond, s) for r, s in zip(recs, signs)))


def test_next_negation_target():
    pc = _pc(True, False, True, False)
    assert next_negation_target(pc, set()) == 3
    keys = tuple(r.key() for r in pc.records)
    done = {keys[:i] + (("b", r.branch_id, not r.taken),) for i, r in enumerate(pc.records)}
    assert next_negation_target(pc, done) is None
    assert next_negation_target(PathCondition(pc.records[:1]), set()) == 0
