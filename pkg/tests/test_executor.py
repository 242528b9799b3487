from fractions import Fraction

import pytest

from helpers import flat

from ccl.controllers import ControllerConfig, explore, interesting_from_trace
from ccl.errors import ExecutionError
from ccl.executor import Oracle, default_oracle, replay_check, run, trace_to_json
from ccl.expr import to_text
from ccl.symbolic import BranchRecord, PathCondition
from ccl.values import NULL

SV_INPUTS = [{"mtr": 355555, "vote": "mbse"}, {"mtr": 500000, "vote": "sa"}, {"mtr": 399999, "vote": "sa"}]


def outputs(trace):
    return [(t.outputs["mbse"].conc, t.outputs["sa"].conc) for t in trace.ticks]


def test_worked_trace():
    trace = run(flat("student_vote", 400000), SV_INPUTS, Oracle((0, 1)))
    assert outputs(trace) == [(0, 0), (Fraction(3, 2), 0), (Fraction(3, 2), 1)]
    assert trace.oracle_used.choices == (0, 1)
    # two in-range matriculation numbers, one decision each
    assert [d.decision_id for t in trace.ticks for d in t.decisions] == [("dist", 1), ("dist", 3)]


def test_counter_is_internal_before_output():
    trace = run(flat("student_vote", 400000), SV_INPUTS[:1], Oracle((0,)))
    tick = trace.ticks[0]
    assert tick.state_snapshot["counterMBSE"][1]["c"].conc == Fraction(3, 2)
    assert (tick.outputs["mbse"].conc, tick.outputs["sa"].conc) == (0, 0)


def test_symbolic_counter_text():
    trace = run(flat("student_vote", 400000), SV_INPUTS, Oracle((0, 1)))
    assert to_text(trace.ticks[2].outputs["sa"].sym) == "0.0 + 0.0 + 1.0"


def test_symbolic_inputs_in_guards():
    trace = run(flat("explanation_b"), [{"x": 6}])
    conds = [to_text(r.cond) for r in trace.path_condition.records]
    # guards are recorded canonically over the tick-1 input symbol
    assert conds == ["in_x_t1 >= 1", "in_x_t1 < 1"]


def test_partial_automaton_emits_null():
    trace = run(flat("partial"), [{"cmd": "arm", "level": 2}, {"cmd": "x", "level": 1}, {"cmd": "fire", "level": 1}])
    shots = [t.outputs["shots"].conc for t in trace.ticks]
    assert shots == [0, NULL, 1]
    assert trace.ticks[1].fired == []
    assert trace.ticks[1].state_snapshot["ctl"][0] == "Armed"


def test_empty_input_sequence():
    trace = run(flat("student_vote", 400000), [])
    assert trace.ticks == []


def test_oracle_errors():
    f = flat("student_vote", 400000)
    with pytest.raises(ExecutionError) as exc:
        run(f, SV_INPUTS[:1], Oracle(()))
    assert exc.value.code == "ORACLE_EXHAUSTED"
    with pytest.raises(ExecutionError) as exc:
        run(f, SV_INPUTS[:1], Oracle((2,)))
    assert exc.value.code == "ORACLE_OUT_OF_RANGE"


def test_input_errors():
    f = flat("student_vote", 400000)
    with pytest.raises(ExecutionError) as exc:
        run(f, [{"mtr": 1}])
    assert exc.value.code == "MISSING_INPUT"
    with pytest.raises(ExecutionError) as exc:
        run(f, [{"mtr": 1, "vote": "sa", "extra": 3}])
    assert exc.value.code == "UNKNOWN_INPUT"
    with pytest.raises(ExecutionError) as exc:
        run(f, [{"mtr": "one", "vote": "sa"}])
    assert exc.value.code == "TYPE_MISMATCH"


def test_null_input_disables_guards():
    trace = run(flat("explanation_b"), [{"x": NULL}])
    assert trace.ticks[0].fired == []
    assert trace.ticks[0].outputs["y"].conc is NULL


def test_run_is_deterministic():
    f = flat("student_vote", 400000)
    a = trace_to_json(run(f, SV_INPUTS, Oracle((0, 1))))
    b = trace_to_json(run(f, SV_INPUTS, Oracle((0, 1))))
    assert a == b


def test_replay_check():
    f = flat("student_vote", 400000)
    res = explore(f, ControllerConfig(kind="pc", input_length=2))
    assert res.interesting and all(replay_check(f, ii) for ii in res.interesting)
    ii = res.interesting[-1]
    recs = list(ii.path_condition.records)
    r = recs[0]
    recs[0] = BranchRecord(r.branch_id, r.cond, not r.taken)
    ii.path_condition = PathCondition(tuple(recs))
    assert not replay_check(f, ii)


def test_replay_detects_output_change():
    f = flat("explanation_b")
    ii = interesting_from_trace([{"x": 1}], run(f, [{"x": 1}], default_oracle()))
    assert replay_check(f, ii)
    ii.outputs_concrete = [{"y": 2}]
    assert not replay_check(f, ii)
