import io
import json
import subprocess
import sys

import jsonschema
import pytest

from helpers import MODELS

from ccl import __version__
from ccl.cli import main, sweep_row
from ccl.schemas import ERROR_SCHEMA, envelope_schema

SV = str(MODELS / "student_vote.arc")
SV_ALT = str(MODELS / "student_vote_alt.arc")
EXB = str(MODELS / "explanation_b.arc")
SV_INPUTS = json.dumps([{"mtr": 355555, "vote": "mbse"}, {"mtr": 500000, "vote": "sa"}, {"mtr": 399999, "vote": "sa"}])


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), stdout=out, stderr=err)
    text = out.getvalue()
    return code, (json.loads(text) if text.strip().startswith("{") else text), err.getvalue()


def check_schema(env):
    if "error" in env:
        jsonschema.validate(env, ERROR_SCHEMA)
    else:
        jsonschema.validate(env, envelope_schema(env["command"]))


def test_run_reproduces_worked_trace(tmp_path):
    inputs = tmp_path / "inputs.json"
    inputs.write_text(SV_INPUTS)
    code, env, _ = call("run", SV, "--args", "400000", "--inputs", str(inputs), "--oracle", "0,1")
    assert code == 0
    check_schema(env)
    assert env["result"]["outputs"] == [
        {"mbse": "0.0", "sa": "0.0"},
        {"mbse": "1.5", "sa": "0.0"},
        {"mbse": "1.5", "sa": "1.0"},
    ]
    assert env["version"] == __version__ and env["schema"] == 1


COMMANDS = [
    ("validate", [EXB], 0),
    ("run", [EXB, "--inputs", '[{"x": 1}, {"x": 6}]'], 0),
    ("dse", [EXB, "--input-length", "2"], 0),
    ("dse", [SV, "--args", "400000", "--controller", "random-input", "--input-length", "2", "--seed", "9"], 0),
    ("metrics", [SV, "--args", "400000", "--input-length", "2", "--with-vars", "--reachable-bound", "50"], 0),
    ("metrics", [str(MODELS / "nondet.arc"), "--input-length", "2", "--nondet-mode", "exists"], 0),
    ("semdiff", [EXB, EXB, "--input-length", "2"], 0),
    ("semdiff", [EXB, str(MODELS / "explanation_b_alt.arc"), "--input-length", "2"], 1),
    ("brute", [EXB, "--domain", '{"x": [0, 1, 4, 6]}', "--input-length", "2"], 0),
    ("brute", [SV, SV_ALT, "--args", "400000", "--domain", '{"mtr": [355555], "vote": ["mbse", "sa"]}'], 0),
    ("sweep", [EXB, "--input-length", "2", "--timeouts", "1,5", "--repeats", "1"], 0),
]


@pytest.mark.parametrize("command,args,want", COMMANDS, ids=[f"{c}-{i}" for i, (c, _, _) in enumerate(COMMANDS)])
def test_envelopes_validate(command, args, want):
    code, env, _ = call(command, *args)
    assert code == want
    assert env["command"] == command
    check_schema(env)


@pytest.mark.parametrize(
    "argv",
    [
        ["dse", SV, "--args", "400000", "--input-length", "2", "--controller", "pc-random-negation", "--seed", "3"],
        ["metrics", str(MODELS / "nondet.arc"), "--input-length", "2"],
        ["semdiff", str(MODELS / "nondet.arc"), str(MODELS / "nondet_alt.arc"), "--input-length", "2"],
    ],
)
def test_deterministic_payload(argv):
    _, a, _ = call(*argv)
    _, b, _ = call(*argv)
    a.pop("wall_ms"), b.pop("wall_ms")
    a["result"].get("stats", {}).pop("wall_ms", None)
    b["result"].get("stats", {}).pop("wall_ms", None)
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


def test_validate_reports_diagnostics():
    code, env, _ = call("validate", str(MODELS / "no_delay_cycle.arc"))
    assert code == 1
    assert [d["code"] for d in env["result"]["diagnostics"]] == ["CYCLE_NO_DELAY"]


def test_parse_error_envelope(tmp_path):
    bad = tmp_path / "bad.arc"
    bad.write_text("root component {")
    code, env, err = call("run", str(bad), "--inputs", "[]")
    assert code == 2
    check_schema(env)
    assert env["error"]["code"] == "PARSE_ERROR" and env["error"]["diagnostics"]
    assert "ccl:" in err


@pytest.mark.parametrize(
    "argv,code_name",
    [
        (["run", "/nonexistent.arc", "--inputs", "[]"], "IO_ERROR"),
        (["run", EXB, "--inputs", "{not json"], "BAD_JSON"),
        (["run", EXB, "--inputs", '[{"y": 1}]'], None),
        (["run", SV, "--inputs", "[]"], "ARITY_MISMATCH"),
        (["run", SV, "--args", "400000", "--inputs", SV_INPUTS, "--oracle", "7"], "ORACLE_OUT_OF_RANGE"),
        (["brute", EXB, "--domain", '{"x": [0, 1]}', "--input-length", "30", "--cap", "10"], "CAP_EXCEEDED"),
        (["sweep", EXB, "--timeouts", "0"], "USAGE"),
    ],
)
def test_errors_exit_two(argv, code_name):
    code, env, _ = call(*argv)
    assert code == 2
    check_schema(env)
    if code_name:
        assert env["error"]["code"] == code_name


def test_usage_error_exit_two():
    code, _, _ = call("dse")
    assert code == 2
    code, _, _ = call("frobnicate")
    assert code == 2


def test_dse_budget_exit_one():
    code, env, _ = call("dse", SV, "--args", "400000", "--input-length", "2", "--max-paths", "3")
    assert code == 1
    check_schema(env)
    assert "budget_exceeded" in env["result"] and len(env["result"]["interesting"]) == 3


def test_text_format():
    code, text, _ = call("run", EXB, "--inputs", '[{"x": 1}]', "--format", "text")
    assert code == 0
    assert isinstance(text, str) and "command" in text and "run" in text


def test_sweep_row_arithmetic():
    row = sweep_row(10, t=50.0, n=90, t_base=100.0, n_base=100)
    assert row.time_improvement == pytest.approx(0.5)
    assert row.result_deterioration == pytest.approx(0.1)
    slower = sweep_row(10, t=150.0, n=100, t_base=100.0, n_base=100)
    assert slower.time_improvement == pytest.approx(-0.5) and slower.result_deterioration == 0


def test_console_script():
    proc = subprocess.run(
        [sys.executable, "-m", "ccl.cli", "run", EXB, "--inputs", '[{"x": 1}]'], capture_output=True, text=True
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["result"]["outputs"] == [{"y": 1}]
