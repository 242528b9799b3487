"""Acceptance suite: one check per criterion, each printing a pass/fail line.

Run under pytest (the lines are repeated in the terminal summary) or
directly with ``python3 tests/test_acceptance.py``.
"""

from __future__ import annotations

import io
import json
import random
import sys
import time
from fractions import Fraction
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from helpers import (  # noqa: E402
    DOMAIN_SV,
    ENUMS,
    MODELS,
    all_model_paths,
    brute_sat,
    domain_constraints,
    flat,
    random_conjunction,
)

from ccl.analyses import ALTERNATIVE, DISJOINT, minimality, nondet_pairs  # noqa: E402
from ccl.bruteforce import brute_diff, enumerate_runs, feasible_path_classes  # noqa: E402
from ccl.cli import main  # noqa: E402
from ccl.controllers import ControllerConfig, InterestingInput, explore  # noqa: E402
from ccl.errors import CclError  # noqa: E402
from ccl.executor import Oracle, default_oracle, replay_check, run  # noqa: E402
from ccl.expr import And, Add, Cmp, Const, Sub, Sym, to_text  # noqa: E402
from ccl.parser import parse_file, parse_model, render_model  # noqa: E402
from ccl.semdiff import semantic_diff_flat  # noqa: E402
from ccl.solver import solve  # noqa: E402
from ccl.symbolic import BranchRecord, PathCondition, eval_concrete, simplify  # noqa: E402
from ccl.values import INT, format_rational  # noqa: E402

LINES: list = []


def _report(n: int, title: str, ok: bool, detail: str) -> None:
    line = f"ACCEPTANCE {n:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    LINES.append(line)
    print(line)


# -- individual criteria: each returns (ok, detail) -------------------------------------------


def trace_reproduction():
    inputs = json.dumps([{"mtr": 355555, "vote": "mbse"}, {"mtr": 500000, "vote": "sa"}, {"mtr": 399999, "vote": "sa"}])
    out = io.StringIO()
    t0 = time.monotonic()
    code = main(
        ["run", str(MODELS / "student_vote.arc"), "--args", "400000", "--inputs", inputs, "--oracle", "0,1"],
        stdout=out,
        stderr=io.StringIO(),
    )
    elapsed = time.monotonic() - t0
    ticks = json.loads(out.getvalue())["result"]["ticks"]
    got = [(Fraction(t["outputs"]["mbse"]["value"]), Fraction(t["outputs"]["sa"]["value"])) for t in ticks]
    want = [(Fraction(0), Fraction(0)), (Fraction(3, 2), Fraction(0)), (Fraction(3, 2), Fraction(1))]
    ok = code == 0 and got == want and elapsed < 1.0
    shown = ", ".join(f"({format_rational(a)}, {format_rational(b)})" for a, b in got)
    return ok, f"outputs [{shown}] in {elapsed * 1000:.0f} ms"


def first_output_law():
    f = flat("student_vote", 400000)
    rng = random.Random(2)
    votes = ["mbse", "sa", "mbse&sa", "", "x"]
    bad = 0
    for _ in range(200):
        n = rng.randint(1, 4)
        inputs = [{"mtr": rng.randint(0, 10**6), "vote": rng.choice(votes)} for _ in range(n)]
        trace = run(f, inputs, Oracle((), lambda count: rng.randrange(count)))
        first = trace.ticks[0].outputs
        if (first["mbse"].conc, first["sa"].conc) != (0, 0):
            bad += 1
    return bad == 0, f"{200 - bad}/200 random inputs give (0.0, 0.0) at tick 1"


def worked_exploration():
    f = flat("explanation_b")
    cfg = ControllerConfig(kind="pc", input_length=2, initial_inputs=[{"x": 1}, {"x": 6}])
    res = explore(f, cfg)

    def names(key):
        return [("" if taken else "-") + bid[1] for _, bid, taken in key]

    log = [(names(k), s) for k, s in res.log]
    first = names(res.interesting[0].path_key)
    second = names(res.interesting[1].path_key)
    narrative = (
        first == ["A", "-B", "C", "-D"]
        and log[0] == (["-A"], "sat")
        and second == ["-A", "B"]
        and log[1] == (["-A", "-B"], "unsat")
        and any(k[-1] == "-C" for k, _ in log)
    )
    dom = {"x": [0, 1, 4, 6]}
    brute = feasible_path_classes(enumerate_runs(f, dom, 2))
    dse = {i.path_key for i in explore(f, ControllerConfig(kind="pc", input_length=2, domain=dom)).interesting}
    ok = narrative and dse == brute
    return ok, f"narrative={narrative}, [-A,-B] {log[1][1]}, classes dse={len(dse)} brute={len(brute)} equal={dse == brute}"


def simplifier_anchors():
    x = Sym("x", INT)
    one, two, four, five, six = (Const(v, INT) for v in (1, 2, 4, 5, 6))
    a = simplify(Sub(Add(x, one), four))
    b = simplify(Add(Sub(x, five), two))
    c = simplify(Cmp("<", Add(x, one), five))
    d = simplify(Cmp("<", Add(x, two), six))
    ok = a == b and to_text(a) == "x - 3" and c == d and to_text(c) == "x < 4"
    return ok, f"{to_text(a)} | {to_text(b)} | {to_text(c)} | {to_text(d)}"


def _path(*conds):
    records = tuple(BranchRecord(("", f"t{k}", 1), c, True) for k, c in enumerate(conds))
    return InterestingInput([], [], [], PathCondition(records), default_oracle())


def nondet_anchor():
    x, y = Sym("x", INT), Sym("y", INT)
    gt = Cmp(">", x, Const(5, INT))
    p1 = _path(gt, Cmp("<", Add(y, Const(2, INT)), Const(6, INT)))
    p2 = _path(gt, Cmp("<", Add(y, Const(2, INT)), Const(8, INT)))
    p3 = _path(Cmp("<", x, Const(3, INT)), Cmp("<", Add(y, Const(2, INT)), Const(8, INT)))
    alt = nondet_pairs([p1, p2])
    dis = nondet_pairs([p1, p3])
    ok = alt.exists and len(alt.pairs) == 1 and not dis.exists
    v1 = ALTERNATIVE if alt.exists else DISJOINT
    v2 = ALTERNATIVE if dis.exists else DISJOINT
    return ok, f"[x>5,y+2<6] vs [x>5,y+2<8] {v1}; head x<3 {v2}"


def semdiff_threshold():
    f1, f2 = flat("student_vote", 400000), flat("student_vote_alt", 400000)
    counts = []
    t0 = time.monotonic()
    for n in (1, 2, 3):
        cfg = ControllerConfig(kind="pc", input_length=n, domain=DOMAIN_SV, split_domain=True)
        counts.append(len(semantic_diff_flat(f1, f2, cfg).witness_inputs()))
    elapsed = time.monotonic() - t0
    ok = counts[0] == 0 and counts[1] == 0 and counts[2] >= 1 and elapsed < 60
    return ok, f"witness inputs {counts} in {elapsed:.1f} s"


ORACLE_PAIRS = [
    ("nondet", "nondet_alt", (), {"x": [-1, 0, 1, 2]}, 3),
    ("partial", "partial_alt", (), {"cmd": ["arm", "fire", "x"], "level": [1, 2, 3]}, 3),
    ("explanation_b", "explanation_b_alt", (), {"x": [-1, 0, 1, 2, 3, 4, 6]}, 3),
    ("student_vote", "student_vote_alt", (400000,), DOMAIN_SV, 2),
]


def oracle_equivalence():
    t0 = time.monotonic()
    failures = []
    checked = 0
    for a, b, args, dom, max_len in ORACLE_PAIRS:
        f1, f2 = flat(a, *args), flat(b, *args)
        for n in range(1, max_len + 1):
            cfg = ControllerConfig(kind="pc", input_length=n, domain=dom)
            dse = {i.path_key for i in explore(f1, cfg).interesting}
            brute = feasible_path_classes(enumerate_runs(f1, dom, n))
            split = ControllerConfig(kind="pc", input_length=n, domain=dom, split_domain=True)
            rep = semantic_diff_flat(f1, f2, split)
            wit = rep.witness_inputs() - rep.unknown_inputs()
            ok = dse == brute and wit == brute_diff(f1, f2, dom, n).witnesses
            checked += 1
            if not ok:
                failures.append(f"{a}@{n}")
    elapsed = time.monotonic() - t0
    ok = not failures and elapsed < 120
    return ok, f"{checked} model/length cells over {len(ORACLE_PAIRS)} pairs, failures={failures}, {elapsed:.1f} s"


def solver_soundness(count: int = 10_000):
    rng = random.Random(1)
    disagree = unknown = model_bad = 0
    t0 = time.monotonic()
    for _ in range(count):
        formulas = random_conjunction(rng)
        names, dom = domain_constraints(formulas)
        res = solve(formulas + dom, ENUMS)
        if res.status == "unknown":
            unknown += 1
            continue
        if res.sat != brute_sat(formulas, names):
            disagree += 1
        if res.sat:
            env = {n: res.model[n] for n in names}
            if eval_concrete(And(tuple(formulas + dom)), env) is not True:
                model_bad += 1
    ok = disagree == 0 and unknown == 0 and model_bad == 0
    return ok, (
        f"{count} conjunctions: {disagree} disagreements, {unknown} unknown, "
        f"{model_bad} bad models ({time.monotonic() - t0:.0f} s)"
    )


def controller_budgets():
    f = flat("student_vote", 400000)
    once = explore(f, ControllerConfig(kind="run-once", input_length=3))
    rnd = explore(f, ControllerConfig(kind="random-input", input_length=3, seed=7))
    ratio = minimality(once).duplicate_ratio
    ok = (
        len(once.interesting) == 1
        and once.stats.solver_calls == 0
        and ratio == 0
        and rnd.stats.paths_explored == 10
        and len(rnd.interesting) == 10
        and rnd.stats.solver_calls == 0
    )
    return ok, (
        f"run-once results={len(once.interesting)} solver={once.stats.solver_calls} dup={ratio}; "
        f"random runs={rnd.stats.paths_explored} solver={rnd.stats.solver_calls}"
    )


def timeout_mechanism():
    f = flat("adversarial")
    res = explore(f, ControllerConfig(kind="pc", input_length=2, solver_timeout_ms=1))
    replay = all(replay_check(f, i) for i in res.interesting)
    out = io.StringIO()
    code = main(
        ["sweep", str(MODELS / "explanation_b.arc"), "--input-length", "2", "--timeouts", "1,5,10,30", "--repeats", "1"],
        stdout=out,
        stderr=io.StringIO(),
    )
    rows = json.loads(out.getvalue())["result"]["rows"]
    well_formed = code == 0 and len(rows) == 4 and all(
        r["time_improvement"] <= 1 and r["result_deterioration"] <= 1 and r["timeout_ms"] > 0 for r in rows
    )
    ok = res.stats.paths_skipped_timeout > 0 and replay and well_formed
    return ok, (
        f"skipped={res.stats.paths_skipped_timeout}, replay ok={replay} on {len(res.interesting)} results, "
        f"sweep rows={len(rows)} well-formed={well_formed}"
    )


def roundtrip_and_fuzz(count: int = 10_000):
    paths = all_model_paths()
    trips = 0
    for p in paths:
        m = parse_file(p)
        text = render_model(m)
        again = parse_model(text)
        if render_model(again) == text and again == parse_model(render_model(again)):
            trips += 1
    rng = random.Random(3)
    crashes = 0
    alphabet = b"{}()[];:,.<>=!&|+-*/\"\\ \nabcxyz019_@#\xff\xc3"
    for k in range(count):
        n = rng.randint(0, 80)
        if k % 2:
            data = bytes(rng.choice(alphabet) for _ in range(n))
        else:
            data = bytes(rng.randrange(256) for _ in range(n))
        try:
            parse_model(data)
        except CclError:
            pass
        except Exception:  # anything else is a crash
            crashes += 1
    ok = trips == len(paths) and crashes == 0
    return ok, f"round-trip {trips}/{len(paths)} models, {crashes} crashes on {count} random inputs"


CRITERIA = [
    (1, "trace reproduction", trace_reproduction),
    (2, "first-output law", first_output_law),
    (3, "worked exploration", worked_exploration),
    (4, "simplifier anchors", simplifier_anchors),
    (5, "non-determinism anchor", nondet_anchor),
    (6, "semantic-diff length threshold", semdiff_threshold),
    (7, "oracle equivalence", oracle_equivalence),
    (8, "solver soundness", solver_soundness),
    (9, "controller budgets", controller_budgets),
    (10, "timeout mechanism", timeout_mechanism),
    (11, "round-trip and parser fuzz", roundtrip_and_fuzz),
]


@pytest.mark.parametrize("n,title,check", CRITERIA, ids=[f"criterion_{n}" for n, _, _ in CRITERIA])
def test_acceptance(n, title, check):
    try:
        ok, detail = check()
    except Exception as exc:  # report, then fail
        _report(n, title, False, f"raised {exc!r}")
        raise
    _report(n, title, ok, detail)
    assert ok, detail


if __name__ == "__main__":
    failed = 0
    for n, title, check in CRITERIA:
        try:
            ok, detail = check()
        except Exception as exc:
            ok, detail = False, f"raised {exc!r}"
        _report(n, title, ok, detail)
        failed += not ok
    sys.exit(1 if failed else 0)
