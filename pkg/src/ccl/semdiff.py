"""Semantic differencing: explore m1, replay every interesting input on m2.

A mismatch under m2's default oracle triggers a sweep over every oracle m2
admits for that input; the input is a diff-witness only if none reproduces
m1's canonical output sequence.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .controllers import ControllerConfig, InterestingInput, explore
from .errors import DiffError, ExecutionError
from .executor import Oracle, Trace, default_oracle, inputs_key, run, symbolic_outputs_key
from .expr import Expr, to_text
from .ir import FlatInstance, Model, flatten
from .symbolic import simplify
from .values import value_to_json

DEFAULT_ORACLE_BOUND = 10**5


@dataclass
class DiffWitness:
    inputs: List[Dict[str, object]]
    out_m1_symbolic: List[Dict[str, Expr]]
    out_m1_concrete: List[Dict[str, object]]
    m2_outputs_checked: int

    def to_json(self) -> dict:
        return {
            "inputs": [{p: value_to_json(v) for p, v in sorted(t.items())} for t in self.inputs],
            "out_m1": [{p: value_to_json(v) for p, v in sorted(t.items())} for t in self.out_m1_concrete],
            "out_m1_symbolic": [{p: to_text(e) for p, e in sorted(t.items())} for t in self.out_m1_symbolic],
            "m2_outputs_checked": self.m2_outputs_checked,
        }


@dataclass
class DiffUnknown:
    inputs: List[Dict[str, object]]
    reason: str

    def to_json(self) -> dict:
        return {
            "inputs": [{p: value_to_json(v) for p, v in sorted(t.items())} for t in self.inputs],
            "reason": self.reason,
        }


@dataclass
class DiffReport:
    witnesses: List[DiffWitness]
    unknown: List[DiffUnknown]
    input_length: int
    stats: Dict[str, object] = field(default_factory=dict)

    def witness_inputs(self) -> set:
        return {inputs_key(w.inputs) for w in self.witnesses}

    def unknown_inputs(self) -> set:
        return {inputs_key(u.inputs) for u in self.unknown}

    def to_json(self) -> dict:
        ws = sorted(self.witnesses, key=lambda w: repr(inputs_key(w.inputs)) + repr(w.to_json()["out_m1"]))
        us = sorted(self.unknown, key=lambda u: repr(inputs_key(u.inputs)))
        return {
            "input_length": self.input_length,
            "witness_count": len(ws),
            "witness_input_count": len(self.witness_inputs()),
            "witnesses": [w.to_json() for w in ws],
            "unknown": [u.to_json() for u in us],
            "stats": dict(sorted(self.stats.items())),
        }


class _NeedChoice(Exception):
    def __init__(self, count: int):
        self.count = count


def _need(count: int) -> int:
    raise _NeedChoice(count)


def calc_oracles(flat2: FlatInstance, inputs, bound: int = DEFAULT_ORACLE_BOUND) -> List[Oracle]:
    """Breadth-first enumeration of every choice sequence feasible for ``inputs``."""
    queue = deque([()])
    done: List[Oracle] = []
    while queue:
        prefix = queue.popleft()
        try:
            trace = run(flat2, inputs, Oracle(prefix, _need))
        except _NeedChoice as need:
            if len(done) + len(queue) + need.count > bound:
                raise DiffError("ORACLE_SPACE_EXCEEDED", f"more than {bound} oracle sequences") from None
            for c in range(need.count):
                queue.append(prefix + (c,))
            continue
        done.append(trace.oracle_used)
    return done


def replay_on_m2(flat2: FlatInstance, inputs, oracle: Oracle):
    """Canonical symbolic and concrete outputs of m2 for ``inputs`` under ``oracle``."""
    trace = run(flat2, inputs, oracle)
    sym = [{p: simplify(av.sym) for p, av in t.outputs.items()} for t in trace.ticks]
    conc = [{p: av.conc for p, av in t.outputs.items()} for t in trace.ticks]
    return sym, conc


def check_interfaces(flat1: FlatInstance, flat2: FlatInstance):
    def sig(flat):
        return (
            sorted((p.name, str(p.ty)) for p in flat.root.in_ports),
            sorted((p.name, str(p.ty)) for p in flat.root.out_ports),
        )

    if sig(flat1) != sig(flat2):
        raise DiffError(
            "INTERFACE_MISMATCH",
            f"root interfaces differ: {flat1.root.name} {sig(flat1)} vs {flat2.root.name} {sig(flat2)}",
        )


def semantic_diff_flat(
    flat1: FlatInstance, flat2: FlatInstance, cfg: ControllerConfig, oracle_bound: int = DEFAULT_ORACLE_BOUND
) -> DiffReport:
    check_interfaces(flat1, flat2)
    started = time.monotonic()
    dse = explore(flat1, cfg)
    witnesses: List[DiffWitness] = []
    unknown: List[DiffUnknown] = []
    seen = set()
    sweeps = 0
    for ii in dse.interesting:
        want = symbolic_outputs_key(ii.outputs_symbolic)
        marker = (inputs_key(ii.inputs), want)
        if marker in seen:
            continue
        seen.add(marker)
        sym2, _ = replay_on_m2(flat2, ii.inputs, default_oracle())
        if symbolic_outputs_key(sym2) == want:
            continue
        sweeps += 1
        try:
            oracles = calc_oracles(flat2, ii.inputs, oracle_bound)
        except DiffError as exc:
            unknown.append(DiffUnknown(ii.inputs, exc.code))
            continue
        matched = False
        for o in oracles:
            sym2, _ = replay_on_m2(flat2, ii.inputs, Oracle(o.choices))
            if symbolic_outputs_key(sym2) == want:
                matched = True
                break
        if not matched:
            witnesses.append(DiffWitness(ii.inputs, ii.outputs_symbolic, ii.outputs_concrete, len(oracles)))
    stats = dse.stats.to_json()
    stats.update(
        {
            "dse_result_size": len(dse.interesting),
            "oracle_sweeps": sweeps,
            "wall_ms": round((time.monotonic() - started) * 1000, 3),
        }
    )
    return DiffReport(witnesses, unknown, cfg.input_length, stats)


def semantic_diff(
    m1: Model,
    m2: Model,
    args1: Sequence = (),
    args2: Sequence = (),
    cfg: Optional[ControllerConfig] = None,
    oracle_bound: int = DEFAULT_ORACLE_BOUND,
) -> DiffReport:
    """Diff-witnesses: inputs whose m1 output sequence no m2 execution reproduces."""
    cfg = cfg or ControllerConfig()
    return semantic_diff_flat(flatten(m1, args1), flatten(m2, args2), cfg, oracle_bound)
