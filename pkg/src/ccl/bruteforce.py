"""Exhaustive enumeration over finite input domains; the independent test oracle.

Nothing here touches the solver or the exploration code: every input
combination and every oracle choice sequence is executed concretely.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Set, Tuple

from .errors import CapExceeded, DiffError
from .executor import Oracle, Trace, inputs_key, outputs_key, path_key, run
from .ir import FlatInstance
from .values import coerce, conforms, value_to_json

DEFAULT_CAP = 10**6


@dataclass
class BruteRun:
    inputs: List[Dict[str, object]]
    oracle: Oracle
    trace: Trace

    @property
    def outputs_concrete(self) -> List[Dict[str, object]]:
        return [{p: av.conc for p, av in t.outputs.items()} for t in self.trace.ticks]


class _NeedChoice(Exception):
    def __init__(self, count: int):
        self.count = count


def _raise_need(count: int) -> int:
    raise _NeedChoice(count)


def _check_domain(flat: FlatInstance, domain: Dict[str, Sequence]) -> Dict[str, list]:
    out = {}
    for p in flat.root.in_ports:
        values = domain.get(p.name)
        if not values:
            raise DiffError("DOMAIN_INCOMPLETE", f"no domain values for input {p.name}")
        for v in values:
            if not conforms(v, p.ty):
                raise DiffError("DOMAIN_TYPE", f"domain value {value_to_json(v)!r} is not {p.ty}")
        out[p.name] = [coerce(v, p.ty) for v in values]
    return out


def input_sequences(flat: FlatInstance, domain: Dict[str, Sequence], length: int):
    dom = _check_domain(flat, domain)
    ports = [p.name for p in flat.root.in_ports]
    ticks = [dict(zip(ports, combo)) for combo in itertools.product(*(dom[p] for p in ports))]
    for seq in itertools.product(ticks, repeat=length):
        yield [dict(t) for t in seq]


def _all_runs(flat: FlatInstance, inputs, budget: List[int]) -> List[Tuple[Oracle, Trace]]:
    """Depth-first over oracle choices: every feasible choice sequence for ``inputs``."""
    out = []

    def go(prefix: Tuple[int, ...]):
        try:
            trace = run(flat, inputs, Oracle(prefix, _raise_need))
        except _NeedChoice as need:
            for c in range(need.count):
                go(prefix + (c,))
            return
        budget[0] -= 1
        if budget[0] < 0:
            raise CapExceeded("CAP_EXCEEDED", "run enumeration cap exceeded")
        out.append((trace.oracle_used, trace))

    go(())
    return out


def enumerate_runs(flat: FlatInstance, domain: Dict[str, Sequence], length: int, cap: int = DEFAULT_CAP) -> List[BruteRun]:
    """Every (inputs, oracle, trace) triple over the domain at the given length."""
    dom = _check_domain(flat, domain)
    combos = 1
    for p in flat.root.in_ports:
        combos *= len(dom[p.name])
    if combos**length > cap:
        raise CapExceeded("CAP_EXCEEDED", f"{combos}^{length} input sequences exceed the cap of {cap}")
    budget = [cap]
    runs = []
    for inputs in input_sequences(flat, dom, length):
        for oracle, trace in _all_runs(flat, inputs, budget):
            runs.append(BruteRun(inputs, oracle, trace))
    return runs


def feasible_path_classes(runs: Sequence[BruteRun]) -> Set[tuple]:
    return {path_key(r.trace.events) for r in runs}


@dataclass
class BruteDiff:
    witnesses: Set[tuple]  # inputs_key of every witness input sequence
    inputs_checked: int
    runs: int

    def to_json(self) -> dict:
        return {
            "witness_count": len(self.witnesses),
            "inputs_checked": self.inputs_checked,
            "runs": self.runs,
            "witnesses": [
                [{p: _key_json(k) for p, k in tick} for tick in w] for w in sorted(self.witnesses, key=repr)
            ],
        }


def _key_json(k: tuple):
    kind = k[0]
    if kind == "null":
        return None
    if kind == "num":
        from .values import format_rational

        return int(k[1]) if k[1].denominator == 1 else format_rational(k[1])
    if kind == "enum":
        return f"{k[1]}::{k[2]}"
    return k[1]


def brute_diff(
    flat1: FlatInstance, flat2: FlatInstance, domain: Dict[str, Sequence], length: int, cap: int = DEFAULT_CAP
) -> BruteDiff:
    """Input sequences where some m1 output sequence is produced by no m2 run."""
    dom = _check_domain(flat1, domain)
    combos = 1
    for p in flat1.root.in_ports:
        combos *= len(dom[p.name])
    if combos**length > cap:
        raise CapExceeded("CAP_EXCEEDED", f"{combos}^{length} input sequences exceed the cap of {cap}")
    budget = [cap]
    witnesses = set()
    checked = 0
    for inputs in input_sequences(flat1, dom, length):
        checked += 1
        outs1 = {outputs_key(_concrete(t)) for _, t in _all_runs(flat1, inputs, budget)}
        outs2 = {outputs_key(_concrete(t)) for _, t in _all_runs(flat2, inputs, budget)}
        if outs1 - outs2:
            witnesses.add(inputs_key(inputs))
    return BruteDiff(witnesses, checked, cap - budget[0])


def _concrete(trace: Trace):
    return [{p: av.conc for p, av in t.outputs.items()} for t in trace.ticks]
