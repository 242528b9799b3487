"""Time-synchronous concrete + symbolic co-execution of a flattened model."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .errors import ExecutionError, SymbolicError
from .expr import NULL_CONST, Cmp, Const, Expr, Sym, free_names, promote_consts, to_text
from .ir import FlatInstance, Signal
from .symbolic import AnnotatedValue, BranchRecord, PathCondition, eval_concrete, null_value, simplify, substitute
from .values import NULL, RAT, coerce, conforms, format_value, value_key, value_to_json

DOMAIN_BRANCH = "$domain"


@dataclass(frozen=True)
class Oracle:
    """Choice indices for non-deterministic decision points, consumed in order.

    ``fallback(count)`` supplies choices once ``choices`` is exhausted; without
    it, running out of choices is an error.
    """

    choices: Tuple[int, ...] = ()
    fallback: Optional[Callable[[int], int]] = field(default=None, compare=False, repr=False)

    def to_json(self) -> list:
        return list(self.choices)


def default_oracle() -> Oracle:
    return Oracle((), lambda count: 0)


class _Cursor:
    def __init__(self, oracle: Oracle):
        self.oracle = oracle
        self.used: List[int] = []

    def next(self, count: int) -> int:
        i = len(self.used)
        if i < len(self.oracle.choices):
            c = self.oracle.choices[i]
        elif self.oracle.fallback is not None:
            c = self.oracle.fallback(count)
        else:
            raise ExecutionError("ORACLE_EXHAUSTED", f"decision {i} has {count} alternatives but no choice left")
        if not isinstance(c, int) or c < 0 or c >= count:
            raise ExecutionError("ORACLE_OUT_OF_RANGE", f"choice {c} at decision {i} with {count} alternatives")
        self.used.append(c)
        return c


@dataclass(frozen=True)
class Decision:
    decision_id: Tuple[str, int]  # (instance path, tick)
    count: int
    choice: int

    def key(self) -> tuple:
        return ("c", self.decision_id, self.choice)


@dataclass
class ExecutionState:
    states: Dict[str, str]
    vars: Dict[str, Dict[str, AnnotatedValue]]
    store: Dict[Tuple[str, str], AnnotatedValue]
    tick: int = 0


@dataclass
class TraceTick:
    tick: int
    inputs: Dict[str, AnnotatedValue]
    outputs: Dict[str, AnnotatedValue]
    branches: List[BranchRecord]
    decisions: List[Decision]
    events: list  # branches and decisions in evaluation order
    fired: List[Tuple[str, str]]
    state_snapshot: Dict[str, Tuple[str, Dict[str, AnnotatedValue]]]
    messages: Dict[str, AnnotatedValue]

    @property
    def enabled_alternatives(self) -> List[Tuple[Tuple[str, int], int]]:
        return [(d.decision_id, d.count) for d in self.decisions]


@dataclass
class Trace:
    ticks: List[TraceTick]
    oracle_used: Oracle

    @property
    def events(self) -> list:
        return [e for t in self.ticks for e in t.events]

    @property
    def path_condition(self) -> PathCondition:
        return PathCondition(tuple(r for t in self.ticks for r in t.branches))

    @property
    def outputs(self) -> List[Dict[str, AnnotatedValue]]:
        return [t.outputs for t in self.ticks]


def initial_state(flat: FlatInstance) -> ExecutionState:
    states, vars_ = {}, {}
    for path in flat.firing_order:
        a = flat.automaton(path)
        states[path] = a.initial
        vs = {}
        for v in a.vars:
            conc = coerce(v.initial.value, v.ty)
            vs[v.name] = AnnotatedValue(Const(conc, v.ty), conc)
        vars_[path] = vs
    store = {}
    for key, slot in flat.delayed.items():
        ty = flat.components[slot.path].port(slot.port).ty
        store[key] = AnnotatedValue(Const(slot.initial, ty), slot.initial)
    return ExecutionState(states, vars_, store, 0)


def input_symbol(port: str, tick: int, ty) -> Sym:
    return Sym(f"in_{port}_t{tick}", ty)


def _rat_value(av: AnnotatedValue) -> AnnotatedValue:
    if av.conc is NULL:
        return av
    return AnnotatedValue(promote_consts(av.sym), coerce(av.conc, RAT))


def step(
    flat: FlatInstance,
    state: ExecutionState,
    inputs: Dict[str, AnnotatedValue],
    cursor: _Cursor,
    domain_split: Optional[Dict[str, Sequence]] = None,
) -> TraceTick:
    """Advance ``state`` by one tick (mutating it) and return the tick record."""
    state.tick += 1
    tick = state.tick
    root = flat.root
    events: list = []
    branches: List[BranchRecord] = []
    decisions: List[Decision] = []
    fired: List[Tuple[str, str]] = []
    computed: Dict[Tuple[str, str], AnnotatedValue] = {}

    for p in root.in_ports:
        if p.name not in inputs:
            raise ExecutionError("MISSING_INPUT", f"no value for input {p.name} at tick {tick}")

    if domain_split:
        for p in root.in_ports:
            values = domain_split.get(p.name)
            av = inputs[p.name]
            if not values or av.conc is NULL:
                continue
            for i, v in enumerate(values):
                rec = BranchRecord(
                    (DOMAIN_BRANCH, f"{p.name}#{i}", tick),
                    simplify(Cmp("==", av.sym, Const(coerce(v, p.ty), p.ty))),
                    value_key(av.conc) == value_key(v),
                )
                branches.append(rec)
                events.append(rec)

    def value_of(sig: Signal) -> AnnotatedValue:
        if sig.kind == "input":
            return inputs[sig.port]
        if sig.kind == "delay":
            return state.store[(sig.path, sig.port)]
        return computed.get((sig.path, sig.port), null_value())

    messages: Dict[str, AnnotatedValue] = {}
    for path in flat.firing_order:
        comp = flat.components[path]
        auto = comp.body
        ins = {p.name: value_of(flat.sources[(path, p.name)]) for p in comp.in_ports}
        params = flat.params.get(path, {})
        vars_ = state.vars[path]
        prefix = f"{path}." if path else ""
        for n, av in ins.items():
            messages[prefix + n] = av

        param_env = {n: AnnotatedValue(Const(v), v) for n, v in params.items()}

        def scope() -> Dict[str, AnnotatedValue]:
            env = dict(param_env)
            env.update(vars_)
            env.update(ins)
            return env

        env = scope()
        enabled = []
        for t in auto.transitions:
            if t.source != state.states[path]:
                continue
            names = free_names(t.guard)
            if any(env[n].conc is NULL for n in names):
                taken, cond = False, Const(False)
            else:
                taken = eval_concrete(t.guard, {n: env[n].conc for n in names})
                cond = _guard_cond(t.guard, names, tuple(env[n].sym for n in names))
            rec = BranchRecord((path, t.id, tick), cond, bool(taken))
            branches.append(rec)
            events.append(rec)
            if taken:
                enabled.append(t)
        chosen = None
        if len(enabled) == 1:
            chosen = enabled[0]
        elif len(enabled) > 1:
            c = cursor.next(len(enabled))
            d = Decision((path, tick), len(enabled), c)
            decisions.append(d)
            events.append(d)
            chosen = enabled[c]
        emitted: Dict[str, AnnotatedValue] = {}
        if chosen is not None:
            fired.append((path, chosen.id))
            state.states[path] = chosen.target
            var_types = {v.name: v.ty for v in auto.vars}
            for name, e in chosen.actions:
                vars_[name] = _evaluate(e, scope(), var_types[name])
            env = scope()
            for port, e in chosen.emissions:
                emitted[port] = _evaluate(e, env, comp.port(port).ty)
        for p in comp.out_ports:
            av = emitted.get(p.name, null_value())
            computed[(path, p.name)] = av
            messages[prefix + p.name] = state.store[(path, p.name)] if p.delayed else av

    outputs = {p.name: value_of(flat.sources[("", p.name)]) for p in root.out_ports}
    for p in root.in_ports:
        messages.setdefault(p.name, inputs[p.name])
    for p in root.out_ports:
        messages.setdefault(p.name, outputs[p.name])
    new_store = {key: value_of(slot.feed) for key, slot in flat.delayed.items()}
    for key, av in new_store.items():
        ty = flat.components[key[0]].port(key[1]).ty
        state.store[key] = _rat_value(av) if ty == RAT else av
    snapshot = {path: (state.states[path], dict(state.vars[path])) for path in flat.firing_order}
    return TraceTick(tick, dict(inputs), outputs, branches, decisions, events, fired, snapshot, messages)


@lru_cache(maxsize=200_000)
def _guard_cond(guard: Expr, names: tuple, syms: tuple) -> Expr:
    return simplify(substitute(guard, dict(zip(names, syms))))


@lru_cache(maxsize=200_000)
def _symbolic(e: Expr, names: tuple, syms: tuple, promote: bool) -> Expr:
    sym = substitute(e, dict(zip(names, syms)))
    return promote_consts(sym) if promote else sym


def _evaluate(e: Expr, env: Dict[str, AnnotatedValue], ty) -> AnnotatedValue:
    names = free_names(e)
    conc = eval_concrete(e, {n: env[n].conc for n in names})
    if conc is NULL:
        return null_value()
    sym = _symbolic(e, names, tuple(env[n].sym for n in names), ty == RAT)
    if ty == RAT:
        return AnnotatedValue(sym, coerce(conc, RAT))
    return AnnotatedValue(sym, conc)


def annotate_inputs(flat: FlatInstance, values: Dict[str, object], tick: int, symbolic: bool = True):
    out = {}
    for p in flat.root.in_ports:
        if p.name not in values:
            raise ExecutionError("MISSING_INPUT", f"no value for input {p.name} at tick {tick}")
        v = values[p.name]
        if not conforms(v, p.ty):
            raise ExecutionError("TYPE_MISMATCH", f"input {p.name}={format_value(v)} is not {p.ty}")
        v = coerce(v, p.ty)
        if v is NULL:
            out[p.name] = null_value()
        else:
            out[p.name] = AnnotatedValue(input_symbol(p.name, tick, p.ty) if symbolic else Const(v, p.ty), v)
    extra = set(values) - {p.name for p in flat.root.in_ports}
    if extra:
        raise ExecutionError("UNKNOWN_INPUT", f"unknown input port(s) {sorted(extra)}")
    return out


def run(
    flat: FlatInstance,
    input_seq: Sequence[Dict[str, object]],
    oracle: Optional[Oracle] = None,
    domain_split: Optional[Dict[str, Sequence]] = None,
) -> Trace:
    """Execute ``input_seq`` (one concrete port map per tick) under ``oracle``."""
    cursor = _Cursor(oracle if oracle is not None else Oracle())
    state = initial_state(flat)
    ticks = []
    for k, values in enumerate(input_seq, start=1):
        ticks.append(step(flat, state, annotate_inputs(flat, values, k), cursor, domain_split))
    return Trace(ticks, Oracle(tuple(cursor.used)))


# -- keys and checks ---------------------------------------------------------------


def event_key(e) -> tuple:
    return e.key()


def path_key(events, strip_domain: bool = True) -> tuple:
    """Path class: signed branch ids and oracle choices in execution order."""
    out = []
    for e in events:
        if strip_domain and isinstance(e, BranchRecord) and e.branch_id[0] == DOMAIN_BRANCH:
            continue
        out.append(e.key())
    return tuple(out)


def inputs_key(inputs: Sequence[Dict[str, object]]) -> tuple:
    return tuple(tuple(sorted((p, value_key(v)) for p, v in tick.items())) for tick in inputs)


def outputs_key(outputs: Sequence[Dict[str, object]]) -> tuple:
    return tuple(tuple(sorted((p, value_key(v)) for p, v in tick.items())) for tick in outputs)


def symbolic_outputs_key(outputs: Sequence[Dict[str, Expr]]) -> tuple:
    return tuple(tuple(sorted((p, to_text(simplify(e))) for p, e in tick.items())) for tick in outputs)


def replay_check(flat: FlatInstance, witness, domain_split=None) -> bool:
    """Re-run a recorded input/oracle pair and compare branches and outputs."""
    try:
        trace = run(flat, witness.inputs, Oracle(tuple(witness.oracle.choices)), domain_split)
    except (ExecutionError, SymbolicError):
        return False
    recorded = tuple((r.branch_id, r.taken) for r in witness.path_condition.records)
    replayed = tuple((r.branch_id, r.taken) for r in trace.path_condition.records)
    if recorded != replayed:
        return False
    concrete = [{p: av.conc for p, av in t.outputs.items()} for t in trace.ticks]
    return outputs_key(concrete) == outputs_key(witness.outputs_concrete)


# -- JSON -----------------------------------------------------------------------------


def av_to_json(av: AnnotatedValue) -> dict:
    return {"value": value_to_json(av.conc), "symbolic": to_text(simplify(av.sym))}


def branch_to_json(r: BranchRecord) -> dict:
    path, tid, tick = r.branch_id
    return {"instance": path, "transition": tid, "tick": tick, "cond": to_text(r.cond), "taken": r.taken}


def trace_to_json(trace: Trace) -> dict:
    ticks = []
    for t in trace.ticks:
        ticks.append(
            {
                "tick": t.tick,
                "inputs": {p: value_to_json(av.conc) for p, av in sorted(t.inputs.items())},
                "outputs": {p: av_to_json(av) for p, av in sorted(t.outputs.items())},
                "branches": [branch_to_json(r) for r in t.branches],
                "decisions": [
                    {"instance": d.decision_id[0], "alternatives": d.count, "choice": d.choice} for d in t.decisions
                ],
                "fired": [{"instance": p, "transition": tid} for p, tid in t.fired],
                "state": {
                    path or "<root>": {
                        "state": s,
                        "vars": {n: av_to_json(av) for n, av in sorted(vs.items())},
                    }
                    for path, (s, vs) in sorted(t.state_snapshot.items())
                },
            }
        )
    return {"ticks": ticks, "oracle": trace.oracle_used.to_json()}
