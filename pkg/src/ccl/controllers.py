"""Exploration strategies: path coverage, termination conditions, random runs."""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

from .errors import BudgetExceeded, CclError, ExplorationError
from .executor import DOMAIN_BRANCH, Decision, Oracle, Trace, default_oracle, path_key, run
from .expr import FALSE, TRUE, Cmp, Const, Expr, Or, Sym, sym_vars, to_text, walk
from .ir import FlatInstance
from .solver import SolverSession
from .symbolic import BranchRecord, PathCondition, eval_concrete, negate, simplify
from .values import BOOL, INT, RAT, STR, EnumVal, TypeTag, coerce, default_value, format_value, value_to_json

CONTROLLERS = (
    "pc",
    "pc-gc",
    "pc-random-negation",
    "term-transition",
    "term-state",
    "term-automaton-state",
    "boring-interesting",
    "run-once",
    "random-input",
)


@dataclass
class ControllerConfig:
    kind: str = "pc"
    input_length: int = 1
    max_visits: int = 1
    iterations: int = 10
    seed: int = 0
    solver_timeout_ms: Optional[int] = None
    solver_cmd: Optional[str] = None
    # boring-interesting: transitions named "instance/transition" count as interesting
    interesting: FrozenSet[str] = frozenset()
    max_boring: int = 1
    max_interesting: int = 3
    # finite test domain: every solver query is restricted to these values
    domain: Optional[Dict[str, list]] = None
    split_domain: bool = False
    max_paths: Optional[int] = None
    max_wall_ms: Optional[int] = None
    # first input sequence to run; defaults to type defaults (or first domain values)
    initial_inputs: Optional[List[Dict[str, object]]] = None

    def __post_init__(self):
        if self.kind not in CONTROLLERS:
            raise ExplorationError("BAD_CONFIG", f"unknown controller {self.kind!r}")
        if self.input_length < 1:
            raise ExplorationError("BAD_CONFIG", "input_length must be at least 1")
        if self.max_visits < 1 or self.max_boring < 1 or self.max_interesting < 1:
            raise ExplorationError("BAD_CONFIG", "visit bounds must be at least 1")
        if self.iterations < 0:
            raise ExplorationError("BAD_CONFIG", "iterations must be non-negative")
        if self.initial_inputs is not None and len(self.initial_inputs) != self.input_length:
            raise ExplorationError("BAD_CONFIG", "initial_inputs must have input_length ticks")

    def to_json(self) -> dict:
        return {
            "controller": self.kind,
            "input_length": self.input_length,
            "max_visits": self.max_visits,
            "iterations": self.iterations,
            "seed": self.seed,
            "solver_timeout_ms": self.solver_timeout_ms,
            "split_domain": self.split_domain,
            "domain": None
            if self.domain is None
            else {p: [value_to_json(v) for v in vs] for p, vs in sorted(self.domain.items())},
        }


@dataclass
class InterestingInput:
    inputs: List[Dict[str, object]]
    outputs_concrete: List[Dict[str, object]]
    outputs_symbolic: List[Dict[str, Expr]]
    path_condition: PathCondition
    oracle: Oracle
    trace: Optional[Trace] = field(default=None, repr=False, compare=False)

    @property
    def path_key(self) -> tuple:
        return path_key(self.trace.events) if self.trace is not None else ()

    def to_json(self) -> dict:
        return {
            "inputs": [{p: value_to_json(v) for p, v in sorted(t.items())} for t in self.inputs],
            "outputs": [{p: value_to_json(v) for p, v in sorted(t.items())} for t in self.outputs_concrete],
            "outputs_symbolic": [{p: to_text(e) for p, e in sorted(t.items())} for t in self.outputs_symbolic],
            "path_condition": [
                {"branch": f"{r.branch_id[0] or '<root>'}/{r.branch_id[1]}@{r.branch_id[2]}", "cond": to_text(r.signed())}
                for r in self.path_condition.records
            ],
            "oracle": self.oracle.to_json(),
        }


@dataclass
class ExplorationStats:
    solver_calls: int = 0
    paths_explored: int = 0
    paths_skipped_timeout: int = 0
    paths_unsat: int = 0
    paths_aborted: int = 0
    wall_ms: float = 0.0

    def to_json(self) -> dict:
        return {
            "solver_calls": self.solver_calls,
            "paths_explored": self.paths_explored,
            "paths_skipped_timeout": self.paths_skipped_timeout,
            "paths_unsat": self.paths_unsat,
            "paths_aborted": self.paths_aborted,
        }


@dataclass
class ExplorationResult:
    interesting: List[InterestingInput]
    stats: ExplorationStats
    # (prefix key, status) of every alternative the search attempted, in order
    log: List[Tuple[tuple, str]] = field(default_factory=list, repr=False)

    def to_json(self) -> dict:
        return {
            "interesting": [i.to_json() for i in self.interesting],
            "stats": self.stats.to_json(),
        }


def interesting_from_trace(inputs, trace: Trace) -> InterestingInput:
    return InterestingInput(
        [dict(t) for t in inputs],
        [{p: av.conc for p, av in t.outputs.items()} for t in trace.ticks],
        [{p: simplify(av.sym) for p, av in t.outputs.items()} for t in trace.ticks],
        trace.path_condition,
        trace.oracle_used,
        trace,
    )


# -- seed and random inputs ----------------------------------------------------------


def seed_inputs(flat: FlatInstance, length: int, domain: Optional[Dict[str, list]] = None) -> List[Dict[str, object]]:
    tick = {}
    for p in flat.root.in_ports:
        if domain and domain.get(p.name):
            tick[p.name] = coerce(domain[p.name][0], p.ty)
        else:
            tick[p.name] = default_value(p.ty, flat.enums)
    return [dict(tick) for _ in range(length)]


def _model_literals(flat: FlatInstance) -> Dict[str, list]:
    """String and number literals appearing in the model, used to bias random inputs."""
    found: Dict[str, set] = {"string": set(), "num": set()}
    for path in flat.firing_order:
        for t in flat.automaton(path).transitions:
            for n in walk(t.guard):
                if isinstance(n, Const) and isinstance(n.value, str):
                    found["string"].add(n.value)
                elif isinstance(n, Const) and isinstance(n.value, (int, Fraction)) and not isinstance(n.value, bool):
                    found["num"].add(Fraction(n.value))
    for vals in flat.params.values():
        for v in vals.values():
            if isinstance(v, (int, Fraction)) and not isinstance(v, bool):
                found["num"].add(Fraction(v))
    return {k: sorted(v) for k, v in found.items()}


def random_value(rng: random.Random, ty: TypeTag, enums, literals: Dict[str, list]):
    if ty == BOOL:
        return rng.random() < 0.5
    if ty == STR:
        lits = literals.get("string", [])
        if lits and rng.random() < 0.75:
            return rng.choice(lits)
        return "".join(rng.choice("abcdefghij") for _ in range(rng.randint(0, 4)))
    if ty.kind == "enum":
        return EnumVal(ty.enum, rng.choice(enums[ty.enum]))
    nums = literals.get("num", [])
    if nums and rng.random() < 0.5:
        base = rng.choice(nums) + rng.randint(-2, 2)
    else:
        base = Fraction(rng.randint(-1_000_000, 1_000_000))
    if ty == INT:
        return int(base) if base.denominator == 1 else int(base.numerator // base.denominator)
    return base + Fraction(rng.randint(0, 3), 4)


def random_inputs(flat: FlatInstance, length: int, rng: random.Random, domain=None, literals=None):
    literals = literals if literals is not None else _model_literals(flat)
    out = []
    for _ in range(length):
        tick = {}
        for p in flat.root.in_ports:
            if domain and domain.get(p.name):
                tick[p.name] = coerce(rng.choice(domain[p.name]), p.ty)
            else:
                tick[p.name] = random_value(rng, p.ty, flat.enums, literals)
        out.append(tick)
    return out


# -- visit accounting for termination controllers -------------------------------------


class _VisitCounter:
    def __init__(self, cfg: ControllerConfig):
        self.cfg = cfg
        self.counts: Dict[tuple, int] = {}

    def _items(self, trace: Trace) -> List[tuple]:
        kind = self.cfg.kind
        items = []
        for t in trace.ticks:
            if kind in ("term-transition", "boring-interesting"):
                items.extend(("t", p, tid) for p, tid in t.fired)
            elif kind == "term-automaton-state":
                items.extend(("s", p, s) for p, (s, _v) in sorted(t.state_snapshot.items()))
            elif kind == "term-state":
                for p, (s, vs) in sorted(t.state_snapshot.items()):
                    vals = tuple((n, format_value(av.conc)) for n, av in sorted(vs.items()))
                    items.append(("s", p, s, vals))
        return items

    def _limit(self, item: tuple) -> int:
        if self.cfg.kind == "boring-interesting":
            name = f"{item[1]}/{item[2]}"
            return self.cfg.max_interesting if name in self.cfg.interesting else self.cfg.max_boring
        return self.cfg.max_visits

    def admit(self, trace: Trace) -> bool:
        """Commit the run's visits unless one of them exceeds its bound."""
        pending: Dict[tuple, int] = {}
        for it in self._items(trace):
            pending[it] = pending.get(it, 0) + 1
            if self.counts.get(it, 0) + pending[it] > self._limit(it):
                return False
        for it, n in pending.items():
            self.counts[it] = self.counts.get(it, 0) + n
        return True


# -- search ----------------------------------------------------------------------------


def _domain_constraints(flat: FlatInstance, domain, syms: Dict[str, TypeTag]) -> List[Expr]:
    out = []
    for name, ty in sorted(syms.items()):
        if not name.startswith("in_"):
            continue
        port = name[3:].rsplit("_t", 1)[0]
        values = domain.get(port)
        if not values:
            continue
        out.append(Or(tuple(Cmp("==", Sym(name, ty), Const(coerce(v, ty), ty)) for v in values)))
    return out


def _forced_false(signed: List[Expr]) -> bool:
    """The last formula is false once the prefix's ``sym == const`` facts are plugged in.

    Cheap refutation for the common case where earlier records already pin
    every input the flipped condition reads.
    """
    fixed = {}
    for f in signed[:-1]:
        if isinstance(f, Cmp) and f.op == "==" and isinstance(f.left, Sym) and isinstance(f.right, Const):
            fixed[f.left.name] = f.right.value
    last = signed[-1]
    if not fixed or not set(sym_vars(last)) <= fixed.keys():
        return False
    try:
        return eval_concrete(last, fixed) is False
    except CclError:
        return False


def _inputs_from_model(flat: FlatInstance, base: List[Dict[str, object]], model: Dict[str, object]):
    out = [dict(t) for t in base]
    for name, v in model.items():
        if not name.startswith("in_"):
            continue
        port, tick = name[3:].rsplit("_t", 1)
        k = int(tick)
        if 1 <= k <= len(out) and port in out[k - 1]:
            out[k - 1][port] = coerce(v, flat.root.port(port).ty)
    return out


def _is_record(e) -> bool:
    return isinstance(e, BranchRecord)


def _alt_keys(prefix: tuple, e) -> List[Tuple[tuple, object]]:
    """Keys of the sibling branches of event ``e`` following ``prefix``."""
    if _is_record(e):
        return [(prefix + (("b", e.branch_id, not e.taken),), None)]
    return [
        (prefix + (("c", e.decision_id, c),), c) for c in range(e.count) if c != e.choice
    ]


class _Explorer:
    def __init__(self, flat: FlatInstance, cfg: ControllerConfig):
        self.flat = flat
        self.cfg = cfg
        self.stats = ExplorationStats()
        self.result = ExplorationResult([], self.stats)
        self.done: set = set()
        self.visits = _VisitCounter(cfg) if cfg.kind.startswith("term") or cfg.kind == "boring-interesting" else None
        self.rng = random.Random(cfg.seed)
        self.split = cfg.domain if (cfg.domain and cfg.split_domain) else None
        self.session = SolverSession(flat.enums, cfg.solver_timeout_ms, cfg.solver_cmd)
        self.started = time.monotonic()

    # budget
    def _check_budget(self):
        cfg = self.cfg
        if cfg.max_paths is not None and self.stats.paths_explored >= cfg.max_paths:
            raise BudgetExceeded(f"path budget {cfg.max_paths} exhausted", self._finish())
        if cfg.max_wall_ms is not None and (time.monotonic() - self.started) * 1000 > cfg.max_wall_ms:
            raise BudgetExceeded(f"wall-clock budget {cfg.max_wall_ms} ms exhausted", self._finish())

    def _finish(self) -> ExplorationResult:
        self.stats.wall_ms = (time.monotonic() - self.started) * 1000
        return self.result

    def _execute(self, inputs, oracle: Oracle):
        self._check_budget()
        trace = run(self.flat, inputs, oracle, self.split)
        self.stats.paths_explored += 1
        events = trace.events
        keys = tuple(e.key() for e in events)
        for i in range(len(keys) + 1):
            self.done.add(keys[:i])
        if self.visits is not None and not self.visits.admit(trace):
            self.stats.paths_aborted += 1
            return None
        self.result.interesting.append(interesting_from_trace(inputs, trace))
        return (inputs, trace, events, keys)

    def _solve(self, records: List[BranchRecord], negated: BranchRecord):
        signed = [r.signed() for r in records] + [negate(negated.cond) if negated.taken else negated.cond]
        if _forced_false(signed):
            return "unsat", None
        conj = simplify(_and(signed))
        if conj == FALSE:
            return "unsat", None
        syms = {}
        for f in signed:
            syms.update(sym_vars(f))
        formulas = list(signed)
        if self.cfg.domain:
            formulas += _domain_constraints(self.flat, self.cfg.domain, syms)
        if self.cfg.kind == "pc-gc":
            # a fresh session per query instead of reusing the push/pop history
            session = SolverSession(self.flat.enums, self.cfg.solver_timeout_ms, self.cfg.solver_cmd)
            for f in formulas:
                session.add(f)
            res = session.check()
        else:
            self.session.push()
            try:
                for f in formulas:
                    self.session.add(f)
                res = self.session.check()
            finally:
                self.session.pop()
        self.stats.solver_calls += 1
        if res.sat:
            return "sat", res.model
        if res.timeout:
            return "timeout", None
        if res.unsat:
            return "unsat", None
        return "unknown", None

    def explore(self) -> ExplorationResult:
        cfg = self.cfg
        if cfg.kind == "run-once":
            self._execute(self._seed(), default_oracle())
            return self._finish()
        if cfg.kind == "random-input":
            literals = _model_literals(self.flat)
            for _ in range(cfg.iterations):
                inputs = random_inputs(self.flat, cfg.input_length, self.rng, cfg.domain, literals)
                rng = self.rng
                self._execute(inputs, Oracle((), lambda count: rng.randrange(count)))
            return self._finish()
        first = self._execute(self._seed(), default_oracle())
        # frames: [inputs, trace, events, keys, next position to flip]
        stack = [list(first) + [0]] if first is not None else []
        while stack:
            frame = stack[-1]
            inputs, trace, events, keys = frame[:4]
            target = self._next_target(frame)
            if target is None:
                stack.pop()
                continue
            i, alt_key, choice = target
            self.done.add(alt_key)
            e = events[i]
            if _is_record(e):
                records = [x for x in events[:i] if _is_record(x)]
                status, model = self._solve(records, e)
                self.result.log.append((alt_key, status))
                if status == "timeout":
                    self.stats.paths_skipped_timeout += 1
                    continue
                if status != "sat":
                    self.stats.paths_unsat += status == "unsat"
                    continue
                new_inputs = _inputs_from_model(self.flat, inputs, model)
                prior = tuple(d.choice for d in events[:i] if isinstance(d, Decision))
            else:
                self.result.log.append((alt_key, "choice"))
                new_inputs = inputs
                prior = tuple(d.choice for d in events[:i] if isinstance(d, Decision)) + (choice,)
            nxt = self._execute(new_inputs, Oracle(prior, lambda count: 0))
            if nxt is not None:
                # positions up to i are shared with this frame, which covers them
                stack.append(list(nxt) + [i + 1])
        return self._finish()

    def _seed(self):
        if self.cfg.initial_inputs is not None:
            return [dict(t) for t in self.cfg.initial_inputs]
        return seed_inputs(self.flat, self.cfg.input_length, self.cfg.domain)

    def _next_target(self, frame):
        """Earliest unexplored sibling at or after the frame's cursor.

        ``pc-random-negation`` picks uniformly among all open siblings instead.
        """
        events, keys, start = frame[2], frame[3], frame[4]
        candidates = []
        for i in range(start, len(events)):
            e = events[i]
            if _is_record(e) and e.cond in (TRUE, FALSE):
                continue  # constant guards cannot be flipped
            open_alts = [(i, k, c) for k, c in _alt_keys(keys[:i], e) if k not in self.done]
            if not open_alts:
                if not candidates:
                    frame[4] = i + 1
                continue
            if self.cfg.kind != "pc-random-negation":
                return open_alts[0]
            candidates.extend(open_alts)
        if candidates:
            return candidates[self.rng.randrange(len(candidates))]
        return None


def _and(items):
    from .expr import And

    return And(tuple(items)) if items else TRUE


def explore(flat: FlatInstance, cfg: ControllerConfig) -> ExplorationResult:
    """Run the configured exploration strategy and collect interesting inputs."""
    return _Explorer(flat, cfg).explore()


def next_negation_target(pc: PathCondition, done: set) -> Optional[int]:
    """Deepest record whose flipped signed prefix is not in ``done``."""
    keys = tuple(r.key() for r in pc.records)
    for i in range(len(keys) - 1, -1, -1):
        r = pc.records[i]
        alt = keys[:i] + (("b", r.branch_id, not r.taken),)
        if alt not in done:
            return i
    return None
