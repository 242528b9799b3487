"""Post-exploration analyses over interesting inputs."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .controllers import ExplorationResult, InterestingInput
from .errors import AnalysisError
from .executor import symbolic_outputs_key
from .expr import FALSE, And, Expr, to_text
from .ir import FlatInstance
from .solver import SolverSession
from .symbolic import decompose, simplify
from .values import value_key


def _items(result) -> List[InterestingInput]:
    return list(result.interesting) if isinstance(result, ExplorationResult) else list(result)


# -- minimality -------------------------------------------------------------------------


@dataclass
class MinimalityReport:
    duplicate_ratio: float
    groups: List[List[int]]  # indices sharing one canonical output sequence (size > 1 only)
    total: int

    def to_json(self) -> dict:
        return {"duplicate_ratio": self.duplicate_ratio, "duplicate_groups": self.groups, "total": self.total}


def minimality(result) -> MinimalityReport:
    items = _items(result)
    if not items:
        raise AnalysisError("EMPTY_RESULT", "minimality of an empty result is undefined")
    groups: Dict[tuple, List[int]] = {}
    for i, ii in enumerate(items):
        groups.setdefault(symbolic_outputs_key(ii.outputs_symbolic), []).append(i)
    n = len(items)
    ratio = (n - len(groups)) / n
    dup = sorted(g for g in groups.values() if len(g) > 1)
    return MinimalityReport(ratio, dup, n)


# -- redundancy -------------------------------------------------------------------------


@dataclass(frozen=True)
class RedundancyPair:
    first: int
    second: int
    condition: str
    outputs: tuple

    def to_json(self) -> dict:
        return {
            "pair": [self.first, self.second],
            "condition": self.condition,
            "outputs": [dict(t) for t in self.outputs],
        }


def redundancy_pairs(result) -> List[RedundancyPair]:
    items = _items(result)
    keyed = []
    for ii in items:
        cond = to_text(simplify(And(tuple(r.signed() for r in ii.path_condition.records))))
        keyed.append((cond, symbolic_outputs_key(ii.outputs_symbolic)))
    out = []
    for i in range(len(items)):
        for j in range(i + 1, len(items)):
            if keyed[i] == keyed[j]:
                out.append(RedundancyPair(i, j, keyed[i][0], keyed[i][1]))
    return out


# -- non-determinism --------------------------------------------------------------------

ALTERNATIVE = "alternative"
DISJOINT = "disjoint"
UNKNOWN = "unknown"
INCOMPARABLE = "incomparable"


def nondet_compare(
    list_a: Sequence[Expr],
    list_b: Sequence[Expr],
    enums=None,
    timeout_ms: Optional[int] = None,
    solver_cmd: Optional[str] = None,
    memo: Optional[Dict[tuple, str]] = None,
) -> Tuple[str, List[str]]:
    """Classify two decomposed path conditions position by position.

    Returns the verdict and per-position evidence (``equal``, ``sat``,
    ``unsat`` or ``unknown``). ``memo`` caches position verdicts across calls.
    """
    if len(list_a) != len(list_b):
        return INCOMPARABLE, []
    memo = {} if memo is None else memo
    evidence = []
    verdict = ALTERNATIVE
    for a, b in zip(list_a, list_b):
        sa, sb = simplify(a), simplify(b)
        key = (sa, sb)
        status = memo.get(key)
        if status is None:
            status = _position(sa, sb, enums, timeout_ms, solver_cmd)
            memo[key] = memo[(sb, sa)] = status
        evidence.append(status)
        if status == "unsat":
            verdict = DISJOINT
        elif status == "unknown" and verdict == ALTERNATIVE:
            verdict = UNKNOWN
    return verdict, evidence


def _position(sa: Expr, sb: Expr, enums, timeout_ms, solver_cmd) -> str:
    if sa == sb:
        return "equal"
    if simplify(And((sa, sb))) == FALSE:
        return "unsat"
    s = SolverSession(enums, timeout_ms, solver_cmd)
    s.add(sa)
    s.add(sb)
    res = s.check()
    if res.sat:
        return "sat"
    if res.unsat:
        return "unsat"
    return "unknown"


@dataclass
class NondetReport:
    mode: str
    pairs: List[Tuple[int, int, List[str]]] = field(default_factory=list)
    unknown: List[Tuple[int, int, List[str]]] = field(default_factory=list)

    @property
    def exists(self) -> bool:
        return bool(self.pairs)

    def to_json(self) -> dict:
        out = {"mode": self.mode, "exists": self.exists}
        if self.mode == "full":
            out["pairs"] = [{"pair": [i, j], "evidence": ev} for i, j, ev in self.pairs]
            out["unknown"] = [{"pair": [i, j], "evidence": ev} for i, j, ev in self.unknown]
        return out


def nondet_pairs(result, mode: str = "full", enums=None, timeout_ms=None, solver_cmd=None) -> NondetReport:
    """Pairs of distinct paths that some input could take alternatively.

    ``mode`` is ``"full"`` (all pairs) or ``"exists"`` (stop at the first).
    Position verdicts are computed once per distinct pair of conditions; the
    candidate partners of a path are the intersection of its per-position
    compatible sets.
    """
    if mode not in ("full", "exists"):
        raise AnalysisError("BAD_MODE", f"unknown mode {mode!r}")
    items = _items(result)
    lists = [tuple(simplify(c) for c in decompose(ii.path_condition)) for ii in items]
    report = NondetReport(mode)
    memo: Dict[tuple, str] = {}
    found: List[Tuple[int, int, List[str]]] = []
    unknown: List[Tuple[int, int, List[str]]] = []
    by_len: Dict[int, List[int]] = {}
    for idx, lst in enumerate(lists):
        by_len.setdefault(len(lst), []).append(idx)
    for n, group in by_len.items():
        # compatible[k][cond] = indices whose k-th condition is not disjoint from cond
        compatible: List[Dict[Expr, set]] = []
        for k in range(n):
            holders: Dict[Expr, set] = {}
            for idx in group:
                holders.setdefault(lists[idx][k], set()).add(idx)
            table: Dict[Expr, set] = {}
            for c in holders:
                ok = set()
                for d, idxs in holders.items():
                    status = memo.get((c, d))
                    if status is None:
                        status = _position(c, d, enums, timeout_ms, solver_cmd)
                        memo[(c, d)] = memo[(d, c)] = status
                    if status != "unsat":
                        ok |= idxs
                table[c] = ok
            compatible.append(table)
        for i in group:
            cand = set(group)
            for k in range(n):
                cand &= compatible[k][lists[i][k]]
                if not cand:
                    break
            for j in sorted(x for x in cand if x > i):
                ev = [memo[(a, b)] for a, b in zip(lists[i], lists[j])]
                (unknown if "unknown" in ev else found).append((i, j, ev))
    found.sort(key=lambda t: (t[0], t[1]))
    unknown.sort(key=lambda t: (t[0], t[1]))
    if mode == "exists":
        report.pairs = found[:1]
        report.unknown = [u for u in unknown if not found or (u[0], u[1]) < (found[0][0], found[0][1])]
    else:
        report.pairs = found
        report.unknown = unknown
    return report


# -- coverage ---------------------------------------------------------------------------


@dataclass
class CoverageReport:
    transitions_visited: int
    transitions_total: int
    states_visited: int
    states_total: int
    states_with_vars_visited: Optional[int] = None
    reachable_bound: Optional[int] = None

    @staticmethod
    def _ratio(a, b):
        return a / b if b else 1.0

    @property
    def transition_ratio(self) -> float:
        return self._ratio(self.transitions_visited, self.transitions_total)

    @property
    def state_ratio(self) -> float:
        return self._ratio(self.states_visited, self.states_total)

    @property
    def states_with_vars_ratio(self) -> Optional[float]:
        if self.states_with_vars_visited is None or not self.reachable_bound:
            return None
        return min(1.0, self.states_with_vars_visited / self.reachable_bound)

    def to_json(self) -> dict:
        out = {
            "transitions": {
                "visited": self.transitions_visited,
                "total": self.transitions_total,
                "ratio": self.transition_ratio,
            },
            "states": {"visited": self.states_visited, "total": self.states_total, "ratio": self.state_ratio},
        }
        if self.states_with_vars_visited is not None:
            out["states_with_vars"] = {
                "visited": self.states_with_vars_visited,
                "reachable_bound": self.reachable_bound,
                "ratio": self.states_with_vars_ratio,
            }
        return out


def _var_key(vs) -> tuple:
    return tuple((n, value_key(av.conc)) for n, av in sorted(vs.items()))


def coverage(result, flat: FlatInstance, with_vars: bool = False, reachable_bound: Optional[int] = None) -> CoverageReport:
    items = _items(result)
    transitions = set()
    states = set()
    states_vars = set()
    if items:
        from .executor import initial_state

        init = initial_state(flat)
        for path in flat.firing_order:
            states.add((path, init.states[path]))
            states_vars.add((path, init.states[path], _var_key(init.vars[path])))
    for ii in items:
        if ii.trace is None:
            raise AnalysisError("NO_TRACE", "coverage needs interesting inputs with traces")
        for t in ii.trace.ticks:
            transitions.update(t.fired)
            for path, (s, vs) in t.state_snapshot.items():
                states.add((path, s))
                states_vars.add((path, s, _var_key(vs)))
    return CoverageReport(
        len(transitions),
        flat.transition_count(),
        len(states),
        flat.state_count(),
        len(states_vars) if with_vars else None,
        reachable_bound if with_vars else None,
    )
