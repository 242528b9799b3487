"""Solver sessions: an assertion stack plus a backend and a time budget."""

from __future__ import annotations

import os
import time
from functools import lru_cache
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from ..errors import SolverError, SymbolicError
from ..expr import Expr, Var, walk
from ..symbolic import simplify
from ..values import BOOL
from .builtin import BuiltinSolver
from .smtlib import ExternalSolver

SAT = "sat"
UNSAT = "unsat"
UNKNOWN = "unknown"


@dataclass(frozen=True)
class SolveResult:
    status: str
    model: Optional[Dict[str, object]] = field(default=None, compare=False)
    reason: Optional[str] = None  # "timeout" | "unsupported" for Unknown

    @property
    def sat(self) -> bool:
        return self.status == SAT

    @property
    def unsat(self) -> bool:
        return self.status == UNSAT

    @property
    def timeout(self) -> bool:
        return self.status == UNKNOWN and self.reason == "timeout"


@lru_cache(maxsize=100_000)
def check_supported(e: Expr) -> Expr:
    """Canonical form of ``e``; rejects anything outside the solver fragment."""
    for n in walk(e):
        if isinstance(n, Var):
            raise SolverError("UNSUPPORTED_ATOM", f"unresolved name {n.name} in assertion")
    try:
        s = simplify(e)
    except SymbolicError as exc:
        raise SolverError("UNSUPPORTED_ATOM", str(exc)) from None
    from ..expr import Const, type_of

    ty = type_of(s, {})
    if ty is not None and ty != BOOL:
        raise SolverError("UNSUPPORTED_ATOM", f"assertion is not boolean: {s}")
    if isinstance(s, Const) and not isinstance(s.value, bool):
        raise SolverError("UNSUPPORTED_ATOM", f"assertion is not boolean: {s}")
    return s


class SolverSession:
    """Assertion stack with push/pop; ``check`` decides the current conjunction."""

    def __init__(
        self,
        enums: Optional[Dict[str, Tuple[str, ...]]] = None,
        timeout_ms: Optional[int] = None,
        command: Optional[str] = None,
    ):
        self.enums = dict(enums or {})
        self.timeout_ms = timeout_ms
        self.command = command
        self._frames: List[List[Expr]] = [[]]
        self.calls = 0

    @classmethod
    def from_env(cls, enums=None, timeout_ms=None, command=None) -> "SolverSession":
        return cls(enums, timeout_ms, command or os.environ.get("CCL_SOLVER_CMD") or None)

    @property
    def backend(self) -> str:
        return "external" if self.command else "builtin"

    def push(self):
        self._frames.append([])

    def pop(self):
        if len(self._frames) == 1:
            raise SolverError("STACK_UNDERFLOW", "pop without matching push")
        self._frames.pop()

    def add(self, e: Expr):
        self._frames[-1].append(check_supported(e))

    @property
    def assertions(self) -> List[Expr]:
        return [a for frame in self._frames for a in frame]

    def check(self) -> SolveResult:
        return self.check_with_timeout(self.timeout_ms)

    def check_with_timeout(self, budget_ms: Optional[int]) -> SolveResult:
        if budget_ms is not None and budget_ms < 1:
            raise SolverError("BAD_BUDGET", "timeout budget must be at least 1 ms")
        self.calls += 1
        formulas = self.assertions
        if self.command:
            status, payload = ExternalSolver(self.command, self.enums).solve(
                formulas, None if budget_ms is None else budget_ms / 1000.0
            )
        else:
            deadline = None if budget_ms is None else time.monotonic() + budget_ms / 1000.0
            status, payload = BuiltinSolver(self.enums).solve(formulas, deadline)
        if status == SAT:
            return SolveResult(SAT, payload)
        if status == UNSAT:
            return SolveResult(UNSAT)
        return SolveResult(UNKNOWN, reason=payload)


def check_sat(session: SolverSession) -> SolveResult:
    return session.check()


def check_with_timeout(session: SolverSession, budget_ms: int) -> SolveResult:
    return session.check_with_timeout(budget_ms)


def solve_external(session: SolverSession) -> SolveResult:
    if not session.command:
        raise SolverError("BACKEND_SPAWN", "no external solver command configured")
    return session.check()


def solve(formulas, enums=None, timeout_ms=None, command=None) -> SolveResult:
    s = SolverSession(enums, timeout_ms, command)
    for f in formulas:
        s.add(f)
    return s.check()
