from .builtin import BB_BOUND, BuiltinSolver
from .session import (
    SAT,
    UNKNOWN,
    UNSAT,
    SolveResult,
    SolverSession,
    check_sat,
    check_supported,
    check_with_timeout,
    solve,
    solve_external,
)
from .smtlib import ExternalSolver, SmtPrinter, parse_sexps

__all__ = [
    "BB_BOUND",
    "BuiltinSolver",
    "ExternalSolver",
    "SAT",
    "UNKNOWN",
    "UNSAT",
    "SmtPrinter",
    "SolveResult",
    "SolverSession",
    "check_sat",
    "check_supported",
    "check_with_timeout",
    "parse_sexps",
    "solve",
    "solve_external",
]
