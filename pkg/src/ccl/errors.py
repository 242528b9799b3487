"""Exception hierarchy. Every error carries a stable machine-readable ``code``."""

from __future__ import annotations


class CclError(Exception):
    code = "ERROR"

    def __init__(self, code: str | None = None, message: str = ""):
        if code is not None:
            self.code = code
        self.message = message
        super().__init__(f"{self.code}: {message}" if message else self.code)


class ParseError(CclError):
    code = "PARSE_ERROR"

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        first = self.diagnostics[0] if self.diagnostics else None
        super().__init__("PARSE_ERROR", str(first) if first else "parse failed")


class FlattenError(CclError):
    pass


class ExecutionError(CclError):
    pass


class SymbolicError(CclError):
    pass


class SolverError(CclError):
    pass


class ExplorationError(CclError):
    pass


class BudgetExceeded(ExplorationError):
    code = "BUDGET_EXCEEDED"

    def __init__(self, message: str, partial=None):
        super().__init__("BUDGET_EXCEEDED", message)
        self.partial = partial


class AnalysisError(CclError):
    pass


class DiffError(CclError):
    pass


class CapExceeded(CclError):
    code = "CAP_EXCEEDED"
