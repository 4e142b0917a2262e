"""Exception types shared across the engine."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Diagnostic:
    line: int | None
    message: str
    severity: str = "error"

    def __str__(self) -> str:
        where = f"line {self.line}: " if self.line is not None else ""
        return f"{where}{self.severity}: {self.message}"


class TempoError(Exception):
    """Base class; carries an optional list of diagnostics."""

    def __init__(self, message: str, diagnostics: list[Diagnostic] | None = None):
        super().__init__(message)
        self.diagnostics = list(diagnostics or [])

    def __str__(self) -> str:
        if not self.diagnostics:
            return super().__str__()
        return "\n".join(str(d) for d in self.diagnostics)


class ModelError(TempoError):
    pass


class QueryError(TempoError):
    pass


class ParameterError(TempoError):
    pass


class MemoryLimitExceeded(TempoError):
    """Raised when stored zones exceed ``TEMPO_MEM_LIMIT_MB``."""
