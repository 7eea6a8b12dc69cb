"""Exception hierarchy shared across the package."""

from __future__ import annotations


class OpsError(Exception):
    """Base class for all package errors."""


class ContractViolationError(OpsError):
    """An operation was called with arguments outside its contract."""


class ShapeError(OpsError):
    """State vectors or component sets do not line up."""


class DuplicateEntryError(OpsError):
    """An id was inserted twice into a store."""


class ClockRegressionError(OpsError):
    """A logical clock was asked to move backwards."""


class ScriptParseError(OpsError):
    """Script tokenization failed; carries the offending position."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class UnsafeScriptError(OpsError):
    """A script was rejected by safety validation before execution."""

    def __init__(self, message: str, violations=None):
        super().__init__(message)
        self.violations = list(violations or [])


class PlanningError(OpsError):
    """Plan generation failed (unknown fault, denied command, bad input)."""


class DecompositionError(OpsError):
    """Task decomposition hit an inconsistent dependency declaration."""


class DegenerateEvidenceError(OpsError):
    """A likelihood row was all zeros; the belief was left unchanged."""


class ScenarioLoadError(OpsError):
    """A scenario spec failed validation against the command catalog."""


class RestoreMismatchError(OpsError):
    """A snapshot from a different topology was offered for restore."""


class TransportError(OpsError):
    """The environment or a remote service was unreachable."""


class ConfigError(OpsError):
    """An engine or adapter configuration value is out of range."""


class RollbackFailedError(OpsError):
    """Rollback itself failed; the run must halt with diagnostics."""


class EngineInvariantError(OpsError):
    """An internal engine invariant was violated; aborts the run."""
