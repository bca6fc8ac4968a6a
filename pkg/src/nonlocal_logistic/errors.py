"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class NonlocalLogisticError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(NonlocalLogisticError, ValueError):
    """Invalid grid, matrix, exponent, field or scenario settings.

    ``field`` names the offending configuration entry when known
    (for instance ``"A.b"`` or ``"alpha"``).
    """

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        if field is not None and not message.startswith(field):
            message = f"{field}: {message}"
        super().__init__(message)


class HypothesisViolation(NonlocalLogisticError, ValueError):
    """A kernel or reaction term fails one of the standing hypotheses."""


class DomainError(NonlocalLogisticError, ValueError):
    """A field lies outside the domain where an expression is defined."""


class SolverError(NonlocalLogisticError, RuntimeError):
    """An iterative or direct solver failed (singular matrix, no convergence)."""

    def __init__(self, message: str, condition: float | None = None):
        self.condition = condition
        if condition is not None:
            message = f"{message} (condition estimate {condition:.3e})"
        super().__init__(message)


class PositivityError(SolverError):
    """A converged principal eigenvector is not of one sign."""
