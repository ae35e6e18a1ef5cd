from __future__ import annotations


class DenseForestError(Exception):
    """Base class for all package errors."""


class DegenerateLatticeError(DenseForestError, ValueError):
    pass


class BudgetExceededError(DenseForestError):
    """An enumeration would exceed its memory or work budget."""

    def __init__(self, message: str, estimate: float | None = None):
        super().__init__(message)
        self.estimate = estimate


class SpecError(DenseForestError, ValueError):
    """A malformed forest spec, section, or config."""


class CertificateError(DenseForestError):
    """A certificate or witness search ran out of candidates."""
