"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class AbelCyclesError(Exception):
    """Base class for every error raised by this package."""


class DomainError(AbelCyclesError, ValueError):
    """An argument lies outside the domain where a formula is valid."""


class DivergenceError(DomainError):
    """The quantity diverges at the requested argument (e.g. the period at h = 0)."""


class DegenerateOrbitError(DomainError):
    """The level set collapses to a point (h = 4, the center)."""


class SingularMatrixError(AbelCyclesError, ZeroDivisionError):
    """A triangular matrix has lambda**2 == 1 where the psi-map is undefined."""


class PrecisionError(AbelCyclesError, ArithmeticError):
    """Requested accuracy was not reached; the message suggests a remedy."""

    def __init__(self, message: str, suggested_n: int | None = None):
        super().__init__(message)
        self.suggested_n = suggested_n


class RangeError(AbelCyclesError, OverflowError):
    """Exponential weights would overflow double precision."""


class IntegrationError(AbelCyclesError, RuntimeError):
    """An ODE integration failed (step underflow, energy drift, missing return)."""


class BoxExitError(IntegrationError):
    """The trajectory left the working box |x1| <= 3, |x2| <= 4, |y| <= 1."""


class ConsistencyError(AbelCyclesError, RuntimeError):
    """Two independent evaluation routes disagree beyond their tolerance."""


class NoSignChangeError(AbelCyclesError, ValueError):
    """A bracketing root search was given a bracket without a sign change."""


class PrecisionWarning(UserWarning):
    """Numerical parameters are outside the range where accuracy is guaranteed."""
