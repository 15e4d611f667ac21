"""Exception types shared across the package.

Every failure mode that callers are expected to catch has its own class so
that tests and the command line tool can distinguish bad input (config
errors) from solver failures.
"""

from __future__ import annotations


class MatsysError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatch(MatsysError, ValueError):
    """Operands have incompatible shapes."""


class NonHermitian(MatsysError, ValueError):
    """Matrix is not hermitian within tolerance after symmetrization."""


class NonHermitianGenerator(NonHermitian):
    """A system generator failed the hermiticity check."""


class DomainError(MatsysError, ValueError):
    """A scalar function was evaluated outside its domain (e.g. log of a
    nonpositive eigenvalue)."""


class NotInSystem(MatsysError, ValueError):
    """Matrix does not lie in the span of the system basis."""


class NotInBody(MatsysError, ValueError):
    """Target does not belong to the projected density body."""


class SystemNotContained(MatsysError, ValueError):
    """The matrix system is not contained in the given algebra."""


class BadSubset(MatsysError, ValueError):
    """A qubit subset is empty, out of range, or otherwise malformed."""


class TooLarge(MatsysError, ValueError):
    """Problem size exceeds the supported desk scale."""


class PointNotOnCurve(MatsysError, ValueError):
    """Query point matches no sampled boundary branch at theta0."""


class Infeasible(MatsysError, RuntimeError):
    """Alternating projections stalled at a positive gap: empty fiber."""


class MaxIterExceeded(MatsysError, RuntimeError):
    """Iteration cap reached before the stopping rule fired."""

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


class NonConvergence(MatsysError, RuntimeError):
    """Solver diverged or failed to reach the target residual."""


class UnknownExample(MatsysError, KeyError):
    """Requested scenario name is not registered."""
