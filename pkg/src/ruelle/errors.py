"""Exception types shared across the package.

The CLI maps ``UsageError`` subclasses to exit code 2 and
``NumericFailure`` subclasses to exit code 3.
"""

from __future__ import annotations


class RuelleError(Exception):
    """Base class for all package errors."""


class UsageError(RuelleError, ValueError):
    """Invalid input supplied by the caller."""


class NumericFailure(RuelleError, ArithmeticError):
    """A numerical procedure could not deliver its contract."""


class NotSymplectic(UsageError):
    pass


class NotHyperbolic(NumericFailure):
    pass


class PhaseCountMismatch(UsageError):
    pass


class NonzeroMean(UsageError):
    pass


class QuadratureFailure(NumericFailure):
    pass


class DivergentIntegral(NumericFailure):
    pass


class InsufficientDecades(NumericFailure):
    pass


class ZeroSeries(NumericFailure):
    pass
