"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class CompactQError(Exception):
    """Base class for every error raised by this package."""


class ArgumentError(CompactQError, ValueError):
    """Invalid or inconsistent arguments (empty sweeps, bad indices, ...)."""


class DimensionError(ArgumentError):
    """Matrix or vector shapes do not match."""


class SymmetryError(ArgumentError):
    """A matrix that must be Hermitian is not."""


class RangeError(ArgumentError):
    """Argument outside the supported numerical range."""


class ExclusionError(ArgumentError):
    """More fermions than available single-particle states."""


class QuantizabilityError(ArgumentError):
    """A domain-defining polynomial does not quantize to a commuting family."""


class TruncationError(CompactQError):
    """The truncated representation is too small for the requested operation."""


class PreconditionError(ArgumentError):
    """A caller-asserted precondition was found to be false."""


class IterationError(CompactQError, ArithmeticError):
    """An iterative method did not converge.

    The last iterate is kept in ``estimate`` so callers can still inspect it.
    """

    def __init__(self, message: str, estimate: float):
        super().__init__(message)
        self.estimate = estimate
