"""Finite-dimensional quantization with compact momentum space."""

from __future__ import annotations

from . import cylinder, dynamics, errors, fermigas, linalg, su2
from .errors import (ArgumentError, CompactQError, DimensionError, ExclusionError, IterationError,
                     PreconditionError, QuantizabilityError, RangeError, SymmetryError, TruncationError)
from .report import ConvergenceReport

__version__ = "0.1.0"

__all__ = [
    "cylinder",
    "dynamics",
    "errors",
    "fermigas",
    "linalg",
    "su2",
    "ConvergenceReport",
    "CompactQError",
    "ArgumentError",
    "DimensionError",
    "SymmetryError",
    "RangeError",
    "ExclusionError",
    "QuantizabilityError",
    "PreconditionError",
    "TruncationError",
    "IterationError",
]
