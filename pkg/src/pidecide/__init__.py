"""Partial identification bounds and decisions under ambiguity."""

from .regions import (
    EMPTY,
    EmptyRegion,
    IdentificationInterval,
    OutcomeRange,
    UninformativeRangeError,
    intersect,
    interval_difference,
)

__version__ = "0.1.0"

__all__ = [
    "EMPTY",
    "EmptyRegion",
    "IdentificationInterval",
    "OutcomeRange",
    "UninformativeRangeError",
    "intersect",
    "interval_difference",
]
