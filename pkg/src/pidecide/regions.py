"""Closed intervals used as identification regions.

An identification region for a scalar is either a closed interval
``[lo, hi]`` (possibly a single point) or the explicit :data:`EMPTY`
region.  An empty region is a result, not an error: it means the
maintained assumptions are jointly refuted by the data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Union

__all__ = [
    "TOL",
    "EMPTY",
    "EmptyRegion",
    "IdentificationInterval",
    "OutcomeRange",
    "Region",
    "UninformativeRangeError",
    "intersect",
    "interval_difference",
    "is_subset",
]

# Absolute tolerance for emptiness and containment checks.
TOL = 1e-9


class UninformativeRangeError(ValueError):
    """Raised for outcome ranges that cannot yield informative bounds."""


@dataclass(frozen=True)
class IdentificationInterval:
    """Closed interval ``[lo, hi]`` housing a partially identified scalar.

    ``note`` carries an optional diagnostic (for instance when a bound
    falls back to the logical range).  It does not take part in equality.
    """

    lo: float
    hi: float
    note: str | None = field(default=None, compare=False)

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if math.isnan(lo) or math.isnan(hi):
            raise ValueError("interval endpoints cannot be NaN")
        if lo > hi:
            raise ValueError(f"invalid interval: lo={lo!r} > hi={hi!r}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    is_empty = False

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def is_point(self) -> bool:
        return self.lo == self.hi

    def contains(self, x: float, tol: float = TOL) -> bool:
        return self.lo - tol <= x <= self.hi + tol

    def as_tuple(self) -> tuple[float, float]:
        return (self.lo, self.hi)

    def __iter__(self):
        yield self.lo
        yield self.hi

    def __repr__(self):
        return f"[{self.lo!r}, {self.hi!r}]"


class EmptyRegion:
    """The empty identification region (a singleton, see :data:`EMPTY`)."""

    _instance = None
    is_empty = True
    width = 0.0

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def contains(self, x: float, tol: float = TOL) -> bool:
        return False

    def __repr__(self):
        return "EMPTY"

    def __bool__(self):
        return False

    def __reduce__(self):
        return (EmptyRegion, ())


EMPTY = EmptyRegion()

Region = Union[IdentificationInterval, EmptyRegion]


@dataclass(frozen=True)
class OutcomeRange:
    """Logical range ``[min, max]`` of an outcome variable.

    Unbounded ranges are rejected: with an unbounded outcome the mean of
    the unobserved part can be anything, so the bounds carry no information.
    """

    min: float
    max: float

    def __post_init__(self):
        lo, hi = float(self.min), float(self.max)
        if math.isnan(lo) or math.isnan(hi):
            raise ValueError("outcome range endpoints cannot be NaN")
        if math.isinf(lo) or math.isinf(hi):
            raise UninformativeRangeError(
                "outcome range must be bounded; with an unbounded outcome "
                "the agnostic bound on a mean is uninformative"
            )
        if not lo < hi:
            raise ValueError(f"outcome range needs min < max, got [{lo}, {hi}]")
        object.__setattr__(self, "min", lo)
        object.__setattr__(self, "max", hi)

    @property
    def span(self) -> float:
        return self.max - self.min

    def contains(self, y: float) -> bool:
        return self.min <= y <= self.max

    def to_unit(self, y):
        return (y - self.min) / self.span

    def from_unit(self, u):
        return self.min + self.span * u

    def as_interval(self) -> IdentificationInterval:
        return IdentificationInterval(self.min, self.max)


def intersect(intervals: Iterable[Region]) -> Region:
    """Intersect closed intervals; returns :data:`EMPTY` when disjoint.

    >>> intersect([IdentificationInterval(0.4, 0.7),
    ...            IdentificationInterval(0.2, 0.6),
    ...            IdentificationInterval(0.5, 1.0)])
    [0.5, 0.6]
    """
    intervals = list(intervals)
    if not intervals:
        raise ValueError("intersect() needs at least one interval")
    if any(r.is_empty for r in intervals):
        return EMPTY
    lo = max(r.lo for r in intervals)
    hi = min(r.hi for r in intervals)
    if lo <= hi:
        return IdentificationInterval(lo, hi)
    if lo - hi <= TOL:
        mid = 0.5 * (lo + hi)
        return IdentificationInterval(mid, mid)
    return EMPTY


def interval_difference(
    a: IdentificationInterval, b: IdentificationInterval
) -> IdentificationInterval:
    """All values ``x - y`` with ``x`` in ``a`` and ``y`` in ``b``."""
    return IdentificationInterval(a.lo - b.hi, a.hi - b.lo)


def is_subset(inner: Region, outer: Region, tol: float = TOL) -> bool:
    if inner.is_empty:
        return True
    if outer.is_empty:
        return False
    return outer.lo - tol <= inner.lo and inner.hi <= outer.hi + tol
