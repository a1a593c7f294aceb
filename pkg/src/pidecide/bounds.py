"""Sharp identification bounds from samples with missing or counterfactual outcomes.

All estimators are plug-in: sample frequencies stand in for population
probabilities.  Outcomes with logical range ``[a, b]`` are mapped affinely
onto ``[0, 1]``, bounded there, and mapped back.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, NamedTuple

import numpy as np

from .regions import (
    IdentificationInterval,
    OutcomeRange,
    Region,
    intersect,
    interval_difference,
)

__all__ = [
    "MissingDataSet",
    "TreatmentRecord",
    "TreatmentDataSet",
    "IVBound",
    "cdf_bound",
    "mean_bound_missing",
    "mean_bound_treatment",
    "ate_bound",
    "iv_intersection_bound",
    "mar_point",
]

UNIT = OutcomeRange(0.0, 1.0)


def _check_outcome(y, outcome_range: OutcomeRange, where: str) -> float:
    y = float(y)
    if not outcome_range.contains(y):
        raise ValueError(
            f"{where}: outcome {y!r} outside range "
            f"[{outcome_range.min}, {outcome_range.max}]"
        )
    return y


@dataclass(frozen=True)
class MissingDataSet:
    """Sample of outcomes where ``None`` marks a missing value."""

    outcomes: tuple
    range: OutcomeRange = UNIT

    def __post_init__(self):
        if len(self.outcomes) == 0:
            raise ValueError("dataset has no records")
        cleaned = tuple(
            None if y is None else _check_outcome(y, self.range, f"record {i}")
            for i, y in enumerate(self.outcomes)
        )
        object.__setattr__(self, "outcomes", cleaned)

    @property
    def n(self) -> int:
        return len(self.outcomes)

    @property
    def observed(self) -> np.ndarray:
        return np.array([y for y in self.outcomes if y is not None], dtype=float)

    @property
    def n_missing(self) -> int:
        return sum(y is None for y in self.outcomes)

    @property
    def frac_missing(self) -> float:
        return self.n_missing / self.n


class TreatmentRecord(NamedTuple):
    treatment: Hashable
    outcome: float
    group: Hashable | None = None


@dataclass(frozen=True)
class TreatmentDataSet:
    """Records of (received treatment, realized outcome, optional IV group)."""

    records: tuple
    treatments: tuple = ()
    range: OutcomeRange = UNIT

    def __post_init__(self):
        if len(self.records) == 0:
            raise ValueError("dataset has no records")
        recs = []
        for i, r in enumerate(self.records):
            r = TreatmentRecord(*r)
            if r.outcome is None:
                raise ValueError(f"record {i}: realized outcome is required")
            recs.append(r._replace(outcome=_check_outcome(r.outcome, self.range, f"record {i}")))
        treatments = tuple(self.treatments) or tuple(dict.fromkeys(r.treatment for r in recs))
        unknown = {r.treatment for r in recs} - set(treatments)
        if unknown:
            raise ValueError(f"records use undeclared treatments: {sorted(map(str, unknown))}")
        object.__setattr__(self, "records", tuple(recs))
        object.__setattr__(self, "treatments", treatments)

    @property
    def n(self) -> int:
        return len(self.records)

    @property
    def groups(self) -> tuple:
        return tuple(dict.fromkeys(r.group for r in self.records))

    def subset(self, group) -> "TreatmentDataSet":
        return TreatmentDataSet(
            tuple(r for r in self.records if r.group == group), self.treatments, self.range
        )

    def outcomes_for(self, t) -> np.ndarray:
        return np.array([r.outcome for r in self.records if r.treatment == t], dtype=float)

    def share(self, t) -> float:
        return sum(r.treatment == t for r in self.records) / self.n


def cdf_bound(data: MissingDataSet, threshold: float) -> IdentificationInterval:
    """Sharp bound on ``P(y <= threshold)`` with no assumption on missingness."""
    obs = data.observed
    p_missing = data.frac_missing
    if obs.size == 0:
        return IdentificationInterval(
            0.0, 1.0, note="no observed outcomes; bound is the logical range"
        )
    p_obs = obs.size / data.n
    lo = float(np.mean(obs <= threshold)) * p_obs
    return IdentificationInterval(lo, lo + p_missing)


def mean_bound_missing(data: MissingDataSet) -> IdentificationInterval:
    """Sharp bound on the mean: missing outcomes imputed at each range end."""
    rng = data.range
    obs = data.observed
    if obs.size == 0:
        return IdentificationInterval(
            rng.min, rng.max, note="no observed outcomes; bound is the logical range"
        )
    p_obs = obs.size / data.n
    lo_unit = float(np.mean(rng.to_unit(obs))) * p_obs
    hi_unit = lo_unit + data.frac_missing
    return IdentificationInterval(rng.from_unit(lo_unit), rng.from_unit(hi_unit))


def _unit_bound_treatment(data: TreatmentDataSet, t) -> tuple[float, float] | None:
    y = data.outcomes_for(t)
    if y.size == 0:
        return None
    p_t = y.size / data.n
    lo = float(np.mean(data.range.to_unit(y))) * p_t
    return lo, lo + (1.0 - p_t)


def mean_bound_treatment(data: TreatmentDataSet, t) -> IdentificationInterval:
    """Sharp bound on ``E[y(t)]`` when outcomes under other treatments are counterfactual.

    The bound has width ``P(z != t)`` once outcomes are expressed on the unit
    scale.  A treatment nobody received gets the logical range.
    """
    if t not in data.treatments:
        raise ValueError(f"unknown treatment {t!r}")
    rng = data.range
    unit = _unit_bound_treatment(data, t)
    if unit is None:
        return IdentificationInterval(
            rng.min, rng.max, note=f"no records received treatment {t!r}; bound is the logical range"
        )
    return IdentificationInterval(rng.from_unit(unit[0]), rng.from_unit(unit[1]))


def ate_bound(data: TreatmentDataSet, t, u) -> IdentificationInterval:
    """Bound on ``E[y(t)] - E[y(u)]``."""
    if t == u:
        raise ValueError("ate_bound needs two distinct treatments")
    bt = mean_bound_treatment(data, t)
    bu = mean_bound_treatment(data, u)
    diff = interval_difference(bt, bu)
    notes = [b.note for b in (bt, bu) if b.note]
    if notes:
        diff = IdentificationInterval(diff.lo, diff.hi, note="; ".join(notes))
    return diff


@dataclass(frozen=True)
class IVBound:
    """Intersection bound together with the per-group bounds it came from."""

    region: Region
    groups: dict = field(default_factory=dict)
    diagnostics: tuple = ()


def iv_intersection_bound(data: TreatmentDataSet, t) -> IVBound:
    """Intersection of per-group bounds on ``E[y(t)]``.

    Assumes mean response to ``t`` is common across IV groups.  An empty
    region means the data refute that assumption.
    """
    if any(r.group is None for r in data.records):
        raise ValueError("every record needs a group identifier for the IV bound")
    if t not in data.treatments:
        raise ValueError(f"unknown treatment {t!r}")
    per_group = {g: mean_bound_treatment(data.subset(g), t) for g in data.groups}
    diagnostics = [f"group {g!r}: {b.note}" for g, b in per_group.items() if b.note]
    region = intersect(per_group.values())
    if region.is_empty:
        diagnostics.append(
            "empty intersection: the common mean response assumption is refuted by the data"
        )
    return IVBound(region, per_group, tuple(diagnostics))


def mar_point(data: MissingDataSet | TreatmentDataSet, t=None) -> float:
    """Point estimate under missing-at-random: the mean of the observed cases."""
    if isinstance(data, TreatmentDataSet):
        if t is None:
            raise ValueError("a treatment identifier is required for treatment data")
        y = data.outcomes_for(t)
    else:
        y = data.observed
    if y.size == 0:
        raise ValueError("MAR point is undefined without observed outcomes")
    return float(np.mean(y))

