"""Finite decision problems under ambiguity.

A :class:`DecisionProblem` is a welfare matrix indexed by (action, state).
Every criterion breaks ties in favour of the earliest action in the
problem's declared order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np

from .regions import IdentificationInterval

__all__ = [
    "DecisionProblem",
    "Prior",
    "Allocation",
    "dominated_actions",
    "regret_table",
    "maximin",
    "minimax_regret",
    "bayes",
    "two_treatment_choice",
    "rectangle_problem",
    "mmr_allocation",
    "allocation_max_regret",
    "CRITERIA",
]

PRIOR_TOL = 1e-9
CRITERIA = ("maximin", "minimax-regret")


@dataclass(frozen=True, eq=False)
class DecisionProblem:
    """Choice set x state space with welfare ``welfare[i, j] = w(actions[i], states[j])``."""

    actions: tuple
    states: tuple
    welfare: np.ndarray

    def __post_init__(self):
        actions, states = tuple(self.actions), tuple(self.states)
        w = np.array(self.welfare, dtype=float)
        if not actions or not states:
            raise ValueError("actions and states must be nonempty")
        if len(set(actions)) != len(actions) or len(set(states)) != len(states):
            raise ValueError("action and state identifiers must be unique")
        if w.shape != (len(actions), len(states)):
            raise ValueError(
                f"welfare has shape {w.shape}, expected {(len(actions), len(states))}"
            )
        if not np.all(np.isfinite(w)):
            raise ValueError("welfare must be finite everywhere")
        w.setflags(write=False)
        object.__setattr__(self, "actions", actions)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "welfare", w)

    def __eq__(self, other):
        if not isinstance(other, DecisionProblem):
            return NotImplemented
        return (
            self.actions == other.actions
            and self.states == other.states
            and np.array_equal(self.welfare, other.welfare)
        )

    def restrict(self, keep: Sequence[Hashable]) -> "DecisionProblem":
        """Sub-problem on the listed actions, preserving declared order."""
        keep = set(keep)
        rows = [i for i, a in enumerate(self.actions) if a in keep]
        return DecisionProblem(
            tuple(self.actions[i] for i in rows), self.states, self.welfare[rows]
        )


@dataclass(frozen=True)
class Prior:
    """Subjective probability weights over a problem's states."""

    weights: tuple

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        if not w:
            raise ValueError("prior needs at least one weight")
        if any(not np.isfinite(x) or x < 0 for x in w):
            raise ValueError("prior weights must be finite and nonnegative")
        if abs(sum(w) - 1.0) > PRIOR_TOL:
            raise ValueError(f"prior weights sum to {sum(w)!r}, not 1")
        object.__setattr__(self, "weights", w)


@dataclass(frozen=True)
class Allocation:
    """Population share assigned to the second treatment (B)."""

    fraction_b: float

    def __post_init__(self):
        if not 0.0 <= self.fraction_b <= 1.0:
            raise ValueError(f"fraction_b must lie in [0, 1], got {self.fraction_b!r}")


def dominated_actions(problem: DecisionProblem) -> set:
    """Actions weakly dominated by some other action.

    ``d`` dominates ``c`` when it is at least as good in every state and
    strictly better in at least one.
    """
    w = problem.welfare
    geq = np.all(w[:, None, :] >= w[None, :, :], axis=2)
    gt = np.any(w[:, None, :] > w[None, :, :], axis=2)
    dominates = geq & gt  # dominates[d, c]
    return {problem.actions[c] for c in np.flatnonzero(dominates.any(axis=0))}


def regret_table(problem: DecisionProblem) -> np.ndarray:
    w = problem.welfare
    return w.max(axis=0, keepdims=True) - w


def maximin(problem: DecisionProblem):
    """Action with the largest worst-case welfare, and that welfare."""
    worst = problem.welfare.min(axis=1)
    i = int(np.argmax(worst))
    return problem.actions[i], float(worst[i])


def minimax_regret(problem: DecisionProblem):
    """Action with the smallest maximum regret, and that regret."""
    worst = regret_table(problem).max(axis=1)
    i = int(np.argmin(worst))
    return problem.actions[i], float(worst[i])


def bayes(problem: DecisionProblem, prior: Prior | Sequence[float]):
    """Action maximizing prior-averaged welfare, and that average."""
    if not isinstance(prior, Prior):
        prior = Prior(tuple(prior))
    if len(prior.weights) != len(problem.states):
        raise ValueError(
            f"prior has {len(prior.weights)} weights for {len(problem.states)} states"
        )
    avg = problem.welfare @ np.asarray(prior.weights)
    i = int(np.argmax(avg))
    return problem.actions[i], float(avg[i])


def _corners(region_a: IdentificationInterval, region_b: IdentificationInterval):
    la, ua = region_a.lo, region_a.hi
    lb, ub = region_b.lo, region_b.hi
    return la, ua, lb, ub


def rectangle_problem(
    region_a: IdentificationInterval,
    region_b: IdentificationInterval,
    points: int = 2,
) -> DecisionProblem:
    """Two-treatment problem whose states are a grid over ``region_a x region_b``.

    With ``points=2`` the states are the four corners of the rectangle.
    """
    ma = np.unique(np.linspace(region_a.lo, region_a.hi, points))
    mb = np.unique(np.linspace(region_b.lo, region_b.hi, points))
    states = [(float(x), float(y)) for x in ma for y in mb]
    welfare = np.array([[s[0] for s in states], [s[1] for s in states]])
    return DecisionProblem(("A", "B"), tuple(states), welfare)


def two_treatment_choice(
    region_a: IdentificationInterval,
    region_b: IdentificationInterval,
    criterion: str = "minimax-regret",
) -> str:
    """Singleton treatment choice ('A' or 'B') over a rectangular identification region."""
    if criterion not in CRITERIA:
        raise ValueError(f"criterion must be one of {CRITERIA}, got {criterion!r}")
    la, ua, lb, ub = _corners(region_a, region_b)
    a_dominant, b_dominant = la >= ub, lb >= ua
    if a_dominant != b_dominant:
        return "A" if a_dominant else "B"
    if criterion == "maximin":
        return "A" if la >= lb else "B"
    return "A" if ub - la <= ua - lb else "B"


def allocation_max_regret(
    region_a: IdentificationInterval,
    region_b: IdentificationInterval,
    fraction_b: float,
) -> float:
    """Maximum regret over the rectangle of assigning ``fraction_b`` to B.

    Welfare of the allocation in state ``(m_a, m_b)`` is
    ``(1 - fraction_b) * m_a + fraction_b * m_b``; the worst states are the
    corners ``(U_A, L_B)`` and ``(L_A, U_B)``.
    """
    if not 0.0 <= fraction_b <= 1.0:
        raise ValueError(f"fraction_b must lie in [0, 1], got {fraction_b!r}")
    la, ua, lb, ub = _corners(region_a, region_b)
    return max(fraction_b * (ua - lb), (1.0 - fraction_b) * (ub - la), 0.0)


def mmr_allocation(
    region_a: IdentificationInterval, region_b: IdentificationInterval
) -> tuple[Allocation, float]:
    """Minimax-regret fractional allocation between treatments A and B.

    >>> alloc, regret = mmr_allocation(IdentificationInterval(0.4, 0.7),
    ...                                IdentificationInterval(0.2, 0.6))
    >>> round(alloc.fraction_b, 6), round(regret, 6)
    (0.285714, 0.142857)
    """
    la, ua, lb, ub = _corners(region_a, region_b)
    a_dominant, b_dominant = la >= ub, lb >= ua
    if a_dominant and b_dominant:
        # both regions collapse to the same point
        return Allocation(0.5), 0.0
    if a_dominant:
        return Allocation(0.0), 0.0
    if b_dominant:
        return Allocation(1.0), 0.0
    to_b, to_a = ub - la, ua - lb
    frac = to_b / (to_b + to_a)
    return Allocation(frac), frac * to_a
