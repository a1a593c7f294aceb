"""Statistical decision rules for two-arm Bernoulli trials.

A rule maps the trial summary ``(k_a, k_b, n_a, n_b)`` (success counts and
arm sizes) to the probability of choosing arm B.  Arm A is the status quo.
The welfare of choosing an arm in state ``(p_a, p_b)`` is that arm's success
probability, so the regret of a rule in a state is the probability of
picking the worse arm times the gap between the arms.

Exact evaluation enumerates all ``(n_a + 1) * (n_b + 1)`` summaries.
Monte Carlo evaluation is available for large designs.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import gammaln, logsumexp, xlog1py, xlogy
from scipy.stats import norm

__all__ = [
    "EXACT_MAX_N",
    "TrialDesign",
    "TrialState",
    "DecisionRule",
    "FunctionRule",
    "EmpiricalSuccessRule",
    "TestRule",
    "BayesRule",
    "RuleEvaluation",
    "binomial_pmf",
    "enumerate_sample_distribution",
    "evaluate_rule",
    "evaluate_rule_mc",
    "regret_surface",
    "state_grid",
    "max_regret",
    "empirical_success_rule",
    "test_rule",
    "bayes_rule",
]

# Designs up to this size per arm are evaluated exactly by default.
EXACT_MAX_N = 500
MC_BLOCK = 1 << 14


@dataclass(frozen=True)
class TrialDesign:
    n_a: int
    n_b: int

    def __post_init__(self):
        for name in ("n_a", "n_b"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
            object.__setattr__(self, name, int(v))

    def swapped(self) -> "TrialDesign":
        return TrialDesign(self.n_b, self.n_a)


@dataclass(frozen=True)
class TrialState:
    p_a: float
    p_b: float

    def __post_init__(self):
        for name in ("p_a", "p_b"):
            v = float(getattr(self, name))
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v!r}")
            object.__setattr__(self, name, v)

    @property
    def best(self) -> float:
        return max(self.p_a, self.p_b)

    @property
    def gap(self) -> float:
        return abs(self.p_a - self.p_b)

    def swapped(self) -> "TrialState":
        return TrialState(self.p_b, self.p_a)


def binomial_pmf(n: int, p) -> np.ndarray:
    """Binomial(n, p) probabilities of 0..n successes, computed in log space.

    ``p`` may be a scalar or 1-d array; the result has shape ``(..., n + 1)``.
    """
    p = np.asarray(p, dtype=float)[..., None]
    k = np.arange(n + 1)
    log_choose = gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)
    return np.exp(log_choose + xlogy(k, p) + xlog1py(n - k, -p))


class DecisionRule:
    """Base class: subclasses implement the vectorized :meth:`prob_b`."""

    name = "rule"

    def prob_b(self, k_a, k_b, n_a: int, n_b: int) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, k_a, k_b, n_a: int, n_b: int) -> float:
        return float(self.prob_b(np.asarray(k_a), np.asarray(k_b), n_a, n_b))

    def table(self, design: TrialDesign) -> np.ndarray:
        """Probability of choosing B for every summary, shape ``(n_a + 1, n_b + 1)``."""
        k_a, k_b = np.meshgrid(
            np.arange(design.n_a + 1), np.arange(design.n_b + 1), indexing="ij"
        )
        r = np.broadcast_to(
            np.asarray(self.prob_b(k_a, k_b, design.n_a, design.n_b), dtype=float),
            k_a.shape,
        )
        if np.any(~np.isfinite(r)) or r.min() < 0.0 or r.max() > 1.0:
            raise ValueError(f"{self.name}: choice probabilities must lie in [0, 1]")
        return r


class FunctionRule(DecisionRule):
    """Wrap a scalar function ``f(k_a, k_b, n_a, n_b) -> P(choose B)``."""

    def __init__(self, func: Callable[[int, int, int, int], float], name: str = "custom"):
        self.func = func
        self.name = name

    def prob_b(self, k_a, k_b, n_a, n_b):
        f = np.vectorize(lambda a, b: float(self.func(int(a), int(b), n_a, n_b)), otypes=[float])
        return f(k_a, k_b)


class EmpiricalSuccessRule(DecisionRule):
    """Choose the arm with the higher sample success rate.

    Ties are split 50/50 by default; ``tie="status-quo"`` sends them to A.
    """

    def __init__(self, tie: str = "randomize"):
        if tie not in ("randomize", "status-quo"):
            raise ValueError(f"tie must be 'randomize' or 'status-quo', got {tie!r}")
        self.tie = tie
        self.name = "es" if tie == "randomize" else "es:status-quo"

    def prob_b(self, k_a, k_b, n_a, n_b):
        # integer cross-multiplication keeps tie detection exact
        diff = np.asarray(k_b) * n_a - np.asarray(k_a) * n_b
        tie_value = 0.5 if self.tie == "randomize" else 0.0
        return np.where(diff > 0, 1.0, np.where(diff < 0, 0.0, tie_value))


class TestRule(DecisionRule):
    """One-sided test of 'B better than A'; B is chosen only on rejection.

    The statistic is the difference in sample rates over its unpooled
    standard error.  A zero standard error chooses B only when the
    difference is positive.
    """

    __test__ = False  # keep pytest from collecting this class

    def __init__(self, alpha: float = 0.05):
        if not 0.0 < alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
        self.alpha = float(alpha)
        self.critical = float(norm.ppf(1.0 - self.alpha))
        self.name = f"test:{self.alpha:g}"

    def prob_b(self, k_a, k_b, n_a, n_b):
        pa = np.asarray(k_a, dtype=float) / n_a
        pb = np.asarray(k_b, dtype=float) / n_b
        diff = pb - pa
        var = pa * (1 - pa) / n_a + pb * (1 - pb) / n_b
        with np.errstate(divide="ignore", invalid="ignore"):
            z = diff / np.sqrt(var)
        reject = np.where(var > 0, z > self.critical, diff > 0)
        return reject.astype(float)


class BayesRule(DecisionRule):
    """Choose the arm with the higher posterior mean under a finite prior.

    ``prior`` is a sequence of ``(TrialState, weight)`` pairs.  Posterior
    ties, and summaries impossible under every support state, split 50/50.
    """

    def __init__(self, prior: Sequence[tuple[TrialState, float]], name: str = "bayes"):
        prior = [(s if isinstance(s, TrialState) else TrialState(*s), float(w)) for s, w in prior]
        if not prior:
            raise ValueError("prior needs at least one support state")
        weights = np.array([w for _, w in prior])
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-9:
            raise ValueError("prior weights must be nonnegative and sum to 1")
        self.prior = prior
        self.name = name
        self._pa = np.array([s.p_a for s, _ in prior])
        self._pb = np.array([s.p_b for s, _ in prior])
        with np.errstate(divide="ignore"):
            self._log_w = np.log(weights)

    def prob_b(self, k_a, k_b, n_a, n_b):
        k_a = np.asarray(k_a, dtype=float)[..., None]
        k_b = np.asarray(k_b, dtype=float)[..., None]
        # binomial coefficients cancel in the posterior
        log_post = (
            self._log_w
            + xlogy(k_a, self._pa) + xlog1py(n_a - k_a, -self._pa)
            + xlogy(k_b, self._pb) + xlog1py(n_b - k_b, -self._pb)
        )
        norm_c = logsumexp(log_post, axis=-1, keepdims=True)
        reachable = np.isfinite(norm_c[..., 0])
        with np.errstate(invalid="ignore"):
            post = np.exp(log_post - norm_c)
        diff = np.where(reachable, (post * (self._pb - self._pa)).sum(axis=-1), 0.0)
        tie = np.abs(diff) <= 1e-12
        return np.where(tie, 0.5, np.where(diff > 0, 1.0, 0.0))


def empirical_success_rule(tie: str = "randomize") -> EmpiricalSuccessRule:
    return EmpiricalSuccessRule(tie)


def test_rule(alpha: float = 0.05) -> TestRule:
    """Conventional test with the status quo as null: 5% Type I error by default."""
    return TestRule(alpha)


test_rule.__test__ = False


def bayes_rule(prior: Sequence[tuple[TrialState, float]]) -> BayesRule:
    return BayesRule(prior)


@dataclass(frozen=True)
class RuleEvaluation:
    """Performance of a rule in one state.

    ``standard_error`` (of ``expected_welfare``) and ``replications`` are set
    only for Monte Carlo estimates.
    """

    state: TrialState
    expected_welfare: float
    error_probability: float
    welfare_gap: float
    regret: float
    standard_error: float | None = None
    replications: int | None = None

    @property
    def error_probability_se(self) -> float | None:
        if self.standard_error is None:
            return None
        return self.standard_error / self.welfare_gap if self.welfare_gap > 0 else 0.0


def enumerate_sample_distribution(state: TrialState, design: TrialDesign):
    """All summaries ``(k_a, k_b)`` with their sampling probabilities."""
    pa = binomial_pmf(design.n_a, state.p_a)
    pb = binomial_pmf(design.n_b, state.p_b)
    joint = np.outer(pa, pb)
    return [
        ((k_a, k_b), float(joint[k_a, k_b]))
        for k_a in range(design.n_a + 1)
        for k_b in range(design.n_b + 1)
    ]


def _summarize(state: TrialState, prob_b: float, **extra) -> RuleEvaluation:
    pa, pb = state.p_a, state.p_b
    welfare = pa if pa == pb else (1.0 - prob_b) * pa + prob_b * pb
    if pa > pb:
        err = prob_b
    elif pb > pa:
        err = 1.0 - prob_b
    else:
        err = 0.0
    return RuleEvaluation(
        state=state,
        expected_welfare=welfare,
        error_probability=err,
        welfare_gap=state.gap,
        regret=state.best - welfare,
        **extra,
    )


def evaluate_rule(rule: DecisionRule, state: TrialState, design: TrialDesign) -> RuleEvaluation:
    """Exact expected welfare, error probability and regret of ``rule`` in ``state``."""
    pa = binomial_pmf(design.n_a, state.p_a)
    pb = binomial_pmf(design.n_b, state.p_b)
    prob_b = float(pa @ rule.table(design) @ pb)
    return _summarize(state, prob_b)


def _mc_block(rule, state, design, seed, block, size):
    rng = np.random.Generator(np.random.Philox(seed).jumped(block))
    k_a = rng.binomial(design.n_a, state.p_a, size)
    k_b = rng.binomial(design.n_b, state.p_b, size)
    return np.broadcast_to(
        np.asarray(rule.prob_b(k_a, k_b, design.n_a, design.n_b), dtype=float), (size,)
    )


def evaluate_rule_mc(
    rule: DecisionRule,
    state: TrialState,
    design: TrialDesign,
    replications: int = 100_000,
    seed: int = 0,
    workers: int = 1,
) -> RuleEvaluation:
    """Monte Carlo estimate of :func:`evaluate_rule`.

    Replications are drawn in fixed-size blocks, block ``i`` from a Philox
    stream keyed by ``seed`` and jumped ``i`` times, so results do not depend
    on ``workers``.  The rule's own randomization is integrated out.
    """
    if replications < 1:
        raise ValueError("replications must be at least 1")
    sizes = [MC_BLOCK] * (replications // MC_BLOCK)
    if replications % MC_BLOCK:
        sizes.append(replications % MC_BLOCK)
    jobs = [(rule, state, design, seed, i, n) for i, n in enumerate(sizes)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            blocks = list(pool.map(lambda j: _mc_block(*j), jobs))
    else:
        blocks = [_mc_block(*j) for j in jobs]
    r = np.concatenate(blocks)
    prob_b = float(r.mean())
    # per-replication welfare is affine in r, so its spread is |gap| * sd(r)
    sd = float(r.std(ddof=1)) if replications > 1 else 0.0
    se = abs(state.p_b - state.p_a) * sd / math.sqrt(replications)
    return _summarize(state, prob_b, standard_error=se, replications=replications)


def state_grid(step: float) -> np.ndarray:
    """Success probabilities ``0, step, 2*step, ...`` up to 1 (1 always included)."""
    if not 0.0 < step <= 0.5:
        raise ValueError(f"grid step must lie in (0, 0.5], got {step!r}")
    count = int(math.floor(1.0 / step + 1e-9))
    grid = np.round(np.arange(count + 1) * step, 12)
    if grid[-1] < 1.0:
        grid = np.append(grid, 1.0)
    return grid


def regret_surface(rule: DecisionRule, design: TrialDesign, grid: np.ndarray):
    """Exact probability of choosing B and regret over ``grid x grid``.

    Row index is ``p_a``, column index ``p_b``.
    """
    grid = np.asarray(grid, dtype=float)
    pa = binomial_pmf(design.n_a, grid)  # (G, n_a + 1)
    pb = binomial_pmf(design.n_b, grid)
    prob_b = pa @ rule.table(design) @ pb.T
    p_a, p_b = np.meshgrid(grid, grid, indexing="ij")
    welfare = (1.0 - prob_b) * p_a + prob_b * p_b
    return prob_b, np.maximum(p_a, p_b) - welfare


def max_regret(rule: DecisionRule, design: TrialDesign, grid_step: float = 0.05):
    """Largest exact regret over the state grid, and the first state attaining it."""
    grid = state_grid(grid_step)
    _, regret = regret_surface(rule, design, grid)
    i, j = np.unravel_index(int(np.argmax(regret)), regret.shape)
    return float(regret[i, j]), TrialState(grid[i], grid[j])
