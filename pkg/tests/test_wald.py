import numpy as np
import pytest

from pidecide import wald
from pidecide.wald import TrialDesign, TrialState

import oracles


ES = wald.empirical_success_rule()
TEST05 = wald.test_rule(0.05)
SYM_PRIOR = [(TrialState(0.6, 0.4), 0.5), (TrialState(0.4, 0.6), 0.5)]


def es_scalar(ka, kb, na, nb):
    if kb * na > ka * nb:
        return 1.0
    return 0.5 if kb * na == ka * nb else 0.0


# ---- sample distribution

def test_degenerate_arm():
    dist = wald.enumerate_sample_distribution(TrialState(1.0, 0.3), TrialDesign(3, 2))
    support = {s for s, p in dist if p > 0}
    assert {ka for ka, _ in support} == {3}


def test_fair_coins():
    dist = wald.enumerate_sample_distribution(TrialState(0.5, 0.5), TrialDesign(1, 1))
    assert [p for _, p in dist] == pytest.approx([0.25] * 4, abs=1e-15)


def test_distribution_matches_per_subject_enumeration():
    dist = dict(wald.enumerate_sample_distribution(TrialState(0.6, 0.4), TrialDesign(2, 2)))
    brute = oracles.per_subject_distribution(0.6, 0.4, 2, 2)
    assert len(dist) == 9
    for key, p in brute.items():
        assert dist[key] == pytest.approx(p, abs=1e-14)


def test_masses_sum_to_one_on_grid():
    grid = wald.state_grid(0.05)
    for n in (1, 7, 50, 500):
        pmf = wald.binomial_pmf(n, grid)
        assert np.abs(pmf.sum(axis=1) - 1).max() <= 1e-12


def test_binomial_pmf_no_underflow_at_large_n():
    pmf = wald.binomial_pmf(2000, 0.5)
    assert np.isfinite(pmf).all() and pmf.sum() == pytest.approx(1, abs=1e-12)


# ---- exact evaluation

def test_worked_trial_value():
    ev = wald.evaluate_rule(ES, TrialState(0.6, 0.4), TrialDesign(1, 1))
    assert ev.error_probability == pytest.approx(0.40, abs=1e-12)
    assert ev.regret == pytest.approx(0.08, abs=1e-12)
    assert ev.error_probability * ev.welfare_gap == pytest.approx(ev.regret, abs=1e-12)


def test_perfectly_separated_arms():
    for n in (1, 4, 9):
        ev = wald.evaluate_rule(ES, TrialState(1.0, 0.0), TrialDesign(n, n + 1))
        assert ev.error_probability == 0.0 and ev.regret == 0.0


@pytest.mark.parametrize("rule", [ES, TEST05, wald.bayes_rule(SYM_PRIOR)])
def test_equal_arms_zero_regret(rule):
    ev = wald.evaluate_rule(rule, TrialState(0.5, 0.5), TrialDesign(4, 6))
    assert ev.regret == pytest.approx(0.0, abs=1e-15)
    assert ev.error_probability == 0.0


@pytest.mark.parametrize("state", [(0.3, 0.7), (0.9, 0.2), (0.55, 0.5), (0.0, 1.0)])
@pytest.mark.parametrize("design", [(1, 1), (3, 5), (8, 2)])
def test_evaluation_matches_direct_summation(state, design):
    s, d = TrialState(*state), TrialDesign(*design)
    prob_b, welfare = oracles.rule_evaluation(es_scalar, *state, *design)
    ev = wald.evaluate_rule(ES, s, d)
    assert ev.expected_welfare == pytest.approx(welfare, abs=1e-12)
    assert ev.regret == pytest.approx(ev.error_probability * ev.welfare_gap, abs=1e-12)
    assert 0.0 <= ev.expected_welfare <= s.best + 1e-15


def test_label_symmetry_of_empirical_success():
    rng = np.random.default_rng(1)
    for _ in range(30):
        s = TrialState(*rng.uniform(0, 1, 2))
        d = TrialDesign(*rng.integers(1, 12, 2))
        ev = wald.evaluate_rule(ES, s, d)
        sw = wald.evaluate_rule(ES, s.swapped(), d.swapped())
        assert sw.error_probability == pytest.approx(ev.error_probability, abs=1e-12)
        assert sw.regret == pytest.approx(ev.regret, abs=1e-12)


def test_function_rule_wrapper():
    rule = wald.FunctionRule(es_scalar)
    d = TrialDesign(3, 4)
    np.testing.assert_array_equal(rule.table(d), ES.table(d))
    bad = wald.FunctionRule(lambda *a: 2.0)
    with pytest.raises(ValueError):
        bad.table(d)


# ---- rules

def test_empirical_success_rule_values():
    assert ES(0, 1, 1, 1) == 1.0
    assert ES(2, 4, 5, 10) == 0.5
    assert ES(3, 1, 4, 4) == 0.0
    assert wald.empirical_success_rule("status-quo")(2, 2, 4, 4) == 0.0


def test_test_rule_keeps_status_quo_against_favourable_evidence():
    assert TEST05(5, 0, 5, 5) == 0.0
    assert TEST05(0, 15, 15, 15) == 1.0  # zero variance, positive difference
    assert TEST05(0, 0, 15, 15) == 0.0


def test_test_rule_monotone_in_alpha():
    d = TrialDesign(12, 12)
    tables = [wald.test_rule(a).table(d) for a in (0.01, 0.05, 0.1, 0.3, 0.6, 0.95)]
    for lower, higher in zip(tables, tables[1:]):
        assert (higher >= lower).all()


@pytest.mark.parametrize("n", [30, 50])
def test_test_rule_null_size(n):
    grid = wald.state_grid(0.05)
    prob_b, _ = wald.regret_surface(TEST05, TrialDesign(n, n), grid)
    assert np.diag(prob_b).max() <= 0.05 + 0.05


def test_bad_alpha():
    with pytest.raises(ValueError):
        wald.test_rule(1.0)


def test_bayes_rule_point_prior_is_constant():
    d = TrialDesign(4, 3)
    assert (wald.bayes_rule([(TrialState(0.3, 0.8), 1.0)]).table(d) == 1.0).all()
    assert (wald.bayes_rule([(TrialState(0.8, 0.3), 1.0)]).table(d) == 0.0).all()


@pytest.mark.parametrize("n", [1, 2, 5, 15, 40])
def test_symmetric_prior_bayes_equals_empirical_success(n):
    d = TrialDesign(n, n)
    br = wald.bayes_rule(SYM_PRIOR)
    # direct posterior comparison, independent of the vectorized path
    for ka in range(n + 1):
        for kb in range(n + 1):
            l1 = 0.5 * oracles.binom(n, ka, 0.6) * oracles.binom(n, kb, 0.4)
            l2 = 0.5 * oracles.binom(n, ka, 0.4) * oracles.binom(n, kb, 0.6)
            diff = (l1 * (0.4 - 0.6) + l2 * (0.6 - 0.4)) / (l1 + l2)
            expect = 0.5 if abs(diff) < 1e-12 else float(diff > 0)
            assert br(ka, kb, n, n) == expect == es_scalar(ka, kb, n, n)
    np.testing.assert_array_equal(br.table(d), ES.table(d))


def test_bayes_rule_minimizes_prior_average_regret():
    prior = [(TrialState(0.7, 0.45), 0.3), (TrialState(0.35, 0.5), 0.5), (TrialState(0.2, 0.9), 0.2)]
    rules = [ES, TEST05, wald.test_rule(0.2), wald.empirical_success_rule("status-quo")]
    br = wald.bayes_rule(prior)
    for n_a, n_b in [(1, 1), (5, 5), (4, 9)]:
        d = TrialDesign(n_a, n_b)
        avg = lambda r: sum(w * wald.evaluate_rule(r, s, d).regret for s, w in prior)
        best = avg(br)
        for r in rules:
            assert best <= avg(r) + 1e-12


def test_bayes_rule_unreachable_summary():
    br = wald.bayes_rule([(TrialState(1.0, 0.0), 1.0)])
    assert br(0, 1, 1, 1) == 0.5


# ---- Monte Carlo

def test_mc_matches_exact_within_three_se():
    d = TrialDesign(10, 10)
    for state in [(0.3, 0.6), (0.55, 0.45), (0.1, 0.15)]:
        s = TrialState(*state)
        ex = wald.evaluate_rule(ES, s, d)
        mc = wald.evaluate_rule_mc(ES, s, d, replications=20_000, seed=3)
        assert abs(mc.expected_welfare - ex.expected_welfare) <= 3 * mc.standard_error
        assert mc.regret == pytest.approx(mc.error_probability * mc.welfare_gap, abs=1e-12)


def test_mc_separated_arms_exact_zero():
    for seed in (0, 1, 99):
        mc = wald.evaluate_rule_mc(ES, TrialState(1.0, 0.0), TrialDesign(5, 5), 1000, seed)
        assert mc.error_probability == 0.0 and mc.regret == 0.0


def test_mc_deterministic_and_worker_independent():
    args = (TEST05, TrialState(0.4, 0.6), TrialDesign(20, 20), 50_000, 42)
    a = wald.evaluate_rule_mc(*args)
    b = wald.evaluate_rule_mc(*args)
    c = wald.evaluate_rule_mc(*args, workers=4)
    assert a == b == c
    assert wald.evaluate_rule_mc(*args[:4], 43) != a


def test_mc_rejects_zero_replications():
    with pytest.raises(ValueError):
        wald.evaluate_rule_mc(ES, TrialState(0.5, 0.5), TrialDesign(1, 1), 0)


# ---- max regret

def test_state_grid():
    np.testing.assert_allclose(wald.state_grid(0.25), [0, 0.25, 0.5, 0.75, 1.0])
    assert wald.state_grid(0.3)[-1] == 1.0
    assert len(wald.state_grid(0.05)) == 21
    with pytest.raises(ValueError):
        wald.state_grid(0.6)


def test_max_regret_dominates_every_grid_state():
    d = TrialDesign(3, 4)
    value, arg = wald.max_regret(ES, d, 0.1)
    assert arg.p_a != arg.p_b
    for pa in wald.state_grid(0.1):
        for pb in wald.state_grid(0.1):
            assert value >= wald.evaluate_rule(ES, TrialState(pa, pb), d).regret - 1e-15
    assert value == pytest.approx(wald.evaluate_rule(ES, arg, d).regret, abs=1e-15)


def test_test_rule_has_larger_max_regret_than_empirical_success():
    d = TrialDesign(15, 15)
    es_value, _ = wald.max_regret(ES, d, 0.05)
    test_value, _ = wald.max_regret(TEST05, d, 0.05)
    assert test_value > es_value
