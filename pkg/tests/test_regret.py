"""Episode simulation, aggregation, bound evaluators, and coverage counting.

Bound oracles below are frozen constants computed once with 30-digit
arithmetic (mpmath) from the defining expressions; the tests compare the
float64 implementation against them at 1e-12 relative tolerance.
"""
import math

import numpy as np
import pytest

from conftest import random_tabular_pair
from seqregret import (DivergenceTrace, InvalidInputError, Pmf,
                       ProductDistribution, QUANTILE_LEVELS, RegretTrace,
                       avg_tv_concentration_bound, avg_tv_concentration_bound_kl,
                       classification_loss, empirical_coverage, episode_key,
                       expected_regret_bound_kl, expected_regret_bound_tv,
                       highprob_bound_expected_tv, highprob_bound_kl,
                       highprob_bound_realized_tv, mismatched_policy,
                       monte_carlo_summary, optimal_policy, run_episode,
                       summarize_running_averages)


# ---------------------------------------------------------------------------
# Episodes
# ---------------------------------------------------------------------------

def test_matched_learner_has_zero_regret_pathwise():
    p, _ = random_tabular_pair(30, states=3, horizon=4)
    loss = classification_loss(3)
    learner = mismatched_policy(p, loss)         # model == data, same tie rule
    opt = optimal_policy(p, loss)
    for i in range(20):
        trace = run_episode(p, learner, opt, loss, episode_key(3, i))
        assert trace.cumulative[-1] == 0.0
        assert trace.average == 0.0
        assert all(c == 0.0 for c in trace.cumulative)


def test_episode_is_deterministic_per_seed_key():
    p, q = random_tabular_pair(31, states=3, horizon=5)
    loss = classification_loss(3)
    learner, opt = mismatched_policy(q, loss), optimal_policy(p, loss)
    a = run_episode(p, learner, opt, loss, (8, 2))
    b = run_episode(p, learner, opt, loss, (8, 2))
    c = run_episode(p, learner, opt, loss, (8, 3))
    assert a.sequence == b.sequence and a.cumulative == b.cumulative
    assert a.seed == (8, 2)
    assert c.sequence != a.sequence or c.cumulative != a.cumulative


def test_episode_fields_are_consistent():
    p, q = random_tabular_pair(32, states=2, horizon=6)
    loss = classification_loss(2)
    trace = run_episode(p, mismatched_policy(q, loss), optimal_policy(p, loss),
                        loss, (1, 0), divergence_against=q)
    assert len(trace.sequence) == 6
    diffs = [lb - lo for lb, lo in zip(trace.losses_learner, trace.losses_optimal)]
    assert trace.cumulative == pytest.approx(tuple(np.cumsum(diffs)))
    assert trace.average == pytest.approx(trace.cumulative[-1] / 6)
    # divergence records follow the realized path
    assert len(trace.divergence.tv_rounds) == 6
    assert trace.divergence.avg_tv == pytest.approx(
        sum(trace.divergence.tv_rounds) / 6)


def test_episode_divergence_rounds_match_direct_evaluation():
    from seqregret import instantaneous_trace
    p, q = random_tabular_pair(33, states=2, horizon=5)
    loss = classification_loss(2)
    trace = run_episode(p, mismatched_policy(q, loss), optimal_policy(p, loss),
                        loss, (4, 1), divergence_against=q)
    direct = instantaneous_trace(p, q, trace.sequence)
    assert trace.divergence.tv_rounds == pytest.approx(direct.tv_rounds)
    assert trace.divergence.kl_rounds == pytest.approx(direct.kl_rounds)


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------

def test_summary_mean_and_quantiles_shapes():
    p, q = random_tabular_pair(34, states=2, horizon=5)
    loss = classification_loss(2)
    summary = monte_carlo_summary(p, mismatched_policy(q, loss),
                                  optimal_policy(p, loss), loss,
                                  runs=40, base_seed=12)
    assert summary.runs == 40 and summary.horizon == 5
    assert summary.mean.shape == (5,)
    assert set(summary.quantiles) == set(QUANTILE_LEVELS)
    # quantile curves are ordered at every round
    for lo, hi in zip(QUANTILE_LEVELS, QUANTILE_LEVELS[1:]):
        assert np.all(summary.quantiles[lo] <= summary.quantiles[hi] + 1e-15)


def test_single_run_quantiles_collapse_to_the_mean():
    p, q = random_tabular_pair(35, states=2, horizon=4)
    loss = classification_loss(2)
    summary = monte_carlo_summary(p, mismatched_policy(q, loss),
                                  optimal_policy(p, loss), loss,
                                  runs=1, base_seed=0)
    for level in QUANTILE_LEVELS:
        assert np.allclose(summary.quantiles[level], summary.mean)


def test_worker_count_does_not_change_the_output():
    p, q = random_tabular_pair(36, states=3, horizon=5)
    loss = classification_loss(3)
    one = monte_carlo_summary(p, mismatched_policy(q, loss),
                              optimal_policy(p, loss), loss,
                              runs=16, base_seed=5, workers=1)
    four = monte_carlo_summary(p, mismatched_policy(q, loss),
                               optimal_policy(p, loss), loss,
                               runs=16, base_seed=5, workers=4)
    assert np.array_equal(one.mean, four.mean)
    for level in QUANTILE_LEVELS:
        assert np.array_equal(one.quantiles[level], four.quantiles[level])


def test_summarize_matrix_against_numpy_directly():
    matrix = np.array([[0.0, 1.0], [1.0, 3.0], [2.0, 2.0], [3.0, 0.0]])
    summary = summarize_running_averages(matrix, base_seed=1)
    assert np.allclose(summary.mean, [1.5, 1.5])
    assert np.allclose(summary.quantiles[50], np.percentile(matrix, 50, axis=0))
    with pytest.raises(InvalidInputError):
        summarize_running_averages(np.empty((0, 3)), base_seed=1)


def test_monte_carlo_summary_validates_inputs():
    p, q = random_tabular_pair(37, states=2, horizon=3)
    loss = classification_loss(2)
    with pytest.raises(InvalidInputError):
        monte_carlo_summary(p, mismatched_policy(q, loss), optimal_policy(p, loss),
                            loss, runs=0, base_seed=0)


# ---------------------------------------------------------------------------
# Bound evaluators (frozen 30-digit oracles)
# ---------------------------------------------------------------------------

def test_expected_regret_bounds_oracles():
    assert expected_regret_bound_tv(2.0, 0.3) == pytest.approx(0.6, rel=1e-15)
    # sqrt(0.25 / 200)
    assert expected_regret_bound_kl(1.0, 100, 0.25) == pytest.approx(
        0.0353553390593273762200422181052, rel=1e-12)
    assert expected_regret_bound_kl(1.0, 100, math.inf) == math.inf


def test_highprob_bound_oracles():
    # 2*0.05 + (2*sqrt(2)/10)*sqrt(ln 10)
    assert highprob_bound_realized_tv(1.0, 100, 0.1, 0.05) == pytest.approx(
        0.529193205257869447927236714058, rel=1e-12)
    # 4*0.05/0.1 + (2*sqrt(2)/10)*sqrt(ln 20)
    assert highprob_bound_expected_tv(1.0, 100, 0.1, 0.05) == pytest.approx(
        2.48954936613616330927520539297, rel=1e-12)
    # 2*sqrt(1/100)/sqrt(0.25) + (2*sqrt(2)/10)*sqrt(ln 8)
    assert highprob_bound_kl(1.0, 100, 0.25, 1.0) == pytest.approx(
        0.807866796067523587107071439978, rel=1e-12)
    assert highprob_bound_kl(1.0, 100, 0.25, math.inf) == math.inf


def test_concentration_bound_oracles():
    assert avg_tv_concentration_bound(0.1, 0.05) == pytest.approx(0.5, rel=1e-15)
    # sqrt(0.02 / 0.2)
    assert avg_tv_concentration_bound_kl(0.1, 0.02) == pytest.approx(
        0.316227766016837933199889354443, rel=1e-12)


def test_trivial_failure_probability_drops_the_tail_terms():
    # at delta = 1 only the ln 2 fluctuation (or nothing) remains
    assert highprob_bound_realized_tv(1.0, 100, 1.0, 0.05) == pytest.approx(
        0.1, rel=1e-12)
    fluct = 2 * math.sqrt(2) / 10 * math.sqrt(math.log(2))
    assert highprob_bound_expected_tv(1.0, 100, 1.0, 0.05) == pytest.approx(
        0.2 + fluct, rel=1e-12)


def test_bounds_tighten_as_delta_grows():
    for fn, extra in ((highprob_bound_realized_tv, 0.05),
                      (highprob_bound_expected_tv, 0.05),
                      (highprob_bound_kl, 1.0)):
        strict = fn(1.0, 100, 0.01, extra)
        loose = fn(1.0, 100, 0.2, extra)
        assert strict > loose
    assert avg_tv_concentration_bound(0.01, 0.05) > avg_tv_concentration_bound(0.2, 0.05)
    assert avg_tv_concentration_bound_kl(0.01, 0.02) > avg_tv_concentration_bound_kl(0.2, 0.02)


def test_bound_argument_validation():
    with pytest.raises(InvalidInputError):
        expected_regret_bound_tv(-1.0, 0.1)
    with pytest.raises(InvalidInputError):
        expected_regret_bound_tv(1.0, -0.1)
    with pytest.raises(InvalidInputError):
        expected_regret_bound_kl(1.0, 0, 0.1)
    with pytest.raises(InvalidInputError):
        highprob_bound_realized_tv(1.0, 100, 0.0, 0.1)
    with pytest.raises(InvalidInputError):
        highprob_bound_kl(1.0, 100, 1.5, 0.1)
    with pytest.raises(InvalidInputError):
        avg_tv_concentration_bound(0.5, -0.01)


# ---------------------------------------------------------------------------
# Coverage counting
# ---------------------------------------------------------------------------

def synthetic_trace(average: float, avg_tv: float, horizon: int = 10) -> RegretTrace:
    per_round = average  # constant per-round gap gives this running average
    cum = tuple(per_round * (t + 1) for t in range(horizon))
    div = DivergenceTrace(tv_rounds=(avg_tv,) * horizon,
                          kl_rounds=(0.0,) * horizon,
                          avg_tv=avg_tv, avg_kl=0.0)
    return RegretTrace(sequence=(0,) * horizon,
                       losses_learner=(per_round,) * horizon,
                       losses_optimal=(0.0,) * horizon,
                       cumulative=cum, average=average, seed=(0,),
                       divergence=div)


def test_coverage_counts_regret_violations_by_hand():
    # bound value for these inputs is fixed; construct traces on each side
    delta, v_exp = 0.25, 0.02
    bound = highprob_bound_expected_tv(1.0, 10, delta, v_exp)
    traces = [synthetic_trace(bound - 0.01, 0.0),
              synthetic_trace(bound + 0.01, 0.0),
              synthetic_trace(bound + 0.02, 0.0),
              synthetic_trace(bound - 0.02, 0.0)]
    report = empirical_coverage(traces, "highprob-expected-tv", delta,
                                v_expected=v_exp)
    assert report.violation_fraction == pytest.approx(0.5)
    assert report.value == pytest.approx(bound)


def test_coverage_counts_concentration_violations_by_hand():
    delta, v_exp = 0.5, 0.1
    bound = avg_tv_concentration_bound(delta, v_exp)   # 0.2
    traces = [synthetic_trace(0.0, 0.15),
              synthetic_trace(0.0, 0.25),
              synthetic_trace(0.0, 0.2)]               # >= counts as violation
    report = empirical_coverage(traces, "avg-tv-concentration", delta,
                                v_expected=v_exp)
    assert report.violation_fraction == pytest.approx(2 / 3)


def test_coverage_realized_tv_uses_per_path_bounds():
    delta, horizon = 0.1, 10000   # long horizon keeps the tail term small
    t_small = synthetic_trace(0.3, 0.01, horizon)   # tight path bound -> violated
    t_large = synthetic_trace(0.3, 0.5, horizon)    # loose path bound -> satisfied
    report = empirical_coverage([t_small, t_large], "highprob-realized-tv", delta)
    b_small = highprob_bound_realized_tv(1.0, horizon, delta, 0.01)
    b_large = highprob_bound_realized_tv(1.0, horizon, delta, 0.5)
    assert (0.3 >= b_small) and (0.3 < b_large)
    assert report.violation_fraction == pytest.approx(0.5)
    assert report.value == pytest.approx((b_small + b_large) / 2)


def test_coverage_requires_the_right_inputs():
    traces = [synthetic_trace(0.1, 0.05)]
    with pytest.raises(InvalidInputError):
        empirical_coverage(traces, "highprob-expected-tv", 0.1)   # no v_expected
    with pytest.raises(InvalidInputError):
        empirical_coverage(traces, "no-such-kind", 0.1)
    with pytest.raises(InvalidInputError):
        empirical_coverage([], "highprob-expected-tv", 0.1, v_expected=0.1)
    bare = RegretTrace(sequence=(0,), losses_learner=(0.0,),
                       losses_optimal=(0.0,), cumulative=(0.0,),
                       average=0.0, seed=(0,), divergence=None)
    with pytest.raises(InvalidInputError):
        empirical_coverage([bare], "avg-tv-concentration", 0.1, v_expected=0.1)
