"""Divergence measures: single-round, along paths, and in expectation.

Expected quantities are checked against in-test enumeration oracles that walk
every sequence explicitly with plain Python arithmetic.
"""
import math

import numpy as np
import pytest

from conftest import enumerate_sequences, random_tabular_pair
from seqregret import (CapacityError, InvalidInputError, Pmf,
                       ProductDistribution, expected_quantities,
                       instantaneous_trace, joint_kl, kl_divergence,
                       sequence_prob, tv_distance)


# ---------------------------------------------------------------------------
# Single-round divergences
# ---------------------------------------------------------------------------

def test_tv_basic_values():
    assert tv_distance(Pmf([1.0, 0.0]), Pmf([0.0, 1.0])) == pytest.approx(1.0)
    assert tv_distance(Pmf([0.5, 0.5]), Pmf([0.5, 0.5])) == 0.0
    # half the L1 distance: |0.5-0.25| + |0.5-0.75| = 0.5 -> tv 0.25
    assert tv_distance(Pmf([0.5, 0.5]), Pmf([0.25, 0.75])) == pytest.approx(0.25)


def test_tv_symmetry_and_range(rng):
    for _ in range(100):
        p = Pmf(np.diff(np.sort(np.concatenate([[0, 1], rng.random(3)]))))
        q = Pmf(np.diff(np.sort(np.concatenate([[0, 1], rng.random(3)]))))
        t = tv_distance(p, q)
        assert t == pytest.approx(tv_distance(q, p))
        assert 0.0 <= t <= 1.0


def test_kl_basic_values():
    p = Pmf([0.5, 0.5])
    assert kl_divergence(p, p) == 0.0
    # 0.5*ln(0.5/0.25) + 0.5*ln(0.5/0.75) = 0.5*ln(4/3)
    assert kl_divergence(p, Pmf([0.25, 0.75])) == pytest.approx(0.5 * math.log(4 / 3))


def test_kl_absolute_continuity():
    assert kl_divergence(Pmf([0.5, 0.5]), Pmf([1.0, 0.0])) == math.inf
    # q may put mass where p has none
    assert kl_divergence(Pmf([1.0, 0.0]), Pmf([0.5, 0.5])) == pytest.approx(math.log(2))


def test_divergences_reject_mismatched_sizes():
    with pytest.raises(InvalidInputError):
        tv_distance(Pmf([0.5, 0.5]), Pmf([0.3, 0.3, 0.4]))
    with pytest.raises(InvalidInputError):
        kl_divergence(Pmf([0.5, 0.5]), Pmf([0.3, 0.3, 0.4]))


# ---------------------------------------------------------------------------
# Along a path
# ---------------------------------------------------------------------------

def test_instantaneous_trace_matches_per_round_divergences():
    p = ProductDistribution([Pmf([0.2, 0.8]), Pmf([0.6, 0.4])], horizon=2)
    q = ProductDistribution([Pmf([0.5, 0.5]), Pmf([0.6, 0.4])], horizon=2)
    trace = instantaneous_trace(p, q, (1, 0))
    assert trace.tv_rounds == pytest.approx((0.3, 0.0))
    kl0 = 0.2 * math.log(0.2 / 0.5) + 0.8 * math.log(0.8 / 0.5)
    assert trace.kl_rounds == pytest.approx((kl0, 0.0))
    assert trace.avg_tv == pytest.approx(0.15)
    assert trace.avg_kl == pytest.approx(kl0 / 2)


def test_instantaneous_trace_uses_the_realized_history():
    p, q = random_tabular_pair(1, states=2, horizon=3)
    seq = (1, 0, 1)
    trace = instantaneous_trace(p, q, seq)
    for t in range(3):
        hist = seq[:t]
        assert trace.tv_rounds[t] == pytest.approx(
            tv_distance(p.conditional(hist), q.conditional(hist)))
        assert trace.kl_rounds[t] == pytest.approx(
            kl_divergence(p.conditional(hist), q.conditional(hist)))


# ---------------------------------------------------------------------------
# In expectation
# ---------------------------------------------------------------------------

def brute_force_expectations(p, q):
    """Average conditional divergences in expectation, via raw enumeration."""
    horizon, states = p.horizon, p.alphabet.size
    v_total = d_total = 0.0
    for seq in enumerate_sequences(states, horizon):
        prob = sequence_prob(p, seq)
        if prob == 0.0:
            continue
        tv_sum = kl_sum = 0.0
        for t in range(horizon):
            hist = seq[:t]
            tv_sum += tv_distance(p.conditional(hist), q.conditional(hist))
            kl_sum += kl_divergence(p.conditional(hist), q.conditional(hist))
        v_total += prob * tv_sum / horizon
        d_total += prob * kl_sum / horizon
    return v_total, d_total


def brute_force_joint_kl(p, q):
    total = 0.0
    for seq in enumerate_sequences(p.alphabet.size, p.horizon):
        pp = sequence_prob(p, seq)
        if pp == 0.0:
            continue
        qq = sequence_prob(q, seq)
        if qq == 0.0:
            return math.inf
        total += pp * math.log(pp / qq)
    return total


@pytest.mark.parametrize("seed", [3, 4, 5])
def test_exact_expectations_match_enumeration(seed):
    p, q = random_tabular_pair(seed, states=3, horizon=3)
    got = expected_quantities(p, q, mode="exact")
    want_v, want_d = brute_force_expectations(p, q)
    assert got.v_expected == pytest.approx(want_v, abs=1e-12)
    assert got.d_expected == pytest.approx(want_d, abs=1e-12)
    assert got.mode == "exact"


@pytest.mark.parametrize("seed", [3, 4])
def test_joint_kl_matches_enumeration(seed):
    p, q = random_tabular_pair(seed, states=3, horizon=3)
    assert joint_kl(p, q, mode="exact") == pytest.approx(
        brute_force_joint_kl(p, q), abs=1e-12)


def test_joint_kl_infinite_without_absolute_continuity():
    masses_p = np.array([0.25, 0.25, 0.25, 0.25])
    masses_q = np.array([0.5, 0.5, 0.0, 0.0])      # q misses sequences p visits
    from seqregret import TabularDistribution
    p = TabularDistribution(masses_p, 2, 2)
    q = TabularDistribution(masses_q, 2, 2)
    assert joint_kl(p, q, mode="exact") == math.inf


def test_joint_kl_tensorizes_over_rounds():
    p, q = random_tabular_pair(8, states=2, horizon=4)
    exp = expected_quantities(p, q, mode="exact")
    assert joint_kl(p, q, mode="exact") == pytest.approx(
        p.horizon * exp.d_expected, abs=1e-10)


def test_monte_carlo_expectations_agree_with_exact():
    p, q = random_tabular_pair(6, states=2, horizon=4)
    exact = expected_quantities(p, q, mode="exact")
    mc = expected_quantities(p, q, mode="monte-carlo", samples=4000, seed=17)
    assert mc.samples == 4000
    assert abs(mc.v_expected - exact.v_expected) <= 4 * mc.v_stderr + 1e-6
    assert abs(mc.d_expected - exact.d_expected) <= 4 * mc.d_stderr + 1e-6


def test_monte_carlo_is_seed_deterministic():
    p, q = random_tabular_pair(6, states=2, horizon=3)
    a = expected_quantities(p, q, mode="monte-carlo", samples=200, seed=5)
    b = expected_quantities(p, q, mode="monte-carlo", samples=200, seed=5)
    c = expected_quantities(p, q, mode="monte-carlo", samples=200, seed=6)
    assert a.v_expected == b.v_expected and a.d_expected == b.d_expected
    assert a.v_expected != c.v_expected


def test_exact_mode_refuses_oversized_enumerations():
    p = ProductDistribution(Pmf([0.5, 0.5]), horizon=64)
    q = ProductDistribution(Pmf([0.4, 0.6]), horizon=64)
    with pytest.raises(CapacityError):
        expected_quantities(p, q, mode="exact")
    with pytest.raises(CapacityError):
        joint_kl(p, q, mode="exact")


def test_identical_processes_have_zero_divergence():
    p, _ = random_tabular_pair(9, states=2, horizon=3)
    got = expected_quantities(p, p, mode="exact")
    assert got.v_expected == pytest.approx(0.0, abs=1e-14)
    assert got.d_expected == pytest.approx(0.0, abs=1e-14)
    assert joint_kl(p, p, mode="exact") == pytest.approx(0.0, abs=1e-14)
