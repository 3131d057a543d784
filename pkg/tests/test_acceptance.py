"""Acceptance gate: every release-blocking criterion at its stated scale.

Each test runs one criterion end to end through the validation suites and
prints a single PASS/FAIL line (visible with ``pytest -s``; on failure the
line appears in the captured output).  Scales and tolerances are the
release-blocking ones, so this module dominates the suite's runtime: the
two coverage criteria share one 50,000-episode trace set through a
session-scoped fixture, and the decay experiment runs 500 episodes of 2,000
rounds.
"""
import pytest

from seqregret import validation

EPISODES = 10 ** 4
COVERAGE_DELTAS = (0.01, 0.05, 0.1, 0.25)


def report(name: str, passed: bool, detail: str) -> None:
    print(f"ACCEPTANCE {name}: {'PASS' if passed else 'FAIL'} ({detail})")


@pytest.fixture(scope="session")
def coverage_batches():
    # 5 random (data, model) pairs over 3 states at horizon 50, 10^4 episodes
    # each, with exact expected divergences; shared by both coverage criteria
    return validation.coverage_traces(pairs=5, episodes=EPISODES, horizon=50,
                                      states=3, seed=2024)


def test_acceptance_joint_kl_tensorization():
    result = validation.tensorization_suite(pairs=50, tol=1e-9)
    report("joint-kl-tensorization", result["passed"],
           f"max |joint_kl - T*avg_kl| = {result['max_abs_diff']:.3g} over "
           f"{result['pairs']} pairs, tol 1e-9")
    assert result["passed"]
    assert result["pairs"] == 50 and result["max_abs_diff"] <= 1e-9


def test_acceptance_tv_kl_inequality():
    result = validation.pinsker_suite(trials=10 ** 5)
    report("tv-kl-inequality", result["passed"],
           f"{result['violations']} violations of tv <= sqrt(kl/2) in "
           f"{result['trials']} random pairs")
    assert result["passed"]
    assert result["trials"] == 10 ** 5 and result["violations"] == 0


def test_acceptance_lower_bound_instance_closed_forms():
    result = validation.impossibility_closed_forms_suite(phi=0.25, psi=0.125,
                                                         horizon=9, tol=1e-9)
    report("lower-bound-closed-forms", result["passed"],
           f"enumeration at phi=0.25 psi=0.125 T=9: v_diff = {result['v_diff']:.3g}, "
           f"kl_diff = {result['kl_diff']:.3g}, tol 1e-9")
    assert result["passed"]
    assert result["v_diff"] <= 1e-9 and result["kl_diff"] <= 1e-9


def test_acceptance_rate_refutation_witness():
    result = validation.witness_suite(c=1.0, alpha=0.5, beta=0.25,
                                      episodes=EPISODES, base_seed=0)
    report("rate-refutation-witness", result["passed"],
           f"n = {result['n']}, horizon = {result['horizon']}, exceedance "
           f"frequency {result['frequency_r1']:.4f} vs exact {result['delta_n']} "
           f"within 3 sigma = {result['three_sigma']:.4f} over {EPISODES} episodes")
    assert result["passed"]


def test_acceptance_divergence_concentration_coverage(coverage_batches):
    result = validation.coverage_suite(
        deltas=COVERAGE_DELTAS, episodes=EPISODES, batches=coverage_batches,
        kinds=("avg-tv-concentration", "avg-tv-concentration-kl"))
    worst = max(r["violation_fraction"] / r["delta"] for r in result["checks"])
    report("divergence-concentration-coverage", result["passed"],
           f"violation fraction <= delta + 3 binomial sigma on every "
           f"(pair, delta, kind) cell; worst fraction/delta = {worst:.3f}")
    assert result["passed"]
    for row in result["checks"]:
        assert row["ok"], row


def test_acceptance_high_probability_regret_coverage(coverage_batches):
    result = validation.coverage_suite(
        deltas=COVERAGE_DELTAS, episodes=EPISODES, batches=coverage_batches,
        kinds=("highprob-realized-tv", "highprob-expected-tv", "highprob-kl"))
    report("high-probability-regret-coverage", result["passed"],
           f"violation fraction <= delta + 3 binomial sigma on every "
           f"(pair, delta, kind) cell over {EPISODES} episodes, "
           f"deltas {COVERAGE_DELTAS}")
    assert result["passed"]
    for row in result["checks"]:
        assert row["ok"], row


def test_acceptance_mixture_predictive_oracles():
    quad = validation.quadrature_suite(cases=20, tol=1e-4, points=10 ** 4)
    mcmc = validation.mcmc_suite(cases=20, chain_seeds=(1, 2, 3), tol=0.02)
    passed = quad["passed"] and mcmc["passed"]
    report("mixture-predictive-oracles", passed,
           f"closed form vs 10^4-point quadrature: max entry diff = "
           f"{quad['max_entry_diff']:.3g} (tol 1e-4); vs Metropolis chains: "
           f"max tv = {mcmc['max_tv']:.4f} (tol 0.02) over 20 histories x 3 seeds")
    assert quad["passed"] and quad["max_entry_diff"] <= 1e-4
    assert mcmc["passed"] and mcmc["max_tv"] <= 0.02


def test_acceptance_regret_decay_experiment():
    result = validation.figure_suite(runs=500, horizon=2000, memory=3, states=2,
                                     base_seed=7)
    report("regret-decay-experiment", result["passed"],
           f"mean average regret {result['mean_early']:.4f} @t=100 -> "
           f"{result['mean_final']:.5f} @t=2000 (need 3x drop: "
           f"{result['decay_ok']}); 95% quantile >= mean everywhere: "
           f"{result['quantile_ok']}; final mean vs expected-tv bound "
           f"{result['bound']:.4f} + 3se: {result['bound_ok']}")
    assert result["early_round"] == 100
    assert result["decay_ok"] and result["quantile_ok"] and result["bound_ok"]
    assert result["passed"]


def test_acceptance_policy_round_trip():
    result = validation.roundtrip_suite(policies=100, depth=3, states=3,
                                        ce_trials=1000)
    recovered = result["policies"] - result["policy_mismatches"]
    report("policy-round-trip", result["passed"],
           f"{recovered}/100 policies reproduced exactly through their "
           f"induced process; cross-entropy selected the true pmf "
           f"{result['ce_hits']}/1000 times")
    assert recovered == 100
    assert result["ce_hits"] == 1000
    assert result["passed"]
