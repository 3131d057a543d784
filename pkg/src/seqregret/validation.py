"""Self-contained validation suites with statistical pass criteria.

Each suite exercises one pillar of the package against an independent route:
closed forms against brute-force enumeration, inequalities against random
search for counterexamples, simulated violation frequencies against nominal
failure probabilities (with three-sigma binomial slack), and the mixture
predictive closed form against quadrature and Metropolis estimates.  Every
suite returns a plain dict with a ``passed`` flag and its measured
statistics, so results are easy to report from the command line and assert
in tests.
"""
from __future__ import annotations

import math
import time

import numpy as np

from .core import (TabularDistribution, classification_loss, episode_key,
                   make_rng, Pmf)
from .divergences import expected_quantities, joint_kl, kl_divergence, tv_distance
from .errors import InvalidInputError
from .experiments import run_mixture_experiment
from .impossibility import (build_instance, choose_parameters,
                            closed_form_expected_tv, closed_form_joint_kl,
                            verify_witness)
from .markov import (MarkovDistribution, MarkovParams, McmcConfig,
                     expected_divergences, laplace_mixture_predictive,
                     mcmc_mixture_predictive, quadrature_mixture_predictive)
from .predictors import (Policy, cross_entropy_argmin_check, mismatched_policy,
                         optimal_policy, q_from_policy_classification)
from .regret import empirical_coverage, expected_regret_bound_tv, run_episode


def binomial_slack(delta: float, episodes: int) -> float:
    """Nominal rate plus three binomial standard deviations."""
    return delta + 3.0 * math.sqrt(delta * (1.0 - delta) / episodes)


def tensorization_suite(pairs: int = 50, seed: int = 2024, tol: float = 1e-9) -> dict:
    """Joint sequence KL must equal horizon times the expected per-round KL.

    Random fully supported joint tables keep the model absolutely continuous
    with respect to the data law, so both routes are finite: the direct sum
    over sequences and the prefix-tree accumulation of conditional KLs.
    """
    start = time.perf_counter()
    rng = make_rng((seed, 1))
    worst = 0.0
    for _ in range(pairs):
        s = int(rng.integers(2, 4))
        t = int(rng.integers(2, 7))
        size = s ** t
        p_dist = TabularDistribution(rng.dirichlet(np.ones(size)), s, t)
        q_dist = TabularDistribution(rng.dirichlet(np.ones(size)), s, t)
        direct = joint_kl(p_dist, q_dist, mode="exact")
        accumulated = expected_quantities(p_dist, q_dist, mode="exact")
        worst = max(worst, abs(direct - t * accumulated.d_expected))
    return {"suite": "tensorization", "passed": worst <= tol, "pairs": pairs,
            "max_abs_diff": worst, "tol": tol,
            "seconds": round(time.perf_counter() - start, 3)}


def pinsker_suite(trials: int = 10 ** 5, seed: int = 2024) -> dict:
    """Total variation never exceeds ``sqrt(KL/2)`` on random pmf pairs."""
    start = time.perf_counter()
    rng = make_rng((seed, 2))
    violations = 0
    worst_margin = -math.inf
    for _ in range(trials):
        s = int(rng.integers(2, 7))
        p = Pmf(rng.dirichlet(np.ones(s)))
        q = Pmf(rng.dirichlet(np.ones(s)))
        tv = tv_distance(p, q)
        kl = kl_divergence(p, q)
        if math.isinf(kl):
            continue
        margin = tv - math.sqrt(kl / 2.0)
        worst_margin = max(worst_margin, margin)
        if margin > 0.0:
            violations += 1
    return {"suite": "pinsker", "passed": violations == 0, "trials": trials,
            "violations": violations, "worst_margin": worst_margin,
            "seconds": round(time.perf_counter() - start, 3)}


def impossibility_closed_forms_suite(phi: float = 0.25, psi: float = 0.125,
                                     horizon: int = 9, tol: float = 1e-9) -> dict:
    """Closed forms of the lower-bound instance against full enumeration."""
    start = time.perf_counter()
    inst = build_instance(phi, psi, horizon)
    enum = expected_quantities(inst.p_dist, inst.q_dist, mode="exact")
    kl_direct = joint_kl(inst.p_dist, inst.q_dist, mode="exact")
    dv = abs(enum.v_expected - closed_form_expected_tv(phi, psi, horizon))
    dk = abs(kl_direct - closed_form_joint_kl(phi, psi, horizon))
    dd = abs(enum.joint_kl - closed_form_joint_kl(phi, psi, horizon))
    worst = max(dv, dk, dd)
    return {"suite": "impossibility-closed-forms", "passed": worst <= tol,
            "phi": phi, "psi": psi, "horizon": horizon,
            "v_diff": dv, "kl_diff": dk, "kl_route_diff": dd, "tol": tol,
            "seconds": round(time.perf_counter() - start, 3)}


def witness_suite(c: float = 1.0, alpha: float = 0.5, beta: float = 0.25,
                  episodes: int = 10 ** 4, base_seed: int = 0) -> dict:
    """Witness search for rates with remainder ``1/sqrt(T)``, then simulation.

    The chosen instance must attain regret above both rates with probability
    exactly ``delta_n``, and the simulated frequency must sit within three
    binomial standard deviations of it.
    """
    start = time.perf_counter()
    witness = choose_parameters(c, alpha, beta, lambda t, d: 1.0 / math.sqrt(t))
    ver = verify_witness(witness, episodes=episodes, base_seed=base_seed)
    return {"suite": "witness", "passed": bool(ver.passed), "n": witness.n,
            "delta_n": witness.delta_n, "horizon": witness.horizon,
            "r1": witness.r1, "r2": witness.r2,
            "exact_probability": ver.exact_probability,
            "frequency_r1": ver.frequency_r1, "frequency_r2": ver.frequency_r2,
            "three_sigma": ver.three_sigma, "episodes": episodes,
            "seconds": round(time.perf_counter() - start, 3)}


def _random_markov_pair(rng, states: int):
    p = MarkovParams(1, states, rng.dirichlet(np.ones(states), size=states))
    q = MarkovParams(1, states, rng.dirichlet(np.ones(states), size=states))
    return p, q


def coverage_traces(pairs: int = 5, episodes: int = 10 ** 4, horizon: int = 50,
                    states: int = 3, seed: int = 2024) -> list[dict]:
    """Simulated episode batches for random (data, model) Markov pairs.

    Every batch records per-episode average regret and realized divergences
    plus the pair's exact expected quantities, which stay computable at this
    horizon through the context-distribution recursion.
    """
    rng = make_rng((seed, 3))
    loss = classification_loss(states)
    batches = []
    for pair_idx in range(pairs):
        p_params, q_params = _random_markov_pair(rng, states)
        p_dist = MarkovDistribution(p_params, horizon)
        q_dist = MarkovDistribution(q_params, horizon, tag="markov-model")
        learner = mismatched_policy(q_dist, loss)
        optimal = optimal_policy(p_dist, loss)
        exact = expected_divergences(p_params, q_params, horizon)
        traces = [run_episode(p_dist, learner, optimal, loss,
                              episode_key(seed + pair_idx, i),
                              divergence_against=q_dist)
                  for i in range(episodes)]
        batches.append({"pair": pair_idx, "traces": traces, "exact": exact,
                        "loss_bound": loss.bound, "horizon": horizon})
    return batches


def coverage_suite(deltas=(0.01, 0.05, 0.1, 0.25), pairs: int = 5,
                   episodes: int = 10 ** 4, horizon: int = 50, states: int = 3,
                   seed: int = 2024, batches: list[dict] | None = None,
                   kinds=("highprob-realized-tv", "highprob-expected-tv",
                          "highprob-kl", "avg-tv-concentration",
                          "avg-tv-concentration-kl")) -> dict:
    """Violation frequencies of every bound family against nominal rates.

    For each pair and each failure probability, the empirical violation
    fraction must stay at or below the nominal rate plus three binomial
    standard deviations.
    """
    start = time.perf_counter()
    if batches is None:
        batches = coverage_traces(pairs, episodes, horizon, states, seed)
    rows = []
    passed = True
    for batch in batches:
        exact = batch["exact"]
        for delta in deltas:
            slack = binomial_slack(delta, len(batch["traces"]))
            for kind in kinds:
                report = empirical_coverage(
                    batch["traces"], kind, delta, loss_bound=batch["loss_bound"],
                    v_expected=exact.v_expected, d_expected=exact.d_expected,
                    kl=exact.joint_kl)
                ok = report.violation_fraction <= slack
                passed = passed and ok
                rows.append({"pair": batch["pair"], "kind": kind, "delta": delta,
                             "violation_fraction": report.violation_fraction,
                             "slack": slack, "ok": ok})
    worst = max((r["violation_fraction"] - r["delta"] for r in rows), default=0.0)
    return {"suite": "coverage", "passed": passed, "pairs": len(batches),
            "episodes": episodes, "horizon": horizon, "deltas": list(deltas),
            "kinds": list(kinds), "worst_excess": worst, "checks": rows,
            "seconds": round(time.perf_counter() - start, 3)}


def quadrature_suite(cases: int = 20, seed: int = 2024, tol: float = 1e-4,
                     points: int = 10 ** 4) -> dict:
    """Closed-form mixture predictive against midpoint-rule integration."""
    start = time.perf_counter()
    rng = make_rng((seed, 4))
    worst = 0.0
    for _ in range(cases):
        length = int(rng.integers(0, 7))
        hist = rng.integers(0, 2, size=length).tolist()
        closed = laplace_mixture_predictive(1, 2, hist).probs
        quad = quadrature_mixture_predictive(1, 2, hist, points=points).probs
        worst = max(worst, float(np.abs(closed - quad).max()))
    return {"suite": "quadrature", "passed": worst <= tol, "cases": cases,
            "max_entry_diff": worst, "tol": tol, "points": points,
            "seconds": round(time.perf_counter() - start, 3)}


def mcmc_suite(cases: int = 20, chain_seeds=(1, 2, 3), seed: int = 2024,
               tol: float = 0.02, config: McmcConfig | None = None) -> dict:
    """Metropolis mixture predictive within total variation of the closed form."""
    start = time.perf_counter()
    rng = make_rng((seed, 5))
    base = config if config is not None else McmcConfig()
    worst = 0.0
    acc = []
    for _ in range(cases):
        memory = int(rng.integers(1, 3))
        length = int(rng.integers(0, 7))
        hist = rng.integers(0, 2, size=length).tolist()
        closed = laplace_mixture_predictive(memory, 2, hist)
        for cs in chain_seeds:
            cfg = McmcConfig(chain_length=base.chain_length, burn_in=base.burn_in,
                             thinning=base.thinning,
                             proposal_scale=base.proposal_scale, seed=cs)
            result = mcmc_mixture_predictive(memory, 2, hist, cfg)
            worst = max(worst, tv_distance(result.pmf, closed))
            acc.append(result.acceptance_rate)
    return {"suite": "mcmc", "passed": worst <= tol, "cases": cases,
            "chain_seeds": list(chain_seeds), "max_tv": worst, "tol": tol,
            "acceptance_min": min(acc), "acceptance_max": max(acc),
            "seconds": round(time.perf_counter() - start, 3)}


def roundtrip_suite(policies: int = 100, depth: int = 3, states: int = 3,
                    ce_trials: int = 1000, seed: int = 2024) -> dict:
    """Policy -> process -> policy recovery, plus cross-entropy selection.

    Every random policy must be recovered exactly on all histories up to the
    construction depth, and among random candidate pmfs the data pmf itself
    must always win the cross-entropy comparison.
    """
    start = time.perf_counter()
    rng = make_rng((seed, 6))

    def all_histories(max_len):
        hists = [()]
        level = [()]
        for _ in range(max_len):
            level = [h + (z,) for h in level for z in range(states)]
            hists.extend(level)
        return hists

    hists = all_histories(depth)
    loss = classification_loss(states)
    mismatches = 0
    for _ in range(policies):
        table = {h: int(rng.integers(0, states)) for h in hists}
        policy = Policy(lambda h, tab=table: tab.get(h, 0), "random table policy")
        q = float(rng.uniform(1.0 / states + 0.05, 0.95))
        model = q_from_policy_classification(policy, q, 1.0 - q, states,
                                             horizon=depth + 1)
        recovered = mismatched_policy(model, loss)
        if any(recovered.decide(h) != table[h] for h in hists):
            mismatches += 1

    ce_hits = 0
    for _ in range(ce_trials):
        s = int(rng.integers(2, 5))
        p = Pmf(rng.dirichlet(np.ones(s)))
        candidates = [Pmf(rng.dirichlet(np.ones(s))) for _ in range(4)]
        pos = int(rng.integers(0, 5))
        candidates.insert(pos, p)
        if cross_entropy_argmin_check(p, candidates) == pos:
            ce_hits += 1

    passed = mismatches == 0 and ce_hits == ce_trials
    return {"suite": "roundtrip", "passed": passed, "policies": policies,
            "policy_mismatches": mismatches, "ce_trials": ce_trials,
            "ce_hits": ce_hits, "seconds": round(time.perf_counter() - start, 3)}


def figure_suite(runs: int = 500, horizon: int = 2000, memory: int = 3,
                 states: int = 2, base_seed: int = 7,
                 early_round: int | None = None) -> dict:
    """Desk-scale regret-decay experiment with structural checks.

    The learner's mean average regret must fall by at least a factor of 3
    between an early round and the final round, the 95th percentile curve
    must sit weakly above the mean at every round, and the final mean must
    respect the expected-TV regret bound evaluated with the Monte Carlo
    estimate of the expected average total variation (slack: three combined
    standard errors).
    """
    start = time.perf_counter()
    if early_round is None:
        early_round = max(1, horizon // 20)
    if not 1 <= early_round < horizon:
        raise InvalidInputError("early_round must lie inside the horizon")
    result = run_mixture_experiment(memory, states, horizon, runs, base_seed,
                                    predictor="exact", track_divergence=True)
    summary = result.summary
    mean_final = float(summary.mean[-1])
    mean_early = float(summary.mean[early_round - 1])
    decay_ok = mean_final * 3.0 <= mean_early

    gap = summary.quantiles[95] - summary.mean
    quantile_ok = bool(np.all(gap >= -1e-12))

    # Expected-TV regret bound with the expected average TV estimated by
    # Monte Carlo; the comparison slack is three standard errors of the
    # per-run gap between realized regret and the bound estimate.
    v_mc = float(result.avg_tv.mean())
    bound = expected_regret_bound_tv(1.0, v_mc)
    per_run_gap = result.final_averages - result.avg_tv
    se_combined = float(per_run_gap.std(ddof=1) / math.sqrt(runs))
    bound_ok = mean_final < bound + 3.0 * se_combined

    return {"suite": "figure", "passed": decay_ok and quantile_ok and bound_ok,
            "runs": runs, "horizon": horizon, "memory": memory, "states": states,
            "base_seed": base_seed, "early_round": early_round,
            "mean_early": mean_early, "mean_final": mean_final,
            "decay_ok": decay_ok, "quantile_ok": quantile_ok,
            "v_monte_carlo": v_mc, "bound": bound, "se_combined": se_combined,
            "bound_ok": bound_ok,
            "seconds": round(time.perf_counter() - start, 3)}
