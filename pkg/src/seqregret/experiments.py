"""End-to-end experiment driver: unknown Markov process vs mixture learner.

One experiment draws (or receives) a ground-truth transition tensor, builds
the optimal policy from it and the learner policy from a mixture predictive
that knows only the memory length and state count, then simulates many
episodes and aggregates running average regret.  This is the workload behind
the ``simulate`` command.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import AUX_STREAM, SequentialDistribution, classification_loss, episode_key
from .errors import InvalidInputError
from .markov import (LaplaceMixtureDistribution, MarkovDistribution, MarkovParams,
                     McmcConfig, McmcMixtureDistribution, sample_theta)
from .predictors import mismatched_policy, optimal_policy
from .regret import RegretSummary, run_episode, summarize_running_averages


@dataclass(frozen=True)
class MixtureExperimentResult:
    """Aggregated experiment output.

    ``final_averages[i]`` is run ``i``'s average regret after the last round.
    ``avg_tv``/``avg_kl`` are the per-run realized average conditional
    divergences between the data process and the learner's model (None when
    divergence tracking was off), and ``theta`` is the shared ground truth
    (None when each run drew its own).
    """

    summary: RegretSummary
    final_averages: np.ndarray
    avg_tv: np.ndarray | None
    avg_kl: np.ndarray | None
    theta: MarkovParams | None
    predictor: str


def _learner_model(predictor: str, memory: int, states: int, horizon: int,
                   mcmc: McmcConfig | None) -> SequentialDistribution:
    if predictor == "exact":
        return LaplaceMixtureDistribution(memory, states, horizon)
    if predictor == "mcmc":
        return McmcMixtureDistribution(memory, states, horizon,
                                       mcmc if mcmc is not None else McmcConfig())
    raise InvalidInputError(f"unknown predictor {predictor!r}; use 'exact' or 'mcmc'")


def run_mixture_experiment(memory: int, states: int, horizon: int, runs: int,
                           base_seed: int, predictor: str = "exact",
                           mcmc: McmcConfig | None = None,
                           theta: MarkovParams | None = None,
                           resample_theta: bool = False, workers: int = 1,
                           track_divergence: bool = False) -> MixtureExperimentResult:
    """Simulate the mixture learner against a Markov ground truth.

    Episode ``i`` samples on stream ``(base_seed, i)``.  With ``theta`` unset
    the shared ground truth is drawn on an auxiliary stream of ``base_seed``;
    with ``resample_theta`` every run draws its own instead.  Results are
    identical for any ``workers`` value because every random draw is keyed by
    the run index.
    """
    if runs < 1:
        raise InvalidInputError("need at least one run")
    if theta is not None and (theta.memory != memory or theta.states != states):
        raise InvalidInputError("theta dimensions do not match the experiment")
    if theta is not None and resample_theta:
        raise InvalidInputError("a fixed theta and resampling are mutually exclusive")

    loss = classification_loss(states)
    model = _learner_model(predictor, memory, states, horizon, mcmc)
    learner = mismatched_policy(model, loss)

    shared_theta = theta
    if shared_theta is None and not resample_theta:
        shared_theta = sample_theta(memory, states, (base_seed, AUX_STREAM))
    shared_p = MarkovDistribution(shared_theta, horizon) if shared_theta is not None else None
    shared_optimal = optimal_policy(shared_p, loss) if shared_p is not None else None

    def one_run(i: int):
        if shared_p is not None:
            p_dist, opt = shared_p, shared_optimal
        else:
            th = sample_theta(memory, states, (base_seed, AUX_STREAM + 1 + i))
            p_dist = MarkovDistribution(th, horizon)
            opt = optimal_policy(p_dist, loss)
        trace = run_episode(p_dist, learner, opt, loss, episode_key(base_seed, i),
                            divergence_against=model if track_divergence else None)
        row = np.asarray(trace.cumulative) / np.arange(1, horizon + 1)
        if track_divergence:
            return row, trace.divergence.avg_tv, trace.divergence.avg_kl
        return row, None, None

    matrix = np.empty((runs, horizon))
    avg_tv = np.empty(runs) if track_divergence else None
    avg_kl = np.empty(runs) if track_divergence else None
    if workers == 1:
        results = map(one_run, range(runs))
    else:
        pool = ThreadPoolExecutor(max_workers=workers)
        results = pool.map(one_run, range(runs))
    for i, (row, tv, kl) in enumerate(results):
        matrix[i] = row
        if track_divergence:
            avg_tv[i] = tv
            avg_kl[i] = kl
    if workers != 1:
        pool.shutdown()

    return MixtureExperimentResult(summary=summarize_running_averages(matrix, base_seed),
                                   final_averages=matrix[:, -1].copy(),
                                   avg_tv=avg_tv, avg_kl=avg_kl,
                                   theta=shared_theta, predictor=predictor)
