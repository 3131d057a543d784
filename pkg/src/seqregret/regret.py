"""Regret simulation and divergence-based regret bounds.

An episode draws one path from the data process while two policies predict
each symbol: the learner (built from a possibly mismatched model) and the
optimal policy (built from the data process itself).  Regret is the running
sum of loss differences; the average regret after the final round is the
headline quantity.

The bound evaluators turn divergence quantities into regret guarantees:

* in expectation, average regret is at most ``L`` times the expected average
  conditional total variation, and at most ``L * sqrt(KL / (2T))`` in terms
  of the joint sequence KL;
* with probability ``1 - delta``, average regret stays below a multiple of
  the realized average conditional total variation plus an
  ``O(sqrt(log(1/delta) / T))`` fluctuation term, with variants in terms of
  the expected total variation or the joint KL;
* the realized average total variation itself concentrates below
  ``V/delta`` and ``sqrt(D / (2 delta))`` with probability ``1 - delta``.

``empirical_coverage`` measures how often simulated episodes violate a
chosen bound, for comparison against its nominal failure probability.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (LossFunction, SequentialDistribution, draw_symbol,
                   episode_key, make_rng)
from .divergences import DivergenceTrace, _kl_arrays, _tv_arrays
from .errors import InvalidInputError
from .predictors import Policy

QUANTILE_LEVELS = (5, 25, 50, 75, 95)


@dataclass(frozen=True)
class RegretTrace:
    """One simulated episode.

    ``cumulative[t-1]`` is the regret summed over the first ``t`` rounds and
    ``average`` is ``cumulative[-1] / T``.  When the episode was run with a
    reference model, ``divergence`` holds the per-round conditional TV/KL
    between the data process and that model along the realized path.
    """

    sequence: tuple[int, ...]
    losses_learner: tuple[float, ...]
    losses_optimal: tuple[float, ...]
    cumulative: tuple[float, ...]
    average: float
    seed: tuple[int, ...]
    divergence: DivergenceTrace | None = None


@dataclass(frozen=True)
class RegretSummary:
    """Per-round aggregate of many episodes' running average regret.

    ``mean[t-1]`` is the across-run mean of ``cumulative[t-1] / t``;
    ``quantiles[q][t-1]`` the corresponding per-round percentile for
    ``q`` in ``QUANTILE_LEVELS``.  Episode ``i`` used stream key
    ``(base_seed, i)``.
    """

    horizon: int
    runs: int
    base_seed: int
    mean: np.ndarray
    quantiles: dict[int, np.ndarray]


@dataclass(frozen=True)
class BoundReport:
    """A bound evaluation: which guarantee, its inputs, and its value."""

    kind: str
    inputs: dict
    value: float
    violation_fraction: float | None = None


def run_episode(p_dist: SequentialDistribution, learner: Policy, optimal: Policy,
                loss: LossFunction, seed: int | Sequence[int],
                divergence_against: SequentialDistribution | None = None) -> RegretTrace:
    """Simulate one episode; deterministic given the seed key.

    Both policies predict before the symbol is revealed.  With
    ``divergence_against`` set, the trace also records the per-round
    conditional TV and KL between ``p_dist`` and that model along the path.
    """
    if loss.num_outcomes != p_dist.alphabet.size:
        raise InvalidInputError("loss outcome count does not match the alphabet")
    rng = make_rng(seed)
    horizon = p_dist.horizon
    p_cur = p_dist.cursor()
    learner_cur = learner.cursor()
    optimal_cur = optimal.cursor()
    q_cur = divergence_against.cursor() if divergence_against is not None else None
    if divergence_against is not None:
        if divergence_against.alphabet.size != p_dist.alphabet.size:
            raise InvalidInputError("reference model lives on a different alphabet")

    table = loss.table
    seq: list[int] = []
    l_learn: list[float] = []
    l_opt: list[float] = []
    cumulative: list[float] = []
    tv_rounds: list[float] = []
    kl_rounds: list[float] = []
    delta = 0.0
    for _ in range(horizon):
        pa = p_cur.probs()
        b = learner_cur.decision()
        b_star = optimal_cur.decision()
        if q_cur is not None:
            qa = q_cur.probs()
            tv_rounds.append(_tv_arrays(pa, qa))
            kl_rounds.append(_kl_arrays(pa, qa))
        z = draw_symbol(rng, pa)
        lb = float(table[b, z])
        lo = float(table[b_star, z])
        delta += lb - lo
        seq.append(z)
        l_learn.append(lb)
        l_opt.append(lo)
        cumulative.append(delta)
        p_cur.advance(z)
        learner_cur.advance(z)
        optimal_cur.advance(z)
        if q_cur is not None:
            q_cur.advance(z)

    div = None
    if q_cur is not None:
        div = DivergenceTrace(tv_rounds=tuple(tv_rounds), kl_rounds=tuple(kl_rounds),
                              avg_tv=sum(tv_rounds) / horizon,
                              avg_kl=sum(kl_rounds) / horizon)
    key = seed if isinstance(seed, tuple) else (int(seed),)
    return RegretTrace(sequence=tuple(seq),
                       losses_learner=tuple(l_learn),
                       losses_optimal=tuple(l_opt),
                       cumulative=tuple(cumulative),
                       average=delta / horizon,
                       seed=tuple(int(k) for k in key),
                       divergence=div)


def _running_average_row(p_dist, learner, optimal, loss, base_seed, index) -> np.ndarray:
    trace = run_episode(p_dist, learner, optimal, loss, episode_key(base_seed, index))
    cum = np.asarray(trace.cumulative)
    return cum / np.arange(1, p_dist.horizon + 1)


def monte_carlo_summary(p_dist: SequentialDistribution, learner: Policy, optimal: Policy,
                        loss: LossFunction, runs: int, base_seed: int,
                        workers: int = 1) -> RegretSummary:
    """Aggregate running average regret over ``runs`` independent episodes.

    Episode ``i`` draws from stream ``(base_seed, i)``, so the output is
    identical for any worker count; rows are reduced in episode order.
    """
    if runs < 1:
        raise InvalidInputError("need at least one run")
    if workers < 1:
        raise InvalidInputError("need at least one worker")
    horizon = p_dist.horizon
    matrix = np.empty((runs, horizon))
    if workers == 1:
        for i in range(runs):
            matrix[i] = _running_average_row(p_dist, learner, optimal, loss, base_seed, i)
    else:
        def job(i: int) -> np.ndarray:
            return _running_average_row(p_dist, learner, optimal, loss, base_seed, i)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for i, row in enumerate(pool.map(job, range(runs))):
                matrix[i] = row
    return summarize_running_averages(matrix, base_seed)


def summarize_running_averages(matrix: np.ndarray, base_seed: int) -> RegretSummary:
    """Summary statistics of a (runs x horizon) running-average-regret matrix."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.size == 0:
        raise InvalidInputError("need a nonempty (runs x horizon) matrix")
    runs, horizon = matrix.shape
    quantiles = {q: np.percentile(matrix, q, axis=0) for q in QUANTILE_LEVELS}
    return RegretSummary(horizon=horizon, runs=runs, base_seed=int(base_seed),
                         mean=matrix.mean(axis=0), quantiles=quantiles)


# ---------------------------------------------------------------------------
# Bound evaluators
# ---------------------------------------------------------------------------

def _check_bound_args(bound: float, horizon: int | None = None,
                      delta: float | None = None) -> None:
    if not (bound > 0 and math.isfinite(bound)):
        raise InvalidInputError("loss bound must be a positive real")
    if horizon is not None and horizon < 1:
        raise InvalidInputError("horizon must be >= 1")
    if delta is not None and not 0.0 < delta <= 1.0:
        raise InvalidInputError(f"delta must lie in (0, 1], got {delta!r}")


def expected_regret_bound_tv(loss_bound: float, v_expected: float) -> float:
    """Expected average regret is at most ``L * V`` (expected average TV)."""
    _check_bound_args(loss_bound)
    if v_expected < 0:
        raise InvalidInputError("expected total variation cannot be negative")
    return loss_bound * v_expected


def expected_regret_bound_kl(loss_bound: float, horizon: int, kl: float) -> float:
    """Expected average regret is at most ``L * sqrt(KL / (2T))``."""
    _check_bound_args(loss_bound, horizon)
    if kl < 0:
        raise InvalidInputError("KL cannot be negative")
    if math.isinf(kl):
        return math.inf
    return loss_bound * math.sqrt(kl / (2.0 * horizon))


def _fluctuation(loss_bound: float, horizon: int, log_term: float) -> float:
    return 2.0 * math.sqrt(2.0) * loss_bound / math.sqrt(horizon) * math.sqrt(log_term)


def highprob_bound_realized_tv(loss_bound: float, horizon: int, delta: float,
                               avg_tv: float) -> float:
    """Regret bound in terms of the realized average conditional TV.

    With probability at least ``1 - delta`` the average regret stays below
    ``2 L avg_tv + 2 sqrt(2) L sqrt(log(1/delta)) / sqrt(T)``; here
    ``avg_tv`` is the path-dependent average of per-round conditional total
    variations, so the bound itself is a random variable evaluated per path.
    """
    _check_bound_args(loss_bound, horizon, delta)
    if avg_tv < 0:
        raise InvalidInputError("average total variation cannot be negative")
    return 2.0 * loss_bound * avg_tv + _fluctuation(loss_bound, horizon,
                                                    math.log(1.0 / delta))


def highprob_bound_expected_tv(loss_bound: float, horizon: int, delta: float,
                               v_expected: float) -> float:
    """High-probability regret bound from the expected average TV.

    With probability at least ``1 - delta`` the average regret stays below
    ``4 L V / delta + 2 sqrt(2) L sqrt(log(2/delta)) / sqrt(T)``.
    """
    _check_bound_args(loss_bound, horizon, delta)
    if v_expected < 0:
        raise InvalidInputError("expected total variation cannot be negative")
    return (4.0 * loss_bound * v_expected / delta
            + _fluctuation(loss_bound, horizon, math.log(2.0 / delta)))


def highprob_bound_kl(loss_bound: float, horizon: int, delta: float, kl: float) -> float:
    """High-probability regret bound from the joint sequence KL.

    With probability at least ``1 - delta`` the average regret stays below
    ``2 L sqrt(KL/T) / sqrt(delta) + 2 sqrt(2) L sqrt(log(2/delta)) / sqrt(T)``.
    """
    _check_bound_args(loss_bound, horizon, delta)
    if kl < 0:
        raise InvalidInputError("KL cannot be negative")
    if math.isinf(kl):
        return math.inf
    return (2.0 * loss_bound * math.sqrt(kl / horizon) / math.sqrt(delta)
            + _fluctuation(loss_bound, horizon, math.log(2.0 / delta)))


def avg_tv_concentration_bound(delta: float, v_expected: float) -> float:
    """The realized average TV stays below ``V / delta`` w.p. ``1 - delta``."""
    _check_bound_args(1.0, None, delta)
    if v_expected < 0:
        raise InvalidInputError("expected total variation cannot be negative")
    return v_expected / delta


def avg_tv_concentration_bound_kl(delta: float, d_expected: float) -> float:
    """The realized average TV stays below ``sqrt(D / (2 delta))`` w.p. ``1 - delta``."""
    _check_bound_args(1.0, None, delta)
    if d_expected < 0:
        raise InvalidInputError("expected average KL cannot be negative")
    if math.isinf(d_expected):
        return math.inf
    return math.sqrt(d_expected / (2.0 * delta))


_COVERAGE_KINDS = ("highprob-realized-tv", "highprob-expected-tv", "highprob-kl",
                   "avg-tv-concentration", "avg-tv-concentration-kl")


def empirical_coverage(traces: Sequence[RegretTrace], kind: str, delta: float,
                       loss_bound: float = 1.0, v_expected: float | None = None,
                       d_expected: float | None = None,
                       kl: float | None = None) -> BoundReport:
    """Fraction of episodes whose realized quantity violates a bound.

    For the regret bounds the violating event is ``average regret >= bound``;
    for the concentration bounds it is ``realized average TV >= bound``.
    Kinds needing per-path divergences require traces recorded with a
    reference model.  The reported fraction is comparable against the
    nominal failure probability ``delta``.
    """
    if len(traces) == 0:
        raise InvalidInputError("need at least one trace")
    horizon = len(traces[0].cumulative)
    _check_bound_args(loss_bound, horizon, delta)

    def need_divergence():
        if any(t.divergence is None for t in traces):
            raise InvalidInputError(f"coverage kind {kind!r} needs traces recorded "
                                    "with a reference model")

    if kind == "highprob-realized-tv":
        need_divergence()
        per_path = [highprob_bound_realized_tv(loss_bound, horizon, delta,
                                               t.divergence.avg_tv) for t in traces]
        violations = sum(1 for t, b in zip(traces, per_path) if t.average >= b)
        value = sum(per_path) / len(per_path)  # bound is per-path; report its mean
        inputs = {"loss_bound": loss_bound, "horizon": horizon, "delta": delta}
    elif kind == "highprob-expected-tv":
        if v_expected is None:
            raise InvalidInputError("kind 'highprob-expected-tv' needs v_expected")
        value = highprob_bound_expected_tv(loss_bound, horizon, delta, v_expected)
        violations = sum(1 for t in traces if t.average >= value)
        inputs = {"loss_bound": loss_bound, "horizon": horizon, "delta": delta,
                  "v_expected": v_expected}
    elif kind == "highprob-kl":
        if kl is None:
            raise InvalidInputError("kind 'highprob-kl' needs kl")
        value = highprob_bound_kl(loss_bound, horizon, delta, kl)
        violations = sum(1 for t in traces if t.average >= value)
        inputs = {"loss_bound": loss_bound, "horizon": horizon, "delta": delta, "kl": kl}
    elif kind == "avg-tv-concentration":
        need_divergence()
        if v_expected is None:
            raise InvalidInputError("kind 'avg-tv-concentration' needs v_expected")
        value = avg_tv_concentration_bound(delta, v_expected)
        violations = sum(1 for t in traces if t.divergence.avg_tv >= value)
        inputs = {"delta": delta, "v_expected": v_expected}
    elif kind == "avg-tv-concentration-kl":
        need_divergence()
        if d_expected is None:
            raise InvalidInputError("kind 'avg-tv-concentration-kl' needs d_expected")
        value = avg_tv_concentration_bound_kl(delta, d_expected)
        violations = sum(1 for t in traces if t.divergence.avg_tv >= value)
        inputs = {"delta": delta, "d_expected": d_expected}
    else:
        raise InvalidInputError(f"unknown coverage kind {kind!r}; "
                                f"one of {_COVERAGE_KINDS}")
    return BoundReport(kind=kind, inputs=inputs, value=value,
                       violation_fraction=violations / len(traces))
