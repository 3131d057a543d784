"""Distances between processes, per round and in expectation.

Two views of how far a predicting distribution ``Q`` sits from the data
distribution ``P``:

* along one realized path: the total-variation distance and KL divergence
  between the two conditional next-symbol laws at every round, plus their
  running averages;
* in expectation over paths drawn from ``P``: the expected average
  total-variation distance, the expected average conditional KL, and the KL
  divergence between the two joint sequence laws.

Exact expectations enumerate the prefix tree (feasible while ``S**T`` stays
under ``EXACT_ENUMERATION_CAP``); the Monte Carlo mode averages over sampled
paths and reports standard errors.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Pmf, SequentialDistribution, episode_key, make_rng, draw_symbol
from .errors import CapacityError, InvalidInputError

EXACT_ENUMERATION_CAP = 10 ** 6


def _check_pair(p: Pmf, q: Pmf) -> tuple[np.ndarray, np.ndarray]:
    if len(p) != len(q):
        raise InvalidInputError(f"pmf sizes differ: {len(p)} vs {len(q)}")
    return p.probs, q.probs


def tv_distance(p: Pmf, q: Pmf) -> float:
    """Total-variation distance: half the L1 distance between mass functions.

    Equals the largest difference in probability the two assign to any event.
    """
    pa, qa = _check_pair(p, q)
    return _tv_arrays(pa, qa)


def _tv_arrays(pa: np.ndarray, qa: np.ndarray) -> float:
    return 0.5 * float(np.abs(pa - qa).sum())


def kl_divergence(p: Pmf, q: Pmf) -> float:
    """KL divergence in nats; +inf when p puts mass where q puts none."""
    pa, qa = _check_pair(p, q)
    return _kl_arrays(pa, qa)


def _kl_arrays(pa: np.ndarray, qa: np.ndarray) -> float:
    mask = pa > 0.0
    if np.any(qa[mask] == 0.0):
        return math.inf
    pm = pa[mask]
    val = float(np.sum(pm * np.log(pm / qa[mask])))
    # Exact KL is nonnegative; tiny negative values are rounding noise.
    return val if val > 0.0 else 0.0


@dataclass(frozen=True)
class DivergenceTrace:
    """Per-round divergences between conditional laws along one path.

    ``tv_rounds[t-1]`` and ``kl_rounds[t-1]`` compare the round-``t``
    conditionals of the two processes given the path prefix; ``avg_tv`` and
    ``avg_kl`` are their averages over the horizon.
    """

    tv_rounds: tuple[float, ...]
    kl_rounds: tuple[float, ...]
    avg_tv: float
    avg_kl: float


@dataclass(frozen=True)
class ExpectedDivergences:
    """Path-averaged divergences in expectation under the data distribution.

    ``v_expected`` is the expected average per-round total variation,
    ``d_expected`` the expected average per-round KL, and ``joint_kl`` the KL
    divergence between the two length-``T`` sequence laws.  ``mode`` records
    how the values were obtained; the ``*_stderr`` fields are Monte Carlo
    standard errors (None in exact mode).
    """

    v_expected: float
    d_expected: float
    joint_kl: float
    mode: str
    samples: int = 0
    v_stderr: float | None = None
    d_stderr: float | None = None
    kl_stderr: float | None = None


def _check_compatible(p_dist: SequentialDistribution, q_dist: SequentialDistribution) -> None:
    if p_dist.alphabet.size != q_dist.alphabet.size:
        raise InvalidInputError("processes live on different alphabets")
    if p_dist.horizon != q_dist.horizon:
        raise InvalidInputError("processes have different horizons")


def instantaneous_trace(p_dist: SequentialDistribution, q_dist: SequentialDistribution,
                        sequence: Sequence[int]) -> DivergenceTrace:
    """Round-by-round conditional TV and KL along a full sequence."""
    _check_compatible(p_dist, q_dist)
    seq = p_dist._check_history(sequence, for_kernel=False)
    if len(seq) != p_dist.horizon:
        raise InvalidInputError("trace needs a full-length sequence")
    p_cur, q_cur = p_dist.cursor(), q_dist.cursor()
    tv_rounds, kl_rounds = [], []
    for z in seq:
        pa, qa = p_cur.probs(), q_cur.probs()
        tv_rounds.append(_tv_arrays(pa, qa))
        kl_rounds.append(_kl_arrays(pa, qa))
        p_cur.advance(z)
        q_cur.advance(z)
    horizon = len(seq)
    return DivergenceTrace(tv_rounds=tuple(tv_rounds),
                           kl_rounds=tuple(kl_rounds),
                           avg_tv=sum(tv_rounds) / horizon,
                           avg_kl=sum(kl_rounds) / horizon)


def _require_enumerable(dist: SequentialDistribution) -> None:
    if dist.alphabet.size ** dist.horizon > EXACT_ENUMERATION_CAP:
        raise CapacityError(
            f"exact mode would enumerate {dist.alphabet.size}**{dist.horizon} sequences, "
            f"above the cap of {EXACT_ENUMERATION_CAP}; use mode='monte-carlo'")


def expected_quantities(p_dist: SequentialDistribution, q_dist: SequentialDistribution,
                        mode: str = "exact", samples: int = 1000,
                        seed: int = 0) -> ExpectedDivergences:
    """Expected average conditional TV/KL and the joint sequence KL.

    Exact mode walks the prefix tree of ``p_dist``, pruning zero-probability
    branches.  Monte Carlo mode averages path quantities over ``samples``
    sequences drawn from ``p_dist`` on streams ``(seed, i)`` and reports the
    sample standard error of each mean; consumers comparing against Monte
    Carlo values should widen tolerances by a multiple of those errors.
    """
    _check_compatible(p_dist, q_dist)
    if mode == "exact":
        _require_enumerable(p_dist)
        horizon = p_dist.horizon
        ev = 0.0       # sum over rounds of E[conditional TV]
        ed = 0.0       # sum over rounds of E[conditional KL]
        d_infinite = False

        # Iterative depth-first walk over prefixes with P-probability > 0.
        stack = [((), 1.0)]
        while stack:
            prefix, mass = stack.pop()
            pa = p_dist._kernel(prefix).probs
            qa = q_dist._kernel(prefix).probs
            ev += mass * _tv_arrays(pa, qa)
            d_step = _kl_arrays(pa, qa)
            if math.isinf(d_step):
                d_infinite = True
            else:
                ed += mass * d_step
            if len(prefix) + 1 < horizon:
                for z in range(p_dist.alphabet.size):
                    pz = float(pa[z])
                    if pz > 0.0:
                        stack.append((prefix + (z,), mass * pz))
        d_expected = math.inf if d_infinite else ed / horizon
        return ExpectedDivergences(v_expected=ev / horizon,
                                   d_expected=d_expected,
                                   joint_kl=math.inf if d_infinite else ed,
                                   mode="exact")
    if mode == "monte-carlo":
        if samples < 2:
            raise InvalidInputError("monte-carlo mode needs at least 2 samples")
        vs = np.empty(samples)
        ds = np.empty(samples)
        horizon = p_dist.horizon
        for i in range(samples):
            rng = make_rng(episode_key(seed, i))
            p_cur, q_cur = p_dist.cursor(), q_dist.cursor()
            v_sum = 0.0
            d_sum = 0.0
            for _ in range(horizon):
                pa, qa = p_cur.probs(), q_cur.probs()
                v_sum += _tv_arrays(pa, qa)
                d_sum += _kl_arrays(pa, qa)
                z = draw_symbol(rng, pa)
                p_cur.advance(z)
                q_cur.advance(z)
            vs[i] = v_sum / horizon
            ds[i] = d_sum / horizon
        v_se = float(vs.std(ddof=1) / math.sqrt(samples))
        if np.any(np.isinf(ds)):
            d_mean, d_se, kl_se = math.inf, None, None
            kl_mean = math.inf
        else:
            d_mean = float(ds.mean())
            d_se = float(ds.std(ddof=1) / math.sqrt(samples))
            kl_mean = horizon * d_mean
            kl_se = horizon * d_se
        return ExpectedDivergences(v_expected=float(vs.mean()),
                                   d_expected=d_mean,
                                   joint_kl=kl_mean,
                                   mode="monte-carlo", samples=samples,
                                   v_stderr=v_se, d_stderr=d_se, kl_stderr=kl_se)
    raise InvalidInputError(f"unknown mode {mode!r}; use 'exact' or 'monte-carlo'")


def joint_kl(p_dist: SequentialDistribution, q_dist: SequentialDistribution,
             mode: str = "exact", samples: int = 1000, seed: int = 0) -> float:
    """KL divergence between the joint laws of the two full sequences.

    Exact mode sums ``P(seq) * log(P(seq)/Q(seq))`` directly over all
    sequences with ``P(seq) > 0`` (zero-probability branches pruned), and is
    +inf exactly when some such sequence has ``Q(seq) = 0``.
    """
    _check_compatible(p_dist, q_dist)
    if mode == "exact":
        _require_enumerable(p_dist)
        horizon = p_dist.horizon
        total = 0.0
        stack = [((), 1.0, 1.0)]
        while stack:
            prefix, p_mass, q_mass = stack.pop()
            if len(prefix) == horizon:
                if q_mass == 0.0:
                    return math.inf
                total += p_mass * math.log(p_mass / q_mass)
                continue
            pa = p_dist._kernel(prefix).probs
            qa = q_dist._kernel(prefix).probs
            for z in range(p_dist.alphabet.size):
                pz = float(pa[z])
                if pz > 0.0:
                    stack.append((prefix + (z,), p_mass * pz, q_mass * float(qa[z])))
        return total if total > 0.0 else 0.0
    if mode == "monte-carlo":
        est = expected_quantities(p_dist, q_dist, mode="monte-carlo",
                                  samples=samples, seed=seed)
        return est.joint_kl
    raise InvalidInputError(f"unknown mode {mode!r}; use 'exact' or 'monte-carlo'")
