"""Memory-m Markov processes and Bayes mixture prediction.

A memory-``m`` process over ``S`` symbols draws each symbol from a row of a
transition tensor indexed by the last ``m`` symbols.  Histories shorter than
``m`` are left-padded with symbol 0, i.e. the rounds before the start behave
as if the process had been sitting in the first state.

For a learner that knows only ``m`` and ``S``, the Bayes-optimal predictive
under a uniform prior over all transition tensors is the posterior-weighted
average of kernels.  With the uniform (flat Dirichlet, add-one) prior this
has a closed form in the transition counts; ``laplace_mixture_predictive``
implements it, ``quadrature_mixture_predictive`` recomputes the defining
integral numerically so the closed form can be validated against an
independent route, and ``mcmc_mixture_predictive`` approximates the same
integral by a random-walk Metropolis chain over the parameter set, which is
how one would do it for priors without closed-form posteriors.

``expected_divergences`` computes exact expected path divergences between two
Markov processes by propagating the distribution over contexts, which stays
tractable at horizons where full sequence enumeration is impossible.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (Alphabet, KernelCursor, Pmf, SequentialDistribution,
                   make_rng, PMF_RENORM_ATOL, _NEG_CLAMP)
from .divergences import ExpectedDivergences, _kl_arrays, _tv_arrays
from .errors import CapacityError, InvalidInputError

_PAD_SYMBOL = 0


def _check_memory_states(memory: int, states: int) -> tuple[int, int]:
    if not isinstance(memory, (int, np.integer)) or memory < 1:
        raise InvalidInputError(f"memory must be an integer >= 1, got {memory!r}")
    if not isinstance(states, (int, np.integer)) or states < 2:
        raise InvalidInputError(f"need at least 2 states, got {states!r}")
    return int(memory), int(states)


def context_of(history: Sequence[int], memory: int) -> tuple[int, ...]:
    """Last ``memory`` symbols, left-padded with symbol 0."""
    h = tuple(history)
    if len(h) >= memory:
        return h[len(h) - memory:]
    return (_PAD_SYMBOL,) * (memory - len(h)) + h


def context_index(history: Sequence[int], memory: int, states: int) -> int:
    """Lexicographic rank of the padded context, oldest symbol most significant."""
    idx = 0
    for z in context_of(history, memory):
        idx = idx * states + z
    return idx


@dataclass(frozen=True)
class MarkovParams:
    """Transition tensor: one next-symbol row per length-``memory`` context.

    ``transitions`` has shape ``(states**memory, states)``; rows are indexed
    by the lexicographic rank of the context and must each sum to 1 (inputs
    within 1e-9 are renormalized).
    """

    memory: int
    states: int
    transitions: np.ndarray

    def __post_init__(self):
        memory, states = _check_memory_states(self.memory, self.states)
        object.__setattr__(self, "memory", memory)
        object.__setattr__(self, "states", states)
        n_ctx = states ** memory
        rows = np.asarray(self.transitions, dtype=np.float64).reshape(n_ctx, states)
        if not np.all(np.isfinite(rows)):
            raise InvalidInputError("transition entries must be finite")
        if np.any(rows < _NEG_CLAMP):
            raise InvalidInputError("transition entries must be nonnegative")
        rows = np.where(rows < 0.0, 0.0, rows)
        sums = rows.sum(axis=1)
        bad = np.abs(sums - 1.0) > PMF_RENORM_ATOL
        if np.any(bad):
            raise InvalidInputError(f"rows {np.nonzero(bad)[0].tolist()} do not sum to 1 "
                                    f"within {PMF_RENORM_ATOL}")
        rows = rows / sums[:, None]
        rows.setflags(write=False)
        object.__setattr__(self, "transitions", rows)

    @property
    def num_contexts(self) -> int:
        return self.states ** self.memory

    def row(self, ctx_idx: int) -> np.ndarray:
        return self.transitions[ctx_idx]


def markov_kernel(params: MarkovParams, history: Sequence[int]) -> Pmf:
    """Next-symbol law of the process after ``history`` (padded context lookup)."""
    for z in history:
        if not 0 <= int(z) < params.states:
            raise InvalidInputError(f"symbol {z} outside the state set")
    row = params.row(context_index(history, params.memory, params.states))
    return Pmf._wrap(row)


class _MarkovCursor(KernelCursor):
    __slots__ = ("_rows", "_idx", "_mod", "_states")

    def __init__(self, params: MarkovParams):
        self._rows = params.transitions
        self._states = params.states
        self._mod = params.states ** (params.memory - 1)
        self._idx = 0  # all-padding context

    def probs(self) -> np.ndarray:
        return self._rows[self._idx]

    def advance(self, symbol: int) -> None:
        self._idx = (self._idx % self._mod) * self._states + symbol


class MarkovDistribution(SequentialDistribution):
    """Sequential process generated by a fixed transition tensor."""

    def __init__(self, params: MarkovParams, horizon: int, tag: str = "markov-memory"):
        super().__init__(horizon, Alphabet(params.states), tag=tag)
        self.params = params

    def _kernel(self, history: tuple[int, ...]) -> Pmf:
        return Pmf._wrap(self.params.row(
            context_index(history, self.params.memory, self.params.states)))

    def cursor(self) -> KernelCursor:
        return _MarkovCursor(self.params)


def sample_theta(memory: int, states: int, seed: int | Sequence[int]) -> MarkovParams:
    """Draw a transition tensor uniformly (flat Dirichlet rows); seeded."""
    memory, states = _check_memory_states(memory, states)
    rng = make_rng(seed)
    rows = rng.dirichlet(np.ones(states), size=states ** memory)
    return MarkovParams(memory=memory, states=states, transitions=rows)


# ---------------------------------------------------------------------------
# Transition counts and the closed-form mixture predictive
# ---------------------------------------------------------------------------

@dataclass
class ContextCounts:
    """Transition counts ``counts[ctx, z]`` accumulated along a history.

    Counting starts at the first observed symbol: padded context symbols act
    as conditioning context but are never themselves counted as outcomes.
    """

    memory: int
    states: int
    counts: np.ndarray

    @classmethod
    def empty(cls, memory: int, states: int) -> "ContextCounts":
        memory, states = _check_memory_states(memory, states)
        return cls(memory=memory, states=states,
                   counts=np.zeros((states ** memory, states), dtype=np.int64))

    def observe(self, ctx_idx: int, symbol: int) -> None:
        self.counts[ctx_idx, symbol] += 1

    def total(self) -> int:
        return int(self.counts.sum())


def history_counts(memory: int, states: int, history: Sequence[int]) -> ContextCounts:
    """Counts of every context -> symbol transition along ``history``."""
    cc = ContextCounts.empty(memory, states)
    idx = 0
    mod = states ** (memory - 1)
    for z in history:
        z = int(z)
        if not 0 <= z < states:
            raise InvalidInputError(f"symbol {z} outside the state set")
        cc.counts[idx, z] += 1
        idx = (idx % mod) * states + z
    return cc


def _laplace_row(counts_row: np.ndarray, states: int) -> np.ndarray:
    return (counts_row + 1.0) / (counts_row.sum() + states)


def laplace_mixture_predictive(memory: int, states: int,
                               history: Sequence[int]) -> Pmf:
    """Posterior predictive under the uniform prior over transition tensors.

    Equals ``(n(z | c) + 1) / (n(c) + S)`` where ``c`` is the current padded
    context and ``n`` counts transitions along the history: the
    posterior-mean kernel row under independent flat Dirichlet rows.  The
    closed form is validated elsewhere against direct numerical quadrature
    of the posterior integral (see ``quadrature_mixture_predictive``).
    """
    memory, states = _check_memory_states(memory, states)
    cc = history_counts(memory, states, history)
    ctx = context_index(history, memory, states)
    row = _laplace_row(cc.counts[ctx].astype(np.float64), states)
    row.setflags(write=False)
    return Pmf._wrap(row)


class _LaplaceCursor(KernelCursor):
    __slots__ = ("_counts", "_totals", "_idx", "_mod", "_states")

    def __init__(self, memory: int, states: int):
        n_ctx = states ** memory
        self._counts = np.zeros((n_ctx, states), dtype=np.float64)
        self._totals = np.zeros(n_ctx, dtype=np.float64)
        self._idx = 0
        self._mod = states ** (memory - 1)
        self._states = states

    def probs(self) -> np.ndarray:
        i = self._idx
        return (self._counts[i] + 1.0) / (self._totals[i] + self._states)

    def advance(self, symbol: int) -> None:
        i = self._idx
        self._counts[i, symbol] += 1.0
        self._totals[i] += 1.0
        self._idx = (i % self._mod) * self._states + symbol


class LaplaceMixtureDistribution(SequentialDistribution):
    """Exchangeable process whose kernels are the add-one mixture predictives."""

    def __init__(self, memory: int, states: int, horizon: int, tag: str = "mixture"):
        memory, states = _check_memory_states(memory, states)
        super().__init__(horizon, Alphabet(states), tag=tag)
        self.memory = memory

    def _kernel(self, history: tuple[int, ...]) -> Pmf:
        return laplace_mixture_predictive(self.memory, self.alphabet.size, history)

    def cursor(self) -> KernelCursor:
        return _LaplaceCursor(self.memory, self.alphabet.size)


# ---------------------------------------------------------------------------
# Quadrature route for the same integral (two-state chains)
# ---------------------------------------------------------------------------

def quadrature_mixture_predictive(memory: int, states: int, history: Sequence[int],
                                  points: int = 10 ** 4) -> Pmf:
    """Mixture predictive by direct numerical integration (S = 2 only).

    Evaluates the posterior-weighted kernel integral with a midpoint rule of
    ``points`` nodes on each context's free parameter.  The likelihood is
    accumulated by walking the history and multiplying kernel entries at
    every grid node, deliberately not reusing the closed-form count algebra,
    so this is an independent oracle for ``laplace_mixture_predictive``.
    """
    memory, states = _check_memory_states(memory, states)
    if states != 2:
        raise InvalidInputError("quadrature route is implemented for two-state chains")
    if points < 10:
        raise InvalidInputError("need at least 10 quadrature nodes")
    n_ctx = states ** memory
    grid = (np.arange(points) + 0.5) / points  # midpoint nodes on (0, 1)
    # Per-context likelihood factors over the grid; the joint posterior over
    # the parameter box is the product across contexts, so tensor-grid sums
    # factor into per-context 1-d sums.
    like = [np.ones(points) for _ in range(n_ctx)]
    idx = 0
    mod = states ** (memory - 1)
    for z in history:
        z = int(z)
        if not 0 <= z < states:
            raise InvalidInputError(f"symbol {z} outside the state set")
        like[idx] = like[idx] * (grid if z == 0 else 1.0 - grid)
        idx = (idx % mod) * states + z
    means = np.array([l.mean() for l in like])
    cur = idx
    denom = float(np.prod(means))
    other = denom / float(means[cur])  # product of means over contexts != cur
    p0 = other * float((like[cur] * grid).mean())
    p1 = other * float((like[cur] * (1.0 - grid)).mean())
    return Pmf(np.array([p0, p1]) / (p0 + p1))


# ---------------------------------------------------------------------------
# Metropolis route for the same integral
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class McmcConfig:
    """Random-walk Metropolis settings for the mixture predictive.

    The chain lives on the free coordinates of the transition tensor (the
    first ``S - 1`` entries of every row); proposals adding a uniform step of
    total width ``proposal_scale`` per coordinate that leave the parameter
    set are rejected, which is valid because the prior is uniform on the set
    and the proposal is symmetric.  Defaults are tuned so the approximation
    stays within total variation 0.02 of the closed form on short histories.
    """

    chain_length: int = 60000
    burn_in: int = 5000
    thinning: int = 5
    proposal_scale: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if self.chain_length <= self.burn_in:
            raise InvalidInputError("chain_length must exceed burn_in")
        if self.burn_in < 0:
            raise InvalidInputError("burn_in must be nonnegative")
        if self.thinning < 1:
            raise InvalidInputError("thinning must be >= 1")
        if not (self.proposal_scale > 0 and math.isfinite(self.proposal_scale)):
            raise InvalidInputError("proposal_scale must be a positive real")


@dataclass(frozen=True)
class McmcPredictive:
    """Chain output: predictive pmf plus mixing diagnostics."""

    pmf: Pmf
    acceptance_rate: float
    mean_abs_step: float
    samples_used: int


def mcmc_mixture_predictive(memory: int, states: int, history: Sequence[int],
                            config: McmcConfig = McmcConfig()) -> McmcPredictive:
    """Mixture predictive estimated by averaging kernel rows along an MH chain.

    The target density over transition tensors is proportional to the
    likelihood of ``history`` (uniform prior), known only up to its
    normalizer, which is all Metropolis requires.  Deterministic given
    ``config.seed``.
    """
    memory, states = _check_memory_states(memory, states)
    cc = history_counts(memory, states, history)
    cur_ctx = context_index(history, memory, states)
    n_ctx = states ** memory

    observed = np.nonzero(cc.counts.sum(axis=1) > 0)[0]
    n_free = cc.counts[observed, :states - 1].astype(np.float64)
    n_last = cc.counts[observed, states - 1].astype(np.float64)

    def loglik(theta: np.ndarray) -> float:
        if observed.size == 0:
            return 0.0
        th = theta[observed]
        rem = 1.0 - th.sum(axis=1)
        # Boundary values with positive counts give a huge negative number,
        # which acts as -inf in the acceptance ratio.
        val = float(np.sum(n_free * np.log(np.maximum(th, 1e-300))))
        val += float(np.sum(n_last * np.log(np.maximum(rem, 1e-300))))
        return val

    rng = make_rng((int(config.seed),))
    theta = np.full((n_ctx, states - 1), 1.0 / states)
    cur_ll = loglik(theta)
    half = config.proposal_scale / 2.0

    row_sum = np.zeros(states)
    kept = 0
    accepted = 0
    abs_step = 0.0
    n_coords = theta.size

    for step in range(config.chain_length):
        delta = rng.uniform(-half, half, size=theta.shape)
        prop = theta + delta
        ok = np.all(prop >= 0.0) and np.all(prop.sum(axis=1) <= 1.0)
        if ok:
            ll = loglik(prop)
            if ll >= cur_ll or rng.random() < math.exp(ll - cur_ll):
                accepted += 1
                abs_step += float(np.abs(delta).sum())
                theta = prop
                cur_ll = ll
        if step >= config.burn_in and (step - config.burn_in) % config.thinning == 0:
            free = theta[cur_ctx]
            row_sum[:states - 1] += free
            row_sum[states - 1] += 1.0 - free.sum()
            kept += 1

    return McmcPredictive(pmf=Pmf(row_sum / kept),
                          acceptance_rate=accepted / config.chain_length,
                          mean_abs_step=abs_step / (config.chain_length * n_coords),
                          samples_used=kept)


class McmcMixtureDistribution(SequentialDistribution):
    """Mixture predictive computed by a fresh Metropolis chain per kernel call.

    Kernel purity is preserved by folding the history into the chain seed, so
    the same history always reruns the same chain.  Orders of magnitude
    slower than the closed form; meant for small smoke runs and for priors
    where no closed form exists.
    """

    def __init__(self, memory: int, states: int, horizon: int,
                 config: McmcConfig = McmcConfig(), tag: str = "mixture-mcmc"):
        memory, states = _check_memory_states(memory, states)
        super().__init__(horizon, Alphabet(states), tag=tag)
        self.memory = memory
        self.config = config

    def _history_seed(self, history: tuple[int, ...]) -> int:
        key = (int(self.config.seed) + len(history)) % (2 ** 63)
        for z in history:
            key = (key * 1000003 + z + 1) % (2 ** 63)
        return key

    def _kernel(self, history: tuple[int, ...]) -> Pmf:
        cfg = McmcConfig(chain_length=self.config.chain_length,
                         burn_in=self.config.burn_in,
                         thinning=self.config.thinning,
                         proposal_scale=self.config.proposal_scale,
                         seed=self._history_seed(history))
        return mcmc_mixture_predictive(self.memory, self.alphabet.size,
                                       history, cfg).pmf


# ---------------------------------------------------------------------------
# Exact expected divergences between two Markov processes
# ---------------------------------------------------------------------------

def expected_divergences(p_params: MarkovParams, q_params: MarkovParams,
                         horizon: int) -> ExpectedDivergences:
    """Exact expected average TV/KL and joint KL between two Markov processes.

    Propagates the exact distribution over joint contexts (the last
    ``max(m_p, m_q)`` symbols) under the data process, so horizons far beyond
    full sequence enumeration stay exact.  Cost is
    ``O(horizon * states**(max memory + 1))``.
    """
    if p_params.states != q_params.states:
        raise InvalidInputError("processes live on different state sets")
    if horizon < 1:
        raise InvalidInputError("horizon must be >= 1")
    s = p_params.states
    m = max(p_params.memory, q_params.memory)
    n_ctx = s ** m
    if n_ctx * s > 10 ** 7:
        raise CapacityError("joint context space too large for the exact recursion")

    def embed(params: MarkovParams) -> np.ndarray:
        # Row of the process for every joint context (last m symbols).
        if params.memory == m:
            return params.transitions
        rows = np.empty((n_ctx, s))
        sub = s ** params.memory
        for c in range(n_ctx):
            rows[c] = params.transitions[c % sub]
        return rows

    p_rows = embed(p_params)
    q_rows = embed(q_params)
    tv_c = 0.5 * np.abs(p_rows - q_rows).sum(axis=1)
    kl_c = np.array([_kl_arrays(p_rows[c], q_rows[c]) for c in range(n_ctx)])
    inf_mask = np.isinf(kl_c)

    # Push-forward map: context c then symbol z lands in context child[c, z].
    mod = s ** (m - 1)
    child = np.empty((n_ctx, s), dtype=np.int64)
    for c in range(n_ctx):
        for z in range(s):
            child[c, z] = (c % mod) * s + z

    w = np.zeros(n_ctx)
    w[0] = 1.0  # all-padding context
    ev = 0.0
    ed = 0.0
    d_infinite = False
    for _ in range(horizon):
        ev += float(w @ tv_c)
        if np.any(w[inf_mask] > 0.0):
            d_infinite = True
        else:
            ed += float(w @ kl_c)
        flow = w[:, None] * p_rows
        w_next = np.zeros(n_ctx)
        np.add.at(w_next, child, flow)
        w = w_next

    d_expected = math.inf if d_infinite else ed / horizon
    return ExpectedDivergences(v_expected=ev / horizon,
                               d_expected=d_expected,
                               joint_kl=math.inf if d_infinite else ed,
                               mode="exact")
