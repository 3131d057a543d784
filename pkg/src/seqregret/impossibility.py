"""A construction showing expected-divergence regret bounds cannot hold with
high probability at useful rates.

The instance lives on three symbols.  The model ``Q`` is i.i.d. with
marginal ``(phi, 1 - phi - psi, psi)``.  The data process ``P`` has the same
first-round marginal, but conditioning on the first symbol being 0 makes
every later symbol 2 almost surely, while conditioning on anything else
leaves the process i.i.d. with the same marginal as ``Q``.  The expected
divergences between ``P`` and ``Q`` shrink as ``phi`` does, yet with
probability ``phi`` the learner matched to ``Q`` keeps predicting symbol 1
against a stream of 2's and suffers average regret ``(T-1)/T``.

``choose_parameters`` turns this into a refutation witness: given a candidate
high-probability regret rate built from the expected total variation (scaled
by ``delta**-alpha``) or from the joint KL (scaled by ``delta**-beta``) plus
any vanishing remainder, it finds an instance whose regret exceeds the
candidate rate with probability exactly ``delta``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import (Alphabet, KernelCursor, Pmf, ProductDistribution,
                   SequentialDistribution, classification_loss, episode_key)
from .errors import CapacityError, InvalidInputError
from .predictors import mismatched_policy, optimal_policy
from .regret import run_episode

# The refutation witness always uses this value for the small symbol-2 mass.
WITNESS_PSI = 0.125


def _check_phi_psi(phi: float, psi: float) -> None:
    if not 0.0 < phi < 0.5:
        raise InvalidInputError(f"phi must lie in (0, 1/2), got {phi!r}")
    if not 0.0 < psi < 0.5 - phi:
        raise InvalidInputError(f"psi must lie in (0, 1/2 - phi), got {psi!r}")


class _FirstSymbolCursor(KernelCursor):
    __slots__ = ("_marginal", "_after_zero", "_branch")

    def __init__(self, marginal: np.ndarray, after_zero: np.ndarray):
        self._marginal = marginal
        self._after_zero = after_zero
        self._branch = None  # None until the first symbol arrives

    def probs(self) -> np.ndarray:
        if self._branch is None or not self._branch:
            return self._marginal
        return self._after_zero

    def advance(self, symbol: int) -> None:
        if self._branch is None:
            self._branch = (symbol == 0)


class _BranchingProcess(SequentialDistribution):
    """First round i.i.d. marginal; first symbol 0 locks all later rounds to 2."""

    def __init__(self, phi: float, psi: float, horizon: int):
        super().__init__(horizon, Alphabet(3), tag="impossibility-P")
        marginal = np.array([phi, 1.0 - phi - psi, psi])
        after_zero = np.array([0.0, 0.0, 1.0])
        marginal.setflags(write=False)
        after_zero.setflags(write=False)
        self._marginal = marginal
        self._after_zero = after_zero

    def _kernel(self, history: tuple[int, ...]) -> Pmf:
        if len(history) > 0 and history[0] == 0:
            return Pmf._wrap(self._after_zero)
        return Pmf._wrap(self._marginal)

    def cursor(self) -> KernelCursor:
        return _FirstSymbolCursor(self._marginal, self._after_zero)


@dataclass(frozen=True)
class ImpossibilityInstance:
    """A matched (data process, model) pair from the construction."""

    phi: float
    psi: float
    horizon: int
    p_dist: SequentialDistribution
    q_dist: SequentialDistribution


def build_instance(phi: float, psi: float, horizon: int) -> ImpossibilityInstance:
    """The three-symbol instance with parameters ``phi`` and ``psi``."""
    _check_phi_psi(phi, psi)
    if horizon < 1:
        raise InvalidInputError("horizon must be >= 1")
    marginal = Pmf(np.array([phi, 1.0 - phi - psi, psi]))
    q_dist = ProductDistribution(marginal, horizon, tag="impossibility-Q")
    p_dist = _BranchingProcess(phi, psi, horizon)
    return ImpossibilityInstance(phi=float(phi), psi=float(psi), horizon=int(horizon),
                                 p_dist=p_dist, q_dist=q_dist)


# ---------------------------------------------------------------------------
# Closed forms
# ---------------------------------------------------------------------------

def closed_form_avg_tv_given_first(phi: float, psi: float, horizon: int,
                                   first_symbol: int) -> float:
    """Realized average conditional TV along any path, by its first symbol.

    The conditionals of ``P`` and ``Q`` agree except after a leading 0, where
    they differ by ``1 - psi`` on each of the remaining ``T - 1`` rounds.
    """
    _check_phi_psi(phi, psi)
    if first_symbol == 0:
        return (horizon - 1) / horizon * (1.0 - psi)
    return 0.0


def closed_form_expected_tv(phi: float, psi: float, horizon: int) -> float:
    """Expected average conditional TV: ``((T-1)/T) * phi * (1 - psi)``."""
    _check_phi_psi(phi, psi)
    return (horizon - 1) / horizon * phi * (1.0 - psi)


def closed_form_joint_kl(phi: float, psi: float, horizon: int) -> float:
    """KL between the joint sequence laws: ``(T-1) * phi * log(1/psi)``."""
    _check_phi_psi(phi, psi)
    return (horizon - 1) * phi * math.log(1.0 / psi)


def regret_closed_form(first_symbol: int, horizon: int) -> float:
    """Average regret of the model-matched learner, by the first symbol.

    After a leading 0 the learner keeps predicting symbol 1 against a stream
    of 2's while the optimal policy predicts 2, losing one unit on each of
    the remaining ``T - 1`` rounds; otherwise the two policies coincide.
    """
    if horizon < 1:
        raise InvalidInputError("horizon must be >= 1")
    return (horizon - 1) / horizon if first_symbol == 0 else 0.0


# ---------------------------------------------------------------------------
# Refutation witness
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LowerBoundWitness:
    """Instance parameters defeating a candidate high-probability rate.

    The candidate rate has constant ``c``, exponent ``alpha`` on
    ``1/delta`` for its expected-TV form, exponent ``beta`` on
    ``1/sqrt(delta)`` for its KL form, and remainder ``epsilon(T, delta)``.
    The witness instance uses ``phi = delta_n``, ``psi = 1/8`` and horizon
    ``horizon``; both evaluated rates ``r1`` (TV form) and ``r2`` (KL form)
    fall strictly below the regret level ``(T-1)/T`` that the instance
    attains with probability exactly ``delta_n``.
    """

    c: float
    alpha: float
    beta: float
    epsilon: Callable[[int, float], float]
    n: int
    delta_n: float
    horizon: int
    r1: float
    r2: float
    regret_level: float
    search_trace: tuple = field(default=(), repr=False)


def _eval_epsilon(epsilon, horizon: int, delta: float) -> float:
    val = float(epsilon(horizon, delta))
    if not (val >= 0.0 and math.isfinite(val)):
        raise InvalidInputError(f"epsilon({horizon}, {delta}) = {val!r}; the remainder "
                                "must be finite and nonnegative")
    return val


def choose_parameters(c: float, alpha: float, beta: float,
                      epsilon: Callable[[int, float], float],
                      horizon_cap: int = 10 ** 7,
                      n_cap: int = 10 ** 5) -> LowerBoundWitness:
    """Search for witness parameters defeating the candidate rates.

    Walks ``delta_n = 1/(n+3)`` for ``n = 1, 2, ...``; for each ``n`` takes
    the smallest horizon exceeding the previous one with
    ``epsilon(T, delta_n) < 1/n``, and stops at the first ``n`` where both
    evaluated rates fall strictly below the attained regret level.  Caps
    bound the search only; hitting one raises a capacity error and says
    nothing about the candidate rate.
    """
    if not (c > 0 and math.isfinite(c)):
        raise InvalidInputError("the rate constant c must be a positive real")
    if not 0.0 <= alpha < 1.0:
        raise InvalidInputError(f"alpha must lie in [0, 1), got {alpha!r}")
    if not 0.0 <= beta < 0.5:
        raise InvalidInputError(f"beta must lie in [0, 1/2), got {beta!r}")
    psi = WITNESS_PSI
    log_inv_psi = math.log(1.0 / psi)

    trace = []
    horizon_prev = 0
    for n in range(1, n_cap + 1):
        delta_n = 1.0 / (n + 3)
        horizon = None
        t = horizon_prev + 1
        while t <= horizon_cap:
            if _eval_epsilon(epsilon, t, delta_n) < 1.0 / n:
                horizon = t
                break
            t += 1
        if horizon is None:
            raise CapacityError(
                f"no horizon below the cap {horizon_cap} brings the remainder under "
                f"1/{n}; raise horizon_cap")
        horizon_prev = horizon
        level = (horizon - 1) / horizon
        eps_val = _eval_epsilon(epsilon, horizon, delta_n)
        r1 = c * (1.0 - psi) * level * delta_n ** (1.0 - alpha) + eps_val
        r2 = c * math.sqrt(level * log_inv_psi) * delta_n ** (0.5 - beta) + eps_val
        trace.append((n, delta_n, horizon, r1, r2, level))
        if r1 < level and r2 < level:
            return LowerBoundWitness(c=float(c), alpha=float(alpha), beta=float(beta),
                                     epsilon=epsilon, n=n, delta_n=delta_n,
                                     horizon=horizon, r1=r1, r2=r2,
                                     regret_level=level, search_trace=tuple(trace))
    raise CapacityError(f"no witness found for n up to {n_cap}; raise n_cap")


@dataclass(frozen=True)
class WitnessVerification:
    """Exact and simulated tail probabilities of the witness instance."""

    exact_probability: float
    frequency_r1: float
    frequency_r2: float
    episodes: int
    three_sigma: float
    passed: bool


def verify_witness(witness: LowerBoundWitness, episodes: int = 10 ** 4,
                   base_seed: int = 0) -> WitnessVerification:
    """Check the witness by exact computation and simulation.

    The instance's average regret is ``(T-1)/T`` exactly when the first
    symbol is 0 (probability ``phi = delta_n``) and 0 otherwise, so for any
    threshold strictly inside ``(0, (T-1)/T]`` the exceedance probability is
    exactly ``delta_n``.  Episodes are then simulated end to end and the
    empirical exceedance frequencies of both rates must fall within three
    binomial standard deviations of the exact value.
    """
    level = witness.regret_level
    for name, r in (("r1", witness.r1), ("r2", witness.r2)):
        if not 0.0 < r < level:
            raise InvalidInputError(
                f"malformed witness: rate {name} = {r!r} does not lie strictly "
                f"between 0 and the attained regret level {level!r}")
    if episodes < 100:
        raise InvalidInputError("need at least 100 episodes")

    instance = build_instance(witness.delta_n, WITNESS_PSI, witness.horizon)
    loss = classification_loss(3)
    learner = mismatched_policy(instance.q_dist, loss)
    optimal = optimal_policy(instance.p_dist, loss)

    hits_r1 = 0
    hits_r2 = 0
    for i in range(episodes):
        trace = run_episode(instance.p_dist, learner, optimal, loss,
                            episode_key(base_seed, i))
        if trace.average >= witness.r1:
            hits_r1 += 1
        if trace.average >= witness.r2:
            hits_r2 += 1

    phi = witness.delta_n
    sigma = math.sqrt(phi * (1.0 - phi) / episodes)
    freq_r1 = hits_r1 / episodes
    freq_r2 = hits_r2 / episodes
    passed = abs(freq_r1 - phi) <= 3 * sigma and abs(freq_r2 - phi) <= 3 * sigma
    return WitnessVerification(exact_probability=phi, frequency_r1=freq_r1,
                               frequency_r2=freq_r2, episodes=episodes,
                               three_sigma=3 * sigma, passed=passed)
