"""Decision policies for sequential prediction.

A policy maps an observed prefix to a prediction index.  The policies that
matter here minimize expected loss under some process's conditional law: the
optimal policy does so under the data distribution itself, a mismatched
policy under a (possibly wrong) model.  Ties always resolve to the smallest
prediction index, so policy construction is deterministic.

Also provided: the reverse construction, which turns an arbitrary policy
into a process under which that policy is the expected-loss minimizer for
classification loss, plus exhaustive verification of that property and a
cross-entropy minimizer check for log-loss style predictions.
"""
from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from .core import (Alphabet, KernelCursor, LossFunction, Pmf,
                   SequentialDistribution)
from .errors import DegenerateInputError, InvalidInputError


class PolicyCursor:
    """Stateful walk of a policy along one path: current decision + advance."""

    def decision(self) -> int:
        raise NotImplementedError

    def advance(self, symbol: int) -> None:
        raise NotImplementedError


class _HistoryPolicyCursor(PolicyCursor):
    __slots__ = ("_policy", "_hist")

    def __init__(self, policy: "Policy"):
        self._policy = policy
        self._hist: list[int] = []

    def decision(self) -> int:
        return self._policy.decide(tuple(self._hist))

    def advance(self, symbol: int) -> None:
        self._hist.append(symbol)


class Policy:
    """Prediction rule: a pure function from history tuples to indices."""

    def __init__(self, decide: Callable[[tuple[int, ...]], int], description: str = "policy"):
        self._decide = decide
        self.description = description

    def decide(self, history: Sequence[int]) -> int:
        return int(self._decide(tuple(int(z) for z in history)))

    def cursor(self) -> PolicyCursor:
        return _HistoryPolicyCursor(self)

    def __repr__(self) -> str:
        return f"Policy({self.description!r})"


class _KernelPolicyCursor(PolicyCursor):
    __slots__ = ("_kcur", "_classification", "_table")

    def __init__(self, kcur: KernelCursor, loss: LossFunction):
        self._kcur = kcur
        self._classification = loss.kind == "classification"
        self._table = loss.table

    def decision(self) -> int:
        p = self._kcur.probs()
        if self._classification:
            return int(np.argmax(p))
        return int(np.argmin(self._table @ p))

    def advance(self, symbol: int) -> None:
        self._kcur.advance(symbol)


class KernelPolicy(Policy):
    """Expected-loss minimizer under a process's conditional law.

    For classification loss this predicts the conditional mode.  Ties go to
    the smallest index.
    """

    def __init__(self, dist: SequentialDistribution, loss: LossFunction, description: str):
        if loss.num_outcomes != dist.alphabet.size:
            raise InvalidInputError("loss outcome count does not match the alphabet")
        super().__init__(self._decide_impl, description)
        self.dist = dist
        self.loss = loss
        self._classification = loss.kind == "classification"

    def _decide_impl(self, history: tuple[int, ...]) -> int:
        p = self.dist.conditional(history).probs
        if self._classification:
            return int(np.argmax(p))
        return int(np.argmin(self.loss.table @ p))

    def cursor(self) -> PolicyCursor:
        return _KernelPolicyCursor(self.dist.cursor(), self.loss)


def optimal_policy(dist: SequentialDistribution, loss: LossFunction) -> KernelPolicy:
    """Round-wise expected-loss minimizer under the data distribution."""
    return KernelPolicy(dist, loss, f"optimal under {dist.tag}")


def mismatched_policy(model: SequentialDistribution, loss: LossFunction) -> KernelPolicy:
    """Round-wise expected-loss minimizer under a learner's model."""
    return KernelPolicy(model, loss, f"matched to model {model.tag}")


def q_from_policy_classification(policy: Policy, q: float, r: float,
                                 alphabet: Alphabet | int, horizon: int,
                                 tag: str = "policy-representation") -> SequentialDistribution:
    """Process under which ``policy`` minimizes expected classification loss.

    Each conditional puts mass ``q`` on the policy's decision and spreads
    ``r`` evenly over the other symbols.  Requires ``q + r = 1`` and
    ``q > r/(S-1)`` so the decision is the strict conditional mode; the
    expected-loss minimizer under the result then reproduces ``policy`` on
    every history.
    """
    ab = alphabet if isinstance(alphabet, Alphabet) else Alphabet(int(alphabet))
    s = ab.size
    if not (0.0 < q < 1.0 and 0.0 < r < 1.0):
        raise InvalidInputError("need q and r strictly inside (0, 1)")
    if abs((q + r) - 1.0) > 1e-12:
        raise InvalidInputError(f"q + r must equal 1, got {q + r!r}")
    if not q > r / (s - 1):
        raise InvalidInputError(f"need q > r/(S-1) = {r / (s - 1)!r} so the "
                                "decision is the strict mode")
    off = r / (s - 1)

    def _kernel(history: tuple[int, ...]) -> Pmf:
        b = policy.decide(history)
        if not 0 <= b < s:
            raise InvalidInputError(f"policy decision {b} outside alphabet")
        row = np.full(s, off)
        row[b] = q
        return Pmf(row)

    return SequentialDistribution(horizon, ab, kernel=_kernel, tag=tag)


def _iter_histories(alphabet_size: int, max_depth: int):
    yield ()
    level = [()]
    for _ in range(max_depth):
        nxt = []
        for h in level:
            for z in range(alphabet_size):
                e = h + (z,)
                nxt.append(e)
                yield e
        level = nxt


def verify_policy_representation(model: SequentialDistribution, policy: Policy,
                                 loss: LossFunction, max_depth: int,
                                 tol: float = 1e-12) -> bool:
    """Check that ``policy`` minimizes expected loss under ``model`` everywhere.

    Enumerates every history of length 0..max_depth (capped at 10**5
    histories) and tests that the policy's decision attains the minimum
    expected loss under the model's conditional within ``tol``.  Attainment
    is what is verified: on conditionals with tied minimizers any tied
    decision passes.
    """
    s = model.alphabet.size
    max_depth = min(int(max_depth), model.horizon - 1)
    count = sum(s ** d for d in range(max_depth + 1))
    if count > 10 ** 5:
        raise InvalidInputError(f"would enumerate {count} histories, above the 10**5 cap")
    for history in _iter_histories(s, max_depth):
        expected = loss.expected(model.conditional(history))
        b = policy.decide(history)
        if not 0 <= b < loss.num_predictions:
            raise InvalidInputError(f"policy decision {b} outside the loss domain")
        if expected[b] > float(expected.min()) + tol:
            return False
    return True


def cross_entropy_argmin_check(p: Pmf, candidates: Sequence[Pmf]) -> int:
    """Index of the candidate pmf with the smallest cross-entropy against ``p``.

    Cross-entropy is ``sum_z p(z) * (-log b(z))`` with the usual conventions
    (terms with ``p(z) = 0`` vanish; a candidate putting zero mass where ``p``
    does not scores +inf).  Among distinct candidates the unique minimizer of
    cross-entropy is ``p`` itself, so when ``p`` appears in the list it wins.
    Ties resolve to the first index; if every candidate scores +inf the
    selection is undefined and an error is raised.
    """
    if len(candidates) == 0:
        raise InvalidInputError("need at least one candidate")
    pa = p.probs
    mask = pa > 0.0
    pm = pa[mask]
    best_idx, best_val = -1, math.inf
    for i, cand in enumerate(candidates):
        if len(cand) != len(p):
            raise InvalidInputError("candidate pmf size mismatch")
        ba = cand.probs[mask]
        if np.any(ba == 0.0):
            continue
        val = float(np.sum(pm * -np.log(ba)))
        if val < best_val:
            best_idx, best_val = i, val
    if best_idx < 0:
        raise DegenerateInputError("every candidate has infinite cross-entropy against p")
    return best_idx
