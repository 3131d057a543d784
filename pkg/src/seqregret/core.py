"""Finite-alphabet sequential processes.

A process with horizon ``T`` over symbols ``{0, ..., S-1}`` is described by
its one-step conditional kernels: a map from an observed prefix to the
probability mass function of the next symbol.  Everything downstream
(divergences, decision policies, regret simulation) is built on the three
primitives here: kernel evaluation, chain-rule sequence probabilities and
seeded sampling.

All distribution objects are immutable after construction and kernel
evaluation is a pure function of the history, so instances can be shared
across worker threads.  Randomness always flows through counter-based
streams derived from structured integer keys, never from global state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import InvalidInputError

# Mass functions must sum to 1 within this tolerance after construction.
PMF_ATOL = 1e-12
# Construction helpers renormalize inputs whose total mass is within this
# distance of 1 and reject anything worse.
PMF_RENORM_ATOL = 1e-9
# Entries this far below zero are treated as rounding noise and clamped.
_NEG_CLAMP = -1e-12


# ---------------------------------------------------------------------------
# Seeding
# ---------------------------------------------------------------------------

def make_rng(key: int | Sequence[int]) -> np.random.Generator:
    """Build an independent generator from an integer key or key tuple.

    Streams are counter based (Philox), so two distinct keys yield
    independent streams regardless of the order in which they are consumed.
    """
    if isinstance(key, (int, np.integer)):
        parts = (int(key),)
    else:
        parts = tuple(int(k) for k in key)
    parts = tuple(k % (2 ** 64) for k in parts)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(parts)))


def episode_key(base_seed: int, index: int) -> tuple[int, int]:
    """Stream key for episode ``index`` of an experiment seeded by ``base_seed``."""
    if index < 0:
        raise InvalidInputError("episode index must be nonnegative")
    return (int(base_seed), int(index))


# Key component reserved for "auxiliary" streams (e.g. drawing a ground-truth
# parameter) so they can never collide with per-episode keys, whose second
# component is an episode index far below 2**48.
AUX_STREAM = 2 ** 48


def draw_symbol(rng: np.random.Generator, probs: np.ndarray) -> int:
    """Draw one symbol index from ``probs`` using a single uniform variate."""
    u = rng.random()
    acc = 0.0
    last_positive = 0
    for i, p in enumerate(probs):
        if p > 0.0:
            last_positive = i
            acc += p
            if u < acc:
                return i
    # Total mass can round to slightly below 1; never emit a zero-mass symbol.
    return last_positive


# ---------------------------------------------------------------------------
# Alphabet and mass functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Alphabet:
    """Finite symbol set ``{0, ..., size-1}``; at least two symbols."""

    size: int

    def __post_init__(self):
        if not isinstance(self.size, (int, np.integer)) or self.size < 2:
            raise InvalidInputError(f"alphabet size must be an integer >= 2, got {self.size!r}")
        object.__setattr__(self, "size", int(self.size))

    def symbols(self) -> range:
        return range(self.size)

    def contains(self, symbol: int) -> bool:
        return 0 <= symbol < self.size


class Pmf:
    """Probability mass function over a finite alphabet.

    Entries are nonnegative and sum to 1 within ``PMF_ATOL``.  Inputs whose
    total mass is within ``PMF_RENORM_ATOL`` of 1 are renormalized; anything
    further off is rejected.  The underlying array is read-only.
    """

    __slots__ = ("_probs",)

    def __init__(self, probs: Iterable[float]):
        arr = np.asarray(list(probs) if not isinstance(probs, np.ndarray) else probs,
                         dtype=np.float64)
        if arr.ndim != 1 or arr.size < 2:
            raise InvalidInputError("a pmf needs a 1-d array of at least two entries")
        if np.any(np.isnan(arr)) or np.any(np.isinf(arr)):
            raise InvalidInputError("pmf entries must be finite")
        if np.any(arr < _NEG_CLAMP):
            raise InvalidInputError(f"pmf entries must be nonnegative, got {arr}")
        arr = np.where(arr < 0.0, 0.0, arr)
        total = float(arr.sum())
        if abs(total - 1.0) > PMF_RENORM_ATOL:
            raise InvalidInputError(f"pmf entries sum to {total!r}, further than "
                                    f"{PMF_RENORM_ATOL} from 1")
        if total != 1.0:
            arr = arr / total
        arr.setflags(write=False)
        self._probs = arr

    @classmethod
    def _wrap(cls, arr: np.ndarray) -> "Pmf":
        """Wrap an already-validated read-only array without re-checking."""
        obj = object.__new__(cls)
        obj._probs = arr
        return obj

    @property
    def probs(self) -> np.ndarray:
        return self._probs

    def __len__(self) -> int:
        return self._probs.size

    def __getitem__(self, i: int) -> float:
        return float(self._probs[i])

    def __iter__(self):
        return iter(self._probs.tolist())

    def mode(self) -> int:
        """Index of the largest entry; ties go to the smallest index."""
        return int(np.argmax(self._probs))

    def __repr__(self) -> str:
        return f"Pmf({self._probs.tolist()})"


def uniform_pmf(size: int) -> Pmf:
    arr = np.full(size, 1.0 / size)
    arr.setflags(write=False)
    return Pmf._wrap(arr)


def dirac_pmf(size: int, symbol: int) -> Pmf:
    if not 0 <= symbol < size:
        raise InvalidInputError("dirac symbol out of range")
    arr = np.zeros(size)
    arr[symbol] = 1.0
    arr.setflags(write=False)
    return Pmf._wrap(arr)


# ---------------------------------------------------------------------------
# Losses
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LossFunction:
    """Bounded loss ``table[b, z]`` for prediction ``b`` against outcome ``z``.

    Every entry lies in ``[0, bound]``.  ``kind`` records how the table was
    built ("classification" or "bounded-table").
    """

    kind: str
    table: np.ndarray
    bound: float

    def __post_init__(self):
        tab = np.asarray(self.table, dtype=np.float64)
        if tab.ndim != 2 or tab.shape[0] < 1 or tab.shape[1] < 2:
            raise InvalidInputError("loss table must be 2-d with at least two outcome columns")
        if not np.all(np.isfinite(tab)):
            raise InvalidInputError("loss entries must be finite")
        if self.bound <= 0 or not math.isfinite(self.bound):
            raise InvalidInputError("loss bound must be a positive real")
        if np.any(tab < 0) or np.any(tab > self.bound + 1e-12):
            raise InvalidInputError("loss entries must lie in [0, bound]")
        tab = tab.copy()
        tab.setflags(write=False)
        object.__setattr__(self, "table", tab)
        object.__setattr__(self, "bound", float(self.bound))

    @property
    def num_predictions(self) -> int:
        return self.table.shape[0]

    @property
    def num_outcomes(self) -> int:
        return self.table.shape[1]

    def expected(self, pmf: Pmf | np.ndarray) -> np.ndarray:
        """Expected loss of every prediction under the outcome distribution."""
        p = pmf.probs if isinstance(pmf, Pmf) else np.asarray(pmf, dtype=np.float64)
        return self.table @ p


def classification_loss(alphabet_size: int) -> LossFunction:
    """Zero-one loss: 1 when the predicted symbol differs from the outcome."""
    if alphabet_size < 2:
        raise InvalidInputError("classification loss needs an alphabet of size >= 2")
    return LossFunction(kind="classification",
                        table=1.0 - np.eye(alphabet_size),
                        bound=1.0)


def table_loss(table: np.ndarray, bound: float | None = None) -> LossFunction:
    """Arbitrary bounded loss given by an explicit table."""
    tab = np.asarray(table, dtype=np.float64)
    if bound is None:
        if tab.size == 0 or not np.all(np.isfinite(tab)):
            raise InvalidInputError("loss table must be nonempty and finite")
        bound = float(tab.max())
        if bound <= 0:
            bound = 1.0
    return LossFunction(kind="bounded-table", table=tab, bound=float(bound))


# ---------------------------------------------------------------------------
# Sequential distributions
# ---------------------------------------------------------------------------

class KernelCursor:
    """Stateful walk along one sample path of a process.

    ``probs()`` returns the conditional pmf of the next symbol given the
    symbols fed to ``advance`` so far.  Cursors exist so that predictors whose
    kernels depend on running statistics (e.g. posterior counts) can be
    evaluated in constant time per round; they must agree exactly with the
    pure kernel applied to the accumulated prefix.
    """

    def probs(self) -> np.ndarray:
        raise NotImplementedError

    def advance(self, symbol: int) -> None:
        raise NotImplementedError


class _HistoryKernelCursor(KernelCursor):
    """Default cursor: re-evaluates the kernel on the accumulated prefix."""

    __slots__ = ("_dist", "_hist")

    def __init__(self, dist: "SequentialDistribution"):
        self._dist = dist
        self._hist: list[int] = []

    def probs(self) -> np.ndarray:
        return self._dist._kernel(tuple(self._hist)).probs

    def advance(self, symbol: int) -> None:
        self._hist.append(symbol)


class SequentialDistribution:
    """Process over ``alphabet`` with horizon ``horizon`` defined by its kernels.

    Subclasses either pass a ``kernel`` callable (history tuple -> Pmf) or
    override ``_kernel``.  ``tag`` names the family for reporting.
    """

    def __init__(self, horizon: int, alphabet: Alphabet,
                 kernel: Callable[[tuple[int, ...]], Pmf] | None = None,
                 tag: str = "custom"):
        if not isinstance(horizon, (int, np.integer)) or horizon < 1:
            raise InvalidInputError(f"horizon must be an integer >= 1, got {horizon!r}")
        self.horizon = int(horizon)
        self.alphabet = alphabet if isinstance(alphabet, Alphabet) else Alphabet(int(alphabet))
        self.tag = str(tag)
        self._kernel_fn = kernel

    # -- kernel plumbing ----------------------------------------------------

    def _kernel(self, history: tuple[int, ...]) -> Pmf:
        if self._kernel_fn is None:
            raise NotImplementedError("subclass must override _kernel or pass kernel=")
        return self._kernel_fn(history)

    def _check_history(self, history: Sequence[int], *, for_kernel: bool) -> tuple[int, ...]:
        h = tuple(int(z) for z in history)
        limit = self.horizon - 1 if for_kernel else self.horizon
        if len(h) > limit:
            raise InvalidInputError(f"history of length {len(h)} too long for horizon "
                                    f"{self.horizon}")
        for z in h:
            if not self.alphabet.contains(z):
                raise InvalidInputError(f"symbol {z} outside alphabet of size "
                                        f"{self.alphabet.size}")
        return h

    def conditional(self, history: Sequence[int]) -> Pmf:
        """Pmf of the next symbol given an observed prefix (validated)."""
        h = self._check_history(history, for_kernel=True)
        pmf = self._kernel(h)
        if len(pmf) != self.alphabet.size:
            raise InvalidInputError("kernel returned a pmf of the wrong size")
        return pmf

    def cursor(self) -> KernelCursor:
        return _HistoryKernelCursor(self)


def kernel_eval(dist: SequentialDistribution, history: Sequence[int]) -> Pmf:
    """Conditional next-symbol distribution after ``history``."""
    return dist.conditional(history)


def sequence_prob(dist: SequentialDistribution, sequence: Sequence[int]) -> float:
    """Chain-rule probability of a full length-``horizon`` sequence."""
    seq = dist._check_history(sequence, for_kernel=False)
    if len(seq) != dist.horizon:
        raise InvalidInputError(f"sequence length {len(seq)} != horizon {dist.horizon}")
    prob = 1.0
    cur = dist.cursor()
    for z in seq:
        prob *= float(cur.probs()[z])
        if prob == 0.0:
            return 0.0
        cur.advance(z)
    return prob


def sample_sequence(dist: SequentialDistribution, seed: int | Sequence[int]) -> tuple[int, ...]:
    """Draw one full sequence; deterministic given the seed key."""
    rng = make_rng(seed)
    cur = dist.cursor()
    out = []
    for _ in range(dist.horizon):
        z = draw_symbol(rng, cur.probs())
        out.append(z)
        cur.advance(z)
    return tuple(out)


# ---------------------------------------------------------------------------
# Concrete families
# ---------------------------------------------------------------------------

class _ProductCursor(KernelCursor):
    __slots__ = ("_rows", "_t")

    def __init__(self, rows):
        self._rows = rows
        self._t = 0

    def probs(self) -> np.ndarray:
        return self._rows[self._t if self._t < len(self._rows) else -1]

    def advance(self, symbol: int) -> None:
        self._t += 1


class ProductDistribution(SequentialDistribution):
    """Independent (not necessarily identically distributed) symbols.

    ``step_pmfs`` is either a single Pmf, reused every round, or one Pmf per
    round.
    """

    def __init__(self, step_pmfs: Pmf | Sequence[Pmf], horizon: int, tag: str = "product"):
        if isinstance(step_pmfs, Pmf):
            pmfs = [step_pmfs]
        else:
            pmfs = list(step_pmfs)
            if len(pmfs) not in (1, horizon):
                raise InvalidInputError("need one pmf total or one per round")
        sizes = {len(p) for p in pmfs}
        if len(sizes) != 1:
            raise InvalidInputError("all step pmfs must share one alphabet")
        super().__init__(horizon, Alphabet(sizes.pop()), tag=tag)
        self.step_pmfs = tuple(pmfs)
        self._rows = [p.probs for p in self.step_pmfs]

    def _kernel(self, history: tuple[int, ...]) -> Pmf:
        t = len(history)
        return self.step_pmfs[t if t < len(self.step_pmfs) else -1]

    def cursor(self) -> KernelCursor:
        return _ProductCursor(self._rows)


class TabularDistribution(SequentialDistribution):
    """Explicit joint distribution over all ``S**T`` sequences.

    Kernels are recovered by marginalization: the conditional probability of
    symbol ``z`` after a prefix is the mass of sequences extending
    ``prefix + (z,)`` divided by the mass of sequences extending ``prefix``.
    Prefixes of probability zero get a uniform row; chain-rule enumeration
    never visits them.
    """

    def __init__(self, joint: np.ndarray, alphabet_size: int, horizon: int,
                 tag: str = "tabular"):
        super().__init__(horizon, Alphabet(alphabet_size), tag=tag)
        size = self.alphabet.size ** self.horizon
        flat = np.asarray(joint, dtype=np.float64).reshape(-1)
        if flat.size != size:
            raise InvalidInputError(f"joint table needs {size} entries, got {flat.size}")
        if np.any(flat < _NEG_CLAMP) or not np.all(np.isfinite(flat)):
            raise InvalidInputError("joint table entries must be finite and nonnegative")
        flat = np.where(flat < 0.0, 0.0, flat)
        total = float(flat.sum())
        if abs(total - 1.0) > PMF_RENORM_ATOL:
            raise InvalidInputError(f"joint table mass {total!r} further than "
                                    f"{PMF_RENORM_ATOL} from 1")
        flat = flat / total
        # Prefix masses, one array per prefix length; levels[t][i] is the mass
        # of the i-th length-t prefix in lexicographic order.
        levels = [flat]
        cur = flat
        for _ in range(self.horizon):
            cur = cur.reshape(-1, self.alphabet.size).sum(axis=1)
            levels.append(cur)
        levels.reverse()  # levels[t] now has S**t entries
        self._levels = levels
        self.joint = flat

    def _prefix_index(self, history: tuple[int, ...]) -> int:
        idx = 0
        for z in history:
            idx = idx * self.alphabet.size + z
        return idx

    def _kernel(self, history: tuple[int, ...]) -> Pmf:
        t = len(history)
        idx = self._prefix_index(history)
        mass = self._levels[t][idx]
        if mass <= 0.0:
            return uniform_pmf(self.alphabet.size)
        s = self.alphabet.size
        row = self._levels[t + 1][idx * s:(idx + 1) * s] / mass
        row = np.where(row < 0.0, 0.0, row)
        row = row / row.sum()
        row.setflags(write=False)
        return Pmf._wrap(row)
