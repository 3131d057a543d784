"""Shared helpers for the test suite.

Oracle convention: every numeric expectation is either (a) a triviality of the
definition, (b) recomputed inside the test by an independent route
(enumeration, quadrature, hand arithmetic), or (c) a frozen constant computed
once with 30-digit arithmetic and cited next to its literal.
"""
from __future__ import annotations

import numpy as np
import pytest

from seqregret import TabularDistribution, make_rng


def random_tabular_pair(seed: int, states: int = 3, horizon: int = 4):
    """Random strictly positive joint tables as a (data, model) pair.

    Full support keeps every KL quantity finite.
    """
    rng = make_rng((seed, 777))
    n = states ** horizon
    p_m = rng.random(n) + 1e-3
    q_m = rng.random(n) + 1e-3
    p = TabularDistribution(p_m / p_m.sum(), states, horizon, tag="data")
    q = TabularDistribution(q_m / q_m.sum(), states, horizon, tag="model")
    return p, q


def enumerate_sequences(states: int, horizon: int):
    """All length-``horizon`` tuples over ``range(states)``, lexicographic."""
    if horizon == 0:
        yield ()
        return
    for head in enumerate_sequences(states, horizon - 1):
        for z in range(states):
            yield head + (z,)


@pytest.fixture
def rng():
    return make_rng((424242, 0))
