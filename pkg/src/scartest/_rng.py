"""Seed plumbing.

All randomness flows through :class:`numpy.random.SeedSequence`, so child
streams are derived from a tuple of integers (master seed, cell, replicate,
purpose) instead of from draw order. Adding a cell or running replicates in a
different order never perturbs another stream.
"""

from __future__ import annotations

import numpy as np

# purpose tags keep streams derived from the same key tuple independent
DATA = 0
LABELS = 1
LEARNER = 2
NULL = 3
STATISTIC = 4
REDRAW = 5


def seed_sequence(*key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(k) for k in key])


def generator(*key: int) -> np.random.Generator:
    """PCG64 generator keyed on a tuple of non-negative integers."""
    return np.random.Generator(np.random.PCG64(seed_sequence(*key)))


def int_seed(*key: int) -> int:
    """A 31-bit integer seed for libraries that want a plain int."""
    return int(seed_sequence(*key).generate_state(1)[0] >> 1)
