"""Deterministic RNG streams derived from integer key tuples.

Every repeated loop (bootstrap draws, sub-sample partitions, study trials)
gets its own generator keyed by ``(seed, index, ...)``, so results do not
depend on execution order and any single iteration can be reproduced in
isolation.
"""

from __future__ import annotations

import numpy as np

from .exceptions import ConfigError


def check_seed(seed) -> int:
    if not isinstance(seed, (int, np.integer)) or isinstance(seed, bool) or seed < 0:
        raise ConfigError(f"seed must be a nonnegative integer, got {seed!r}")
    return int(seed)


def child_rng(*keys: int) -> np.random.Generator:
    """Generator for the stream identified by a tuple of nonnegative ints."""
    entropy = [check_seed(k) for k in keys]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
