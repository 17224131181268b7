"""Seeded random streams.

Every stochastic routine draws from a PCG64 generator whose state comes from
``numpy.random.SeedSequence(base_seed, spawn_key=keys)``.  SeedSequence hashing
is specified bit-for-bit and platform independent, so stream ``(seed, j)`` is
the same on every machine regardless of how many workers run, or in which
order.  Replicate ``j`` of anything always uses ``substream(seed, j)`` (or a
key path that starts with a fixed purpose tag, see the constants below).
"""

from __future__ import annotations

import numpy as np

# purpose tags keep streams for different roles disjoint
SCENARIO = 0
REPLICATE = 1
PERMUTATION = 2
SPLIT = 3

_MASK64 = (1 << 64) - 1


def normalize_seed(seed: int) -> int:
    """Map any Python int onto the unsigned 64-bit range."""
    return int(seed) & _MASK64


def substream(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for the key path ``keys`` under ``seed``."""
    ss = np.random.SeedSequence(normalize_seed(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(ss))


def derived_seed(seed: int, *keys: int) -> int:
    """A 64-bit integer seed derived from ``(seed, keys)``, e.g. for nested runs."""
    ss = np.random.SeedSequence(normalize_seed(seed), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
