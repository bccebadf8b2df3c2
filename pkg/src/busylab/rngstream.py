"""Deterministic random-stream derivation.

All randomness in the package flows through ``numpy.random.Generator``
instances.  Long runs are partitioned into fixed-size chunks; chunk ``j`` of a
run with master seed ``m`` always uses the generator returned by
``substream(m, j)``, so results do not depend on how chunks are distributed
over workers.

Substream seeds come from a SplitMix64 chain: the j-th seed is the SplitMix64
finalizer applied to ``m + (j + 1) * GOLDEN`` (all arithmetic mod 2**64).
This is the standard O(1) indexed form of SplitMix64, so any chunk seed can
be derived without stepping through its predecessors.
"""

import numpy as np

RandomStream = np.random.Generator

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(value: int) -> int:
    """SplitMix64 finalizer (Steele, Lea, Flood 2014)."""
    z = value & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def substream_seed(master_seed: int, index: int) -> int:
    """64-bit seed of substream ``index`` under ``master_seed``."""
    if index < 0:
        raise ValueError("substream index must be >= 0")
    return splitmix64((master_seed + (index + 1) * _GOLDEN) & _MASK)


def substream(master_seed: int, index: int) -> RandomStream:
    """Generator for substream ``index``; PCG64 seeded via the SplitMix64 chain."""
    return np.random.Generator(np.random.PCG64(substream_seed(master_seed, index)))


def make_stream(seed: int) -> RandomStream:
    """Standalone generator for one-off use (tests, single cycles)."""
    return np.random.Generator(np.random.PCG64(seed))
