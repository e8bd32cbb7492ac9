"""Deterministic derivation of independent RNG streams from one 64-bit seed.

Both the dataset builder and the forest trainer fan a single user seed out to
many workers; results must not depend on how the work is scheduled, so each
work item gets its own stream keyed by (seed, index).
"""

from __future__ import annotations


def mix_seed(seed: int, k: int) -> int:
    """SplitMix64-style mixing of a seed with a stream index."""
    mask = (1 << 64) - 1
    z = (seed + (k + 1) * 0x9E3779B97F4A7C15) & mask
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
    return (z ^ (z >> 31)) & mask
