"""Deterministic seed derivation.

Every random choice in the package (bootstrap draws, feature subsets,
fold assignments, repetitions) is driven by a seed derived from a master
seed and an index, so any single unit of work can be reproduced alone.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def derive_seed(master: int, index: int) -> int:
    """SplitMix64 of ``master * golden + index``, folded to 63 bits."""
    z = (int(master) * _GOLDEN + int(index)) & _MASK64
    z = (z + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    z ^= z >> 31
    return z >> 1


def make_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)
