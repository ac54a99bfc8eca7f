"""Reproducible counter-based random streams.

Every trajectory gets its own Philox stream keyed by a 64-bit seed, so
ensembles are independent of execution order and can be resumed or
parallelized without coordination.  Per-trajectory seeds are derived from the
ensemble base seed with a SplitMix64 mix, which is bijective in the
trajectory index.
"""

from __future__ import annotations

import numpy as np

__all__ = ["mix64", "trajectory_seed", "stream"]

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
# fixed second key word so streams keyed by small integers stay distinct from
# other Philox uses of the same integers
_KEY_SALT = 0x5A1D2B9E0F7C3A55


def mix64(z: int) -> int:
    """SplitMix64 finalizer (a 64-bit bijection)."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def trajectory_seed(base_seed: int, index: int) -> int:
    """Seed of ensemble member `index` under `base_seed`."""
    if index < 0:
        raise ValueError("trajectory index must be nonnegative")
    return mix64((base_seed + (index + 1) * _GAMMA) & _MASK64)


def stream(seed: int) -> np.random.Generator:
    """Counter-based generator for one trajectory seed."""
    key = np.array([seed & _MASK64, _KEY_SALT], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
