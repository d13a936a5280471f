"""Reproducible random number generation for parallel replicates.

Replicate streams are derived from a single 64-bit seed with splitmix64 and
fed into numpy's counter-based Philox generator, so a report is bit-identical
regardless of how replicates are scheduled across workers.  The constants are
documented here so another implementation can reproduce the same stream
derivation:

    splitmix64(seed, i) = mix(seed + (i + 1) * 0x9E3779B97F4A7C15)
    mix(z):  z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9
             z ^= z >> 27;  z *= 0x94D049BB133111EB
             z ^= z >> 31

i.e. the (i+1)-th output of the standard splitmix64 generator seeded with
``seed``.  The derived word is used directly as the Philox key.
"""

from __future__ import annotations

import numpy as np

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def splitmix64(seed: int, index: int = 0) -> int:
    """Return the ``index``-th output of splitmix64 seeded with ``seed``."""
    z = (seed + (index + 1) * _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31)


def derived_generator(seed: int, index: int = 0) -> np.random.Generator:
    """Generator for stream ``index`` of the experiment seeded with ``seed``."""
    return np.random.Generator(np.random.Philox(key=splitmix64(seed, index)))


def as_generator(random_state) -> np.random.Generator:
    """Coerce ``None`` / int seed / Generator into a Generator."""
    if random_state is None:
        return np.random.default_rng()
    if isinstance(random_state, np.random.Generator):
        return random_state
    return derived_generator(int(random_state))
