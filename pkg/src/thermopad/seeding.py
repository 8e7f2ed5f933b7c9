"""Deterministic RNG derivation shared by all modules.

Every stochastic component derives its generator from integer key tuples via
numpy's SeedSequence, so identical keys give bit-identical streams on any
platform.  Negative keys (seeds are declared as 64-bit ints) are masked to
their unsigned representation because SeedSequence rejects negatives.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def derive_rng(*keys: int) -> np.random.Generator:
    """PCG64 generator keyed by the given integers."""
    return np.random.default_rng(np.random.SeedSequence([int(k) & _MASK64 for k in keys]))
