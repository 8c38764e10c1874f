"""Deterministic seed derivation.

The master seed is split into per-grid-point and per-trial seeds with a
fixed 64-bit hash (the SplitMix64 finalizer)::

    mix(seed, index) = splitmix64((seed + GOLDEN * (index + 1)) mod 2**64)
    grid_seed  = mix(master, grid_index)
    trial_seed = mix(grid_seed, trial_index)

Each derived seed initialises an independent ``numpy.random.PCG64``
generator, so results never depend on the order in which trials run.
"""

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x):
    x &= MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def mix(seed, index):
    """Derive the child seed number ``index`` of ``seed``."""
    if seed < 0 or seed > MASK64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    if index < 0:
        raise ValueError(f"index must be nonnegative, got {index}")
    return splitmix64(seed + GOLDEN * (index + 1))


def stream(seed):
    """Return a fresh generator for a 64-bit seed."""
    return np.random.Generator(np.random.PCG64(seed))


def child_stream(seed, index):
    return stream(mix(seed, index))
