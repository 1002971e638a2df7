"""Deterministic seeding.

Every random draw in the package comes from ``numpy.random.Generator`` backed
by PCG64. Child seeds are derived with ``numpy.random.SeedSequence``: the
parent seed is the entropy and the integer path is the spawn key, so

    derive_seed(master, cell, run)

is stable across processes and independent of how many siblings exist.
"""

import numpy as np

RNG_ALGORITHM = "numpy.PCG64/SeedSequence"


def derive_seed(seed, *path):
    """Mix ``seed`` with an integer path into a new 63-bit seed."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def make_rng(seed, *path):
    if isinstance(seed, np.random.Generator):
        return seed
    if path:
        seed = derive_seed(seed, *path)
    return np.random.Generator(np.random.PCG64(int(seed)))
