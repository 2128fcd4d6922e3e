"""Seeded random streams.

Every stochastic component draws from a Philox counter-based generator so that
results are reproducible across platforms for a given integer seed.
"""

import numpy as np


def make_rng(seed):
    """Return a ``numpy.random.Generator`` backed by Philox for ``seed``."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(int(seed)))


def random_spins(n, seed):
    """Equiprobable +-1 vector of length ``n`` (int8)."""
    rng = make_rng(seed)
    return (1 - 2 * rng.integers(0, 2, size=n)).astype(np.int8)
