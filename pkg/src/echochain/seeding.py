"""Deterministic seed derivation for reproducible, order-independent ensembles.

Every stochastic object in the package is keyed by a 64-bit token derived
from a master seed and an index path, e.g. (master, tau_index,
realization_index).  Streams are independent of execution order and of the
number of workers.
"""

import numpy as np


def child_seed(master: int, *key: int) -> int:
    """64-bit seed token for the stream addressed by (master, *key)."""
    ss = np.random.SeedSequence(entropy=[int(master), *(int(k) for k in key)])
    return int(ss.generate_state(1, np.uint64)[0])


def rng_for(master: int, *key: int) -> np.random.Generator:
    """Generator seeded by the (master, *key) stream."""
    return np.random.default_rng(child_seed(master, *key))
