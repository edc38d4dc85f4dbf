"""Keyed random streams.

Every replication owns a stream derived from ``(seed, replication index)``;
nothing is shared between replications, which makes batch results independent
of scheduling and thread count.
"""

import numpy as np

from . import _kernels

MAX_SEED = 2**64 - 1


def check_seed(seed):
    seed = int(seed)
    if not 0 <= seed <= MAX_SEED:
        raise ValueError(f"seed must be in [0, 2**64), got {seed}")
    return seed


class KeyedRng:
    """xoshiro256** stream number ``key`` of master ``seed``.

    >>> rng = KeyedRng(7, key=3)
    >>> 0.0 <= rng.uniform() < 1.0
    True
    """

    def __init__(self, seed, key=0):
        self.seed = check_seed(seed)
        self.key = check_seed(key)
        self._state = np.empty(4, dtype=np.uint64)
        self._cache = np.zeros(2)
        _kernels.seed_state(np.uint64(self.seed), np.uint64(self.key), self._state, self._cache)

    def uniform(self):
        return float(_kernels.uniform(self._state))

    def normal(self):
        return float(_kernels.normal(self._state, self._cache))

    def normals(self, size):
        return np.array([self.normal() for _ in range(size)])

    def __repr__(self):
        return f"KeyedRng(seed={self.seed}, key={self.key})"
