"""Seed handling shared by every sampler.

``derive_seed(seed, *key)`` is the seed-splitting function: it hashes a root
seed and an integer key path through :class:`numpy.random.SeedSequence`, so
replica ``i`` of size ``j`` always gets ``derive_seed(root, j, i)`` no matter
which worker runs it or in which order.
"""
from __future__ import annotations

import numpy as np

_U32 = 2 ** 32


def derive_seed(seed, *key: int) -> int:
    """32-bit seed for the stream identified by ``key`` under root ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def kernel_seed(seed) -> int:
    """Turn ``None``, an int, or a Generator into a seed for compiled kernels."""
    if seed is None:
        return int(np.random.SeedSequence().generate_state(1, dtype=np.uint32)[0])
    if isinstance(seed, np.random.Generator):
        return int(seed.integers(_U32))
    seed = int(seed)
    if 0 <= seed < _U32:
        return seed
    return derive_seed(seed % (2 ** 63))


def as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
