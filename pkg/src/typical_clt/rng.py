"""Deterministic seed derivation.

Every stochastic routine in the package takes either an integer master
seed or a ready ``numpy.random.Generator``.  Parallel work units (shards,
theta draws, sweep cells) derive their own child seed from the master
seed plus a tuple of keys, so results never depend on scheduling order
or thread count.
"""

from __future__ import annotations

import zlib

import numpy as np


def _key_to_int(key) -> int:
    if isinstance(key, (int, np.integer)):
        return int(key) & 0xFFFFFFFF
    if isinstance(key, str):
        return zlib.crc32(key.encode("utf-8"))
    raise TypeError(f"unsupported seed key type: {type(key)!r}")


def derive_seed_sequence(master_seed: int, *keys) -> np.random.SeedSequence:
    """Child seed sequence for work unit identified by ``keys``."""
    entropy = [int(master_seed) & 0xFFFFFFFFFFFFFFFF]
    entropy.extend(_key_to_int(k) for k in keys)
    return np.random.SeedSequence(entropy)


def make_rng(master_seed: int, *keys) -> np.random.Generator:
    """PCG64 generator seeded from (master seed, *keys)."""
    return np.random.default_rng(derive_seed_sequence(master_seed, *keys))


def as_rng(rng_or_seed) -> np.random.Generator:
    """Accept an int seed or a Generator and return a Generator."""
    if isinstance(rng_or_seed, np.random.Generator):
        return rng_or_seed
    if isinstance(rng_or_seed, (int, np.integer)):
        return make_rng(int(rng_or_seed))
    raise TypeError(f"expected int seed or numpy Generator, got {type(rng_or_seed)!r}")
