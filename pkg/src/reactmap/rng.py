"""Named substreams of a single master seed.

Every stochastic stage derives its generator from ``(master_seed, name, *indices)``
so that stages and per-item parallelism (trials, restarts, paths) reproduce serial
results regardless of execution order.
"""

from __future__ import annotations

import zlib

import numpy as np


def _entropy(seed: int, name: str, indices: tuple[int, ...]) -> tuple[int, ...]:
    return (int(seed), zlib.crc32(name.encode("ascii")), *(int(i) for i in indices))


def stream(seed: int, name: str, *indices: int) -> np.random.Generator:
    """Generator for the substream identified by ``name`` and optional indices."""
    return np.random.default_rng(np.random.SeedSequence(_entropy(seed, name, indices)))


def child_seed(seed: int, name: str, *indices: int) -> int:
    """Integer seed for handing a substream to an API that takes a plain seed."""
    ss = np.random.SeedSequence(_entropy(seed, name, indices))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
