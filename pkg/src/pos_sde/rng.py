"""Counter-based Gaussian draws.

Every draw is addressed by ``(seed, stream, step, purpose)``: ``seed`` fixes
the Philox key, and the other three go into the counter, so a given tuple
always yields the same numbers regardless of what else was drawn. Streams are
attempt or run ids; this is what makes POS and reference runs consume
identical noise.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

NOISE = 0
INITIAL = 1
RETRY = 2


@lru_cache(maxsize=256)
def _key(seed: int) -> tuple[int, int]:
    a, b = np.random.SeedSequence(seed).generate_state(2, dtype=np.uint64)
    return int(a), int(b)


def generator(seed: int, stream: int, step: int = 0, purpose: int = NOISE) -> np.random.Generator:
    key = np.array(_key(seed), dtype=np.uint64)
    counter = np.array([0, purpose, step, stream], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(counter=counter, key=key))


def normals(seed: int, stream: int, step: int, shape, purpose: int = NOISE) -> np.ndarray:
    """Standard normal block for one (stream, step, purpose) address."""
    return generator(seed, stream, step, purpose).standard_normal(shape)
