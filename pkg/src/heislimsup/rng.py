"""Seeded random streams.

Every random quantity in the package is drawn from a Philox generator keyed by
``(seed, *stream)``.  Philox is counter based, so a stream can be rebuilt from
its key alone and sub-streams never overlap regardless of evaluation order.
"""

from __future__ import annotations

import numpy as np

DEFAULT_SEED = 0


def make_rng(seed: int = DEFAULT_SEED, *stream: int) -> np.random.Generator:
    """Return the generator for ``seed`` and the stream path ``stream``."""
    if seed < 0 or seed >= 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.Philox(ss))


def as_rng(rng: np.random.Generator | int | None) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return make_rng(DEFAULT_SEED if rng is None else int(rng))
