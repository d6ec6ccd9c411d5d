"""Named, splittable random streams.

Every random draw in the package comes from ``substream(seed, *path)``: a
PCG64 generator seeded by ``SeedSequence(seed, spawn_key=path)``. Both
algorithms are frozen by numpy's stream-compatibility policy, so a
``(seed, path)`` pair gives the same numbers on every platform.
"""

from __future__ import annotations

import os

import numpy as np

GENERATOR = "numpy.PCG64+SeedSequence/v1"


def substream(seed: int, *path: int) -> np.random.Generator:
    if seed < 0:
        raise ValueError("seed must be non-negative")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=tuple(path))))


def max_workers() -> int:
    """Parallelism cap from ``SORTNETC_THREADS`` (default: CPU count)."""
    env = os.environ.get("SORTNETC_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1
