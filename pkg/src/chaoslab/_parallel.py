"""Seeded, schedule-independent path simulation.

Paths are grouped in fixed-size blocks; block ``b`` draws from a generator keyed
by ``(seed, b)``. The block size never depends on the worker count, so path
``i`` sees the same random numbers however blocks are scheduled.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np


def block_rng(seed: int, block: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(block),))
    return np.random.Generator(np.random.Philox(ss))


def simulate_paths(
    paths: int,
    seed: int,
    block_size: int,
    kernel: Callable[[np.random.Generator, int], np.ndarray],
    workers: int = 1,
) -> np.ndarray:
    """Fill a length-``paths`` array block by block.

    ``kernel(rng, count)`` must return ``count`` per-path values drawn from ``rng``.
    """
    out = np.empty(paths, dtype=np.float64)
    starts = range(0, paths, block_size)

    def run(start: int) -> None:
        count = min(block_size, paths - start)
        out[start : start + count] = kernel(block_rng(seed, start // block_size), count)

    if workers <= 1:
        for s in starts:
            run(s)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, starts))
    return out


def mean_and_error(values: np.ndarray) -> tuple[float, float]:
    """Pairwise-summed mean and ``sample std / sqrt(len)``; both fixed by array order."""
    m = len(values)
    mean = float(np.sum(values) / m)
    if m < 2:
        return mean, 0.0
    resid = values - mean
    var = float(np.sum(resid * resid) / (m - 1))
    return mean, float(np.sqrt(var / m))
