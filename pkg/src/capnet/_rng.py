"""Seeding and block-parallel Monte Carlo.

Samples are cut into fixed-size blocks and block ``i`` draws from the stream
``SeedSequence(seed).spawn(nblocks)[i]`` (PCG64).  Which worker runs a block
does not matter, so results depend on the seed and sample count only, never on
the number of workers.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor

import numpy as np

BLOCK_SIZE = 2048


def as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def block_plan(seed, n: int, block_size: int = BLOCK_SIZE):
    """``[(size, SeedSequence), ...]`` covering ``n`` samples."""
    if n <= 0:
        return []
    base = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    nblocks = -(-n // block_size)
    sizes = [block_size] * (nblocks - 1) + [n - block_size * (nblocks - 1)]
    return list(zip(sizes, base.spawn(nblocks)))


def run_blocks(func, args: tuple, seed, n: int, workers: int = 1, block_size: int = BLOCK_SIZE) -> list:
    """Call ``func(*args, size, seedseq)`` for every block; results in block order."""
    plan = block_plan(seed, n, block_size)
    if workers <= 1 or len(plan) <= 1:
        return [func(*args, size, ss) for size, ss in plan]
    with ProcessPoolExecutor(max_workers=min(workers, len(plan))) as pool:
        futures = [pool.submit(func, *args, size, ss) for size, ss in plan]
        return [f.result() for f in futures]
