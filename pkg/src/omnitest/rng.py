"""Deterministic random substreams and block-parallel execution.

Replicates are partitioned into fixed blocks of ``BLOCK_SIZE``. Block ``k``
of a computation seeded with ``seed`` in domain ``d`` draws from

    Philox4x64(SeedSequence(seed, spawn_key=(d, k)))

so its draws depend only on (seed, d, k) and never on which worker runs
it or in what order. Results are reassembled in block order, which makes
every output bit-identical for any thread count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, TypeVar

import numpy as np

from .errors import ValidationError

BLOCK_SIZE = 4096
RNG_ID = f"philox4x64-seedseq-b{BLOCK_SIZE}"

# Substream domains keep null calibration and scenario draws disjoint.
DOMAIN_NULL = 1
DOMAIN_SCENARIO = 2

T = TypeVar("T")


def check_seed(seed) -> int:
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValidationError("seed must be an unsigned 64-bit integer")
    return seed


def substream(seed: int, domain: int, block: int) -> np.random.Generator:
    ss = np.random.SeedSequence(check_seed(seed), spawn_key=(domain, block))
    return np.random.Generator(np.random.Philox(ss))


def block_bounds(n: int, block_size: int = BLOCK_SIZE) -> list[tuple[int, int]]:
    return [(lo, min(lo + block_size, n)) for lo in range(0, n, block_size)]


def resolve_threads(threads: int | None) -> int:
    if threads is None or threads <= 0:
        return os.cpu_count() or 1
    return int(threads)


def map_blocks(
    fn: Callable[[np.random.Generator, int, int], T],
    n: int,
    seed: int,
    domain: int,
    threads: int | None = None,
) -> list[T]:
    """Run ``fn(rng, start, stop)`` over every block of ``range(n)``.

    Returns the per-block results in block order.
    """
    bounds = block_bounds(n)

    def run(k):
        lo, hi = bounds[k]
        return fn(substream(seed, domain, k), lo, hi)

    workers = min(resolve_threads(threads), len(bounds))
    if workers <= 1:
        return [run(k) for k in range(len(bounds))]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, range(len(bounds))))
