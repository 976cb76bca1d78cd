"""Shared Monte-Carlo null engine.

Null replicates are m iid Uniform(0, 1] p-values, drawn block-wise from
the substreams in :mod:`omnitest.rng` and returned with each row sorted
ascending. The omnibus null table and the HC/KS references all use this
one generator, so equal (m, B, seed) means equal null p-values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import rng as _rng
from .errors import CapacityError, ValidationError
from .pvalues import CalibrationInfo

DEFAULT_MEMORY_BUDGET = 4 * 2**30
DEFAULT_REPLICATES = 100_000

StatFn = Callable[[np.ndarray], np.ndarray]


def check_capacity(m: int, replicates: int, budget: int | None = None, factor: int = 3) -> None:
    """Raise CapacityError if ``factor * 8 * B * (m + 1)`` bytes exceed the budget."""
    budget = DEFAULT_MEMORY_BUDGET if budget is None else budget
    need = factor * 8 * int(replicates) * (int(m) + 1)
    if need > budget:
        raise CapacityError(
            f"m={m}, B={replicates} needs about {need / 2**30:.2f} GiB "
            f"(budget {budget / 2**30:.2f} GiB); lower --replicates or raise the memory budget"
        )


def check_dims(m: int, replicates: int, min_replicates: int = 1) -> tuple[int, int]:
    m, replicates = int(m), int(replicates)
    if m < 1:
        raise ValidationError("m must be >= 1")
    if replicates < min_replicates:
        raise ValidationError(f"replicates must be >= {min_replicates}")
    return m, replicates


def null_block(rng: np.random.Generator, rows: int, m: int) -> np.ndarray:
    """``rows`` null vectors with sorted rows; values lie in (0, 1]."""
    u = 1.0 - rng.random((rows, m))
    u.sort(axis=1)
    return u


def map_null_blocks(fn, m: int, replicates: int, seed: int, threads: int | None = None) -> list:
    """Apply ``fn(sorted_null_block, start, stop)`` to every block of null replicates."""
    return _rng.map_blocks(
        lambda g, lo, hi: fn(null_block(g, hi - lo, m), lo, hi),
        replicates,
        seed,
        _rng.DOMAIN_NULL,
        threads,
    )


def upper_rank_pvalue(null_sorted: np.ndarray, observed) -> np.ndarray | float:
    """Add-one Monte-Carlo p-value (1 + #{null >= observed}) / (B + 1).

    Ties count as at least as extreme.
    """
    b = null_sorted.shape[0]
    obs = np.asarray(observed, dtype=float)
    n_ge = b - np.searchsorted(null_sorted, obs, side="left")
    out = (1.0 + n_ge) / (b + 1.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class McReference:
    """Sorted null sample of a scalar statistic where larger means more extreme."""

    method: str
    m: int
    replicates: int
    seed: int
    rng_id: str
    null: np.ndarray = field(repr=False)
    params: tuple = ()

    @property
    def calibration(self) -> CalibrationInfo:
        return CalibrationInfo(self.replicates, self.seed, self.rng_id)

    def param(self, name, default=None):
        return dict(self.params).get(name, default)

    def pvalue(self, observed):
        return upper_rank_pvalue(self.null, observed)


def build_mc_reference(
    stat_fn: StatFn,
    m: int,
    replicates: int,
    seed: int,
    *,
    method: str = "custom",
    params: tuple = (),
    threads: int | None = None,
    memory_budget: int | None = None,
) -> McReference:
    """Simulate the null law of ``stat_fn``.

    ``stat_fn`` receives a (k, m) array of null p-values with rows sorted
    ascending and must return k statistics.
    """
    m, replicates = check_dims(m, replicates)
    seed = _rng.check_seed(seed)
    check_capacity(m, replicates, memory_budget, factor=1)
    parts = map_null_blocks(lambda P, lo, hi: np.asarray(stat_fn(P), dtype=float), m, replicates, seed, threads)
    null = np.sort(np.concatenate(parts))
    null.setflags(write=False)
    return McReference(method, m, replicates, seed, _rng.RNG_ID, null, tuple(params))


def mc_null_pvalue(stat_fn: StatFn, m: int, replicates: int, seed: int, observed: float, threads=None) -> float:
    """Add-one Monte-Carlo p-value of ``observed`` under ``stat_fn``'s simulated null."""
    ref = build_mc_reference(stat_fn, m, replicates, seed, threads=threads)
    return ref.pvalue(float(observed))
