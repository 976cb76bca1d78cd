"""The omnibus test: calibrated partial sums of transformed order statistics.

For sorted p-values p_(1) <= ... <= p_(m) and a decreasing score h, the
partial sums S_i = h(p_(1)) + ... + h(p_(i)) are each referred to their
simulated null distribution G_i, and the statistic is

    T* = max_i G_i(S_i).

One set of B null replicates serves both purposes: the sorted null S_i
columns give G_i(s) = #{b : S_i^(b) <= s} / (B + 1), and the same ranks,
evaluated on each replicate itself, give the null sample of T*. The
reported p-value is the add-one rank of the observed T* among those.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import rng as _rng
from .errors import ConfigurationError, ValidationError
from .montecarlo import check_capacity, check_dims, map_null_blocks
from .pvalues import CalibrationInfo, PValueVector, TestReport
from .transforms import TransformKind, _apply


def scores_batch(P: np.ndarray, kind: TransformKind) -> np.ndarray:
    """Running sums of h over rows of P, which must already be sorted ascending."""
    return np.cumsum(_apply(P, kind), axis=1)


def cumulative_scores(p, kind) -> np.ndarray:
    """S_1..S_m for one p-value vector: sort ascending, transform, accumulate."""
    p = PValueVector.coerce(p)
    return scores_batch(p.sorted[np.newaxis, :], TransformKind.parse(kind))[0]


@dataclass(frozen=True, eq=False)
class NullTable:
    """Monte-Carlo calibration for one (m, transform) pair.

    ``columns[i]`` holds the B null draws of S_{i+1}, sorted ascending;
    ``tstar_null`` holds the B null draws of T*, sorted ascending.
    """

    m: int
    transform: TransformKind
    replicates: int
    seed: int
    rng_id: str
    columns: np.ndarray = field(repr=False)
    tstar_null: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.columns.shape != (self.m, self.replicates):
            raise ValidationError(
                f"columns have shape {self.columns.shape}, expected {(self.m, self.replicates)}"
            )
        if self.tstar_null.shape != (self.replicates,):
            raise ValidationError("tstar_null must have length B")
        self.columns.setflags(write=False)
        self.tstar_null.setflags(write=False)

    @property
    def method(self) -> str:
        return f"omnibus-{self.transform.tag}"

    @property
    def calibration(self) -> CalibrationInfo:
        return CalibrationInfo(self.replicates, self.seed, self.rng_id)

    def max_ranks(self, sums: np.ndarray) -> np.ndarray:
        """max_i #{b : column_i[b] <= S_i} for each row of a (k, m) array of sums."""
        if sums.shape[1] != self.m:
            raise ConfigurationError(f"null table was built for m={self.m}, input has m={sums.shape[1]}")
        best = np.zeros(sums.shape[0], dtype=np.int64)
        for i in range(self.m):
            np.maximum(best, np.searchsorted(self.columns[i], sums[:, i], side="right"), out=best)
        return best

    def evaluate(self, P: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """T* and p-values for rows of P (rows sorted ascending)."""
        ranks = self.max_ranks(scores_batch(P, self.transform))
        b = self.replicates
        tstar = ranks / (b + 1.0)
        n_ge = b - np.searchsorted(self.tstar_null, tstar, side="left")
        return tstar, (1.0 + n_ge) / (b + 1.0)

    def same_content(self, other: "NullTable") -> bool:
        return (
            self.m == other.m
            and self.transform == other.transform
            and self.replicates == other.replicates
            and self.seed == other.seed
            and self.rng_id == other.rng_id
            and self.columns.tobytes() == other.columns.tobytes()
            and self.tstar_null.tobytes() == other.tstar_null.tobytes()
        )


def build_null_table(
    m: int,
    kind,
    replicates: int = 100_000,
    seed: int = 0,
    *,
    threads: int | None = None,
    memory_budget: int | None = None,
) -> NullTable:
    """Simulate B global-null replicates and calibrate every S_i and T*.

    Bit-for-bit reproducible from (m, kind, B, seed) for any ``threads``.
    """
    m, replicates = check_dims(m, replicates, min_replicates=100)
    kind = TransformKind.parse(kind)
    seed = _rng.check_seed(seed)
    check_capacity(m, replicates, memory_budget)

    parts = map_null_blocks(lambda P, lo, hi: scores_batch(P, kind), m, replicates, seed, threads)
    sums = np.concatenate(parts, axis=0)
    del parts
    columns = np.sort(sums.T, axis=1)
    ranks = np.zeros(replicates, dtype=np.int64)
    for i in range(m):
        np.maximum(ranks, np.searchsorted(columns[i], sums[:, i], side="right"), out=ranks)
    del sums
    tstar_null = np.sort(ranks / (replicates + 1.0))
    return NullTable(m, kind, replicates, seed, _rng.RNG_ID, np.ascontiguousarray(columns), tstar_null)


def _check_table(p: PValueVector, table: NullTable):
    if p.m != table.m:
        raise ConfigurationError(f"null table was built for m={table.m}, input has m={p.m}")


def omnibus_stat(p, table: NullTable) -> float:
    """T* = max_i G_i(S_i), with G_i estimated from ``table``."""
    p = PValueVector.coerce(p)
    _check_table(p, table)
    tstar, _ = table.evaluate(p.sorted[np.newaxis, :])
    return float(tstar[0])


def omnibus_test(p, table: NullTable) -> TestReport:
    p = PValueVector.coerce(p)
    _check_table(p, table)
    tstar, pv = table.evaluate(p.sorted[np.newaxis, :])
    return TestReport(table.method, float(tstar[0]), float(pv[0]), p.m, table.calibration)
