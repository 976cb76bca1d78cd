"""Validated p-value input and the report type returned by every test."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import ValidationError


class PValueVector:
    """An immutable vector of m >= 1 p-values, each in (0, 1].

    The original order is kept in ``values``; ``sorted`` holds the
    ascending order statistics used by every test.
    """

    __slots__ = ("values", "sorted", "m")

    def __init__(self, values: Iterable[float]):
        arr = np.array(values, dtype=float).ravel()
        if arr.size == 0:
            raise ValidationError("at least one p-value is required")
        bad = ~((arr > 0.0) & (arr <= 1.0))
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise ValidationError(
                f"p-value #{i + 1} = {arr[i]!r} is outside (0, 1]"
            )
        arr.setflags(write=False)
        srt = np.sort(arr)
        srt.setflags(write=False)
        self.values = arr
        self.sorted = srt
        self.m = int(arr.size)

    @classmethod
    def coerce(cls, p) -> "PValueVector":
        return p if isinstance(p, cls) else cls(p)

    def __len__(self):
        return self.m

    def __iter__(self):
        return iter(self.values.tolist())

    def __repr__(self):
        return f"PValueVector({self.values.tolist()!r})"


@dataclass(frozen=True)
class CalibrationInfo:
    """Provenance of a Monte-Carlo null reference."""

    replicates: int
    seed: int
    rng_id: str


@dataclass(frozen=True)
class TestReport:
    method: str
    statistic: float
    p_value: float
    m: int
    calibration: CalibrationInfo | None = None

    __test__ = False  # not a pytest class

    def as_dict(self) -> dict:
        cal = self.calibration
        return {
            "method": self.method,
            "statistic": self.statistic,
            "p_value": self.p_value,
            "m": self.m,
            "replicates": cal.replicates if cal else None,
            "seed": cal.seed if cal else None,
            "rng_id": cal.rng_id if cal else None,
        }
