"""Simulation scenarios and the power-estimation engine.

Continuous scenarios draw one z statistic per hypothesis,
Z_i ~ N(sqrt(n) * effect_i, 1), and use the one-sided p-value 1 - Phi(Z_i).
The discrete scenario compares two Binomial(n, .) groups per hypothesis
with a 2x2 chi-square test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import special

from . import rng as _rng
from .errors import ValidationError
from .methods import CLOSED_FORM, Calibration, parse_methods
from .pvalues import PValueVector
from .stats_math import chi_square_sf
from .transforms import CLAMP_FLOOR

FAMILIES = ("ZTestEqual", "ZTestNegNull", "ZTestExp", "ZTestExpNegNull", "Binomial")
ZTEST_FAMILIES = FAMILIES[:4]
LARGE_M_GRID = (1, 2, 5, 10, 20, 50, 100, 200, 500, 1000)
FULL_SWEEP_MAX_M = 50


@dataclass(frozen=True)
class ScenarioSpec:
    family: str
    m: int
    m1: int
    n: int
    gamma: float = 0.3
    exp_rate_scale: float = 3.0
    p0: float = 0.4
    p1: float = 0.6
    alpha: float = 0.05
    continuity: bool = True

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValidationError(f"unknown family {self.family!r}; expected one of {', '.join(FAMILIES)}")
        if self.m < 1:
            raise ValidationError("m must be >= 1")
        if not 0 <= self.m1 <= self.m:
            raise ValidationError(f"m1 must satisfy 0 <= m1 <= m (got m1={self.m1}, m={self.m})")
        if self.n < 1:
            raise ValidationError("n must be >= 1")
        if not (0 < self.p0 < 1 and 0 < self.p1 < 1):
            raise ValidationError("p0 and p1 must lie in (0, 1)")
        if not 0 < self.alpha < 1:
            raise ValidationError("alpha must lie in (0, 1)")
        if self.exp_rate_scale <= 0:
            raise ValidationError("exp_rate_scale must be positive")

    @property
    def effect(self) -> float:
        """Per-alternative standardized effect gamma / sqrt(m1); 0 when m1 = 0."""
        return self.gamma / math.sqrt(self.m1) if self.m1 else 0.0

    @property
    def exp_rate(self) -> float:
        return self.exp_rate_scale * math.sqrt(self.m1)


@dataclass(frozen=True)
class PowerResult:
    scenario: ScenarioSpec
    method: str
    nsim: int
    rejections: int
    seed: int
    rng_id: str
    replicates: int | None = field(default=None, compare=False)

    @property
    def power(self) -> float:
        return self.rejections / self.nsim

    @property
    def std_error(self) -> float:
        q = self.power
        return math.sqrt(q * (1 - q) / self.nsim)

    def csv_row(self) -> list:
        s = self.scenario
        return [s.family, s.m, s.m1, s.n, repr(s.gamma), self.method, self.nsim,
                self.rejections, repr(self.power), self.seed, self.rng_id]


CSV_HEADER = ["family", "m", "m1", "n", "gamma", "method", "nsim", "rejections", "power", "seed", "rng_id"]


# -- generators ----------------------------------------------------------------


def _effects(spec: ScenarioSpec, rng: np.random.Generator, rows: int) -> np.ndarray:
    m, m1 = spec.m, spec.m1
    eff = np.zeros((rows, m))
    if m1 == 0:
        return eff
    fam = spec.family
    if fam in ("ZTestEqual", "ZTestNegNull"):
        eff[:, :m1] = spec.effect
        if fam == "ZTestNegNull":
            eff[:, m1:] = -spec.effect
    else:
        scale = 1.0 / spec.exp_rate
        eff[:, :m1] = rng.exponential(scale, size=(rows, m1))
        if fam == "ZTestExpNegNull":
            eff[:, m1:] = -rng.exponential(scale, size=(rows, m - m1))
    return eff


def ztest_block(spec: ScenarioSpec, rng: np.random.Generator, rows: int) -> np.ndarray:
    """(rows, m) one-sided z-test p-values; alternatives occupy the first m1 columns."""
    if spec.family not in ZTEST_FAMILIES:
        raise ValidationError(f"{spec.family} is not a z-test family")
    eff = _effects(spec, rng, rows)
    z = math.sqrt(spec.n) * eff + rng.standard_normal((rows, spec.m))
    return np.maximum(special.ndtr(-z), CLAMP_FLOOR)


def chi2_2x2(x0, n0, x1, n1, continuity: bool = True):
    """p-value of the chi-square test (1 df) on the table [[x0, n0-x0], [x1, n1-x1]].

    With ``continuity`` the Yates correction min(0.5, |O - E|) is applied.
    Tables with an empty success or failure margin return p = 1.
    Vectorized over array arguments.
    """
    x0, x1 = np.asarray(x0, dtype=float), np.asarray(x1, dtype=float)
    n0, n1 = np.asarray(n0, dtype=float), np.asarray(n1, dtype=float)
    if np.any(n0 <= 0) or np.any(n1 <= 0):
        raise ValidationError("group sizes must be positive")
    if np.any((x0 < 0) | (x0 > n0) | (x1 < 0) | (x1 > n1)):
        raise ValidationError("success counts must lie in [0, n]")
    total = n0 + n1
    succ = x0 + x1
    fail = total - succ
    degenerate = (succ == 0) | (fail == 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        dev = np.abs(x0 - n0 * succ / total)
        if continuity:
            dev = dev - np.minimum(0.5, dev)
        stat = dev**2 * total * (1 / n0 + 1 / n1) * (1 / succ + 1 / fail)
    stat = np.where(degenerate, 0.0, stat)
    p = np.where(degenerate, 1.0, chi_square_sf(stat, 1))
    return float(p) if p.ndim == 0 else p


def binomial_block(spec: ScenarioSpec, rng: np.random.Generator, rows: int) -> np.ndarray:
    if spec.family != "Binomial":
        raise ValidationError(f"{spec.family} is not the Binomial family")
    m, m1, n = spec.m, spec.m1, spec.n
    probs = np.full(m, spec.p0)
    probs[:m1] = spec.p1
    x0 = rng.binomial(n, spec.p0, size=(rows, m))
    x1 = rng.binomial(n, probs, size=(rows, m))
    return np.maximum(chi2_2x2(x0, n, x1, n, spec.continuity), CLAMP_FLOOR)


def pvalue_block(spec: ScenarioSpec, rng: np.random.Generator, rows: int) -> np.ndarray:
    if spec.family == "Binomial":
        return binomial_block(spec, rng, rows)
    return ztest_block(spec, rng, rows)


def gen_ztest_pvalues(spec: ScenarioSpec, rng: np.random.Generator) -> PValueVector:
    return PValueVector(ztest_block(spec, rng, 1)[0])


def gen_binomial_pvalues(spec: ScenarioSpec, rng: np.random.Generator) -> PValueVector:
    return PValueVector(binomial_block(spec, rng, 1)[0])


# -- power ---------------------------------------------------------------------


def estimate_power(
    spec: ScenarioSpec,
    methods: Iterable[str] | str | None,
    nsim: int,
    seed: int,
    calibration: Calibration,
    threads: int | None = None,
) -> list[PowerResult]:
    """Rejection rates at ``spec.alpha`` over ``nsim`` simulated vectors.

    Every method sees the same simulated vectors. Rejection counts are
    summed per block, so the result is independent of ``threads``.
    """
    methods = parse_methods(methods)
    nsim = int(nsim)
    if nsim < 1:
        raise ValidationError("nsim must be >= 1")
    seed = _rng.check_seed(seed)
    # Resolve calibrations up front: fails fast and keeps workers read-only.
    for meth in methods:
        if meth not in CLOSED_FORM:
            calibration.get(meth, spec.m)

    def block(g, lo, hi):
        P = pvalue_block(spec, g, hi - lo)
        P.sort(axis=1)
        return np.array([np.count_nonzero(calibration.pvalues(meth, P) <= spec.alpha) for meth in methods])

    counts = np.sum(_rng.map_blocks(block, nsim, seed, _rng.DOMAIN_SCENARIO, threads), axis=0)
    return [
        PowerResult(spec, meth, nsim, int(c), seed, _rng.RNG_ID,
                    None if meth in CLOSED_FORM else calibration.replicates)
        for meth, c in zip(methods, counts)
    ]


def m1_grid(m: int) -> list[int]:
    """Every m1 in 1..m for m <= 50; a log-like subgrid (always including m) beyond."""
    if m <= FULL_SWEEP_MAX_M:
        return list(range(1, m + 1))
    grid = [k for k in LARGE_M_GRID if k < m]
    return grid + [m]


@dataclass
class MinimaxResult:
    minima: dict[str, PowerResult]
    results: list[PowerResult]

    def power(self, method: str) -> float:
        return self.minima[method].power


def minimax_power(
    m: int,
    n: int,
    gamma: float,
    methods,
    nsim: int,
    seed: int,
    calibration: Calibration,
    *,
    family: str = "ZTestEqual",
    m1_values: Sequence[int] | None = None,
    threads: int | None = None,
    progress: Callable[[str], None] | None = None,
    **spec_kwargs,
) -> MinimaxResult:
    """Minimum power over m1 at constant cumulative effect gamma.

    Each m1 uses per-alternative effect gamma / sqrt(m1); the minimizing
    scenario is kept for every method.
    """
    methods = parse_methods(methods)
    grid = list(m1_values) if m1_values is not None else m1_grid(m)
    base = ScenarioSpec(family, m, grid[0], n, gamma, **spec_kwargs)
    results, minima = [], {}
    for m1 in grid:
        spec = replace(base, m1=int(m1))
        rows = estimate_power(spec, methods, nsim, seed, calibration, threads)
        if progress:
            progress(f"m={m} n={n} m1={m1}: " + " ".join(f"{r.method}={r.power:.4f}" for r in rows))
        results.extend(rows)
        for r in rows:
            if r.method not in minima or r.rejections < minima[r.method].rejections:
                minima[r.method] = r
    return MinimaxResult(minima, results)
