"""Competitor global tests: Fisher, Stouffer, Bonferroni/Sidak, Simes, HC, KS.

Each test has a ``*_batch`` kernel operating on a (k, m) array whose rows
are sorted ascending, and a public function taking one p-value vector and
returning a :class:`TestReport`. The public functions sort first and
reduce in sorted order, so reports do not depend on input order.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special

from .errors import ConfigurationError, ValidationError
from .montecarlo import McReference, build_mc_reference
from .pvalues import PValueVector, TestReport
from .stats_math import chi_square_sf
from .transforms import CLAMP_FLOOR, INV_NORMAL_Z, _apply

HC_CEILING = 1.0 - 1e-16
DEFAULT_ALPHA0 = 0.5


def _rows(p: PValueVector) -> np.ndarray:
    return p.sorted[np.newaxis, :]


# -- batch kernels -----------------------------------------------------------


def fisher_batch(P):
    m = P.shape[1]
    stat = -2.0 * np.sum(np.log(P), axis=1)
    return stat, chi_square_sf(stat, 2 * m)


def stouffer_batch(P):
    m = P.shape[1]
    z = _apply(P, INV_NORMAL_Z)
    stat = np.sum(z, axis=1) / math.sqrt(m)
    return stat, special.ndtr(-stat)


def bonferroni_batch(P):
    m = P.shape[1]
    stat = P[:, 0]
    return stat, np.minimum(1.0, m * stat)


def sidak_batch(P):
    m = P.shape[1]
    stat = P[:, 0]
    # 1 - (1 - p)^m without cancellation for small p
    with np.errstate(divide="ignore"):
        return stat, -np.expm1(m * np.log1p(-stat))


def simes_batch(P):
    m = P.shape[1]
    k = np.arange(1, m + 1, dtype=float)
    adj = P * (m / k)
    stat = adj.min(axis=1)
    return stat, np.minimum(stat, 1.0)


def hc_count(m: int, alpha0: float) -> int:
    """Number of leading order statistics HC maximizes over: floor(alpha0 m), at least 1."""
    if not 0.0 < alpha0 <= 1.0:
        raise ValidationError("alpha0 must lie in (0, 1]")
    return max(1, min(m, int(math.floor(alpha0 * m * (1 + 1e-12)))))


def hc_batch_stat(P, alpha0=DEFAULT_ALPHA0):
    m = P.shape[1]
    r = hc_count(m, alpha0)
    head = P[:, :r]
    i = np.arange(1, r + 1, dtype=float)
    q = np.clip(head, CLAMP_FLOOR, HC_CEILING)
    terms = math.sqrt(m) * (i / m - head) / np.sqrt(q * (1.0 - q))
    return terms.max(axis=1)


def ks_batch_stat(P):
    m = P.shape[1]
    i = np.arange(1, m + 1, dtype=float)
    above = (i / m - P).max(axis=1)
    below = (P - (i - 1) / m).max(axis=1)
    return np.maximum(above, below)


# -- single-vector API -------------------------------------------------------


def _closed_form(method, kernel, p):
    p = PValueVector.coerce(p)
    stat, pv = kernel(_rows(p))
    return TestReport(method, float(stat[0]), float(pv[0]), p.m)


def fisher_test(p) -> TestReport:
    """Fisher's combination: T = -2 sum log p_i, referred to chi-square with 2m df."""
    return _closed_form("fisher", fisher_batch, p)


def stouffer_test(p) -> TestReport:
    """Stouffer's z: sum of Phi^-1(1 - p_i) over sqrt(m), referred to N(0, 1).

    p-values are clamped to [1e-300, 1 - 2**-53] so every z score is finite.
    """
    return _closed_form("stouffer", stouffer_batch, p)


def bonferroni_test(p, independent: bool = False) -> TestReport:
    """Minimum-p test.

    Reports min(1, m * min p), or with ``independent=True`` the Sidak form
    1 - (1 - min p)**m under method name ``"sidak"``.
    """
    if independent:
        return _closed_form("sidak", sidak_batch, p)
    return _closed_form("bonferroni", bonferroni_batch, p)


def sidak_test(p) -> TestReport:
    return bonferroni_test(p, independent=True)


def simes_test(p) -> TestReport:
    """Simes: p = min_k (m / k) p_(k), capped at 1."""
    return _closed_form("simes", simes_batch, p)


def higher_criticism_stat(p, alpha0: float = DEFAULT_ALPHA0) -> float:
    """HC* over the first floor(alpha0 * m) order statistics (at least one).

    The denominator uses p_(i) clamped into [1e-300, 1 - 1e-16].
    """
    p = PValueVector.coerce(p)
    return float(hc_batch_stat(_rows(p), alpha0)[0])


def ks_statistic(p) -> float:
    """Exact sup distance between the empirical CDF of p and the Uniform(0, 1) CDF."""
    p = PValueVector.coerce(p)
    return float(ks_batch_stat(_rows(p))[0])


def build_hc_reference(m, alpha0=DEFAULT_ALPHA0, replicates=10_000, seed=0, threads=None) -> McReference:
    hc_count(m, alpha0)
    return build_mc_reference(
        lambda P: hc_batch_stat(P, alpha0),
        m, replicates, seed, method="hc", params=(("alpha0", float(alpha0)),), threads=threads,
    )


def build_ks_reference(m, replicates=10_000, seed=0, threads=None) -> McReference:
    return build_mc_reference(ks_batch_stat, m, replicates, seed, method="ks", threads=threads)


def _check_reference(ref: McReference, method: str, m: int):
    if ref.method != method:
        raise ConfigurationError(f"reference was built for {ref.method!r}, not {method!r}")
    if ref.m != m:
        raise ConfigurationError(f"reference was built for m={ref.m}, input has m={m}")


def hc_test(p, alpha0: float, null: McReference) -> TestReport:
    """Higher criticism with a Monte-Carlo calibrated p-value."""
    p = PValueVector.coerce(p)
    _check_reference(null, "hc", p.m)
    ref_alpha0 = null.param("alpha0")
    if ref_alpha0 is not None and ref_alpha0 != float(alpha0):
        raise ConfigurationError(f"reference was built for alpha0={ref_alpha0}, got {alpha0}")
    stat = higher_criticism_stat(p, alpha0)
    return TestReport("hc", stat, null.pvalue(stat), p.m, null.calibration)


def ks_uniform_test(p, null: McReference) -> TestReport:
    """Kolmogorov-Smirnov distance to uniform with a Monte-Carlo calibrated p-value."""
    p = PValueVector.coerce(p)
    _check_reference(null, "ks", p.m)
    stat = ks_statistic(p)
    return TestReport("ks", stat, null.pvalue(stat), p.m, null.calibration)
