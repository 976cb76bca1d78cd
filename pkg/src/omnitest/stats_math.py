"""Standard normal CDF/quantile and the chi-square upper tail.

Thin, validated wrappers around the Cephes-derived kernels in
``scipy.special``. All functions accept scalars or arrays and return the
same shape.
"""

import numpy as np
from scipy import special

from .errors import ValidationError

__all__ = ["std_normal_cdf", "std_normal_sf", "std_normal_quantile", "chi_square_sf"]


def _unwrap(x, out):
    return float(out) if np.ndim(x) == 0 else out


def std_normal_cdf(x):
    """Phi(x) for the standard normal distribution."""
    x = np.asarray(x, dtype=float)
    return _unwrap(x, special.ndtr(x))


def std_normal_sf(x):
    """1 - Phi(x), computed as Phi(-x) so the upper tail keeps full precision."""
    x = np.asarray(x, dtype=float)
    return _unwrap(x, special.ndtr(-x))


def std_normal_quantile(p):
    """Inverse of :func:`std_normal_cdf` on the open interval (0, 1).

    Raises ValidationError for any p outside (0, 1).
    """
    p = np.asarray(p, dtype=float)
    if not np.all((p > 0.0) & (p < 1.0)):
        raise ValidationError("std_normal_quantile requires 0 < p < 1")
    return _unwrap(p, special.ndtri(p))


def chi_square_sf(x, df):
    """P(X > x) for X ~ chi-square with ``df`` degrees of freedom.

    Evaluated as the regularized upper incomplete gamma Q(df/2, x/2).
    """
    x = np.asarray(x, dtype=float)
    if np.any(np.isnan(x)) or np.any(x < 0):
        raise ValidationError("chi_square_sf requires x >= 0")
    df_arr = np.asarray(df)
    if np.any(df_arr < 1) or np.any(np.asarray(df_arr, dtype=float) != np.floor(df_arr)):
        raise ValidationError("chi_square_sf requires an integer df >= 1")
    out = special.gammaincc(np.asarray(df_arr, dtype=float) / 2.0, x / 2.0)
    if np.ndim(x) == 0 and np.ndim(df_arr) == 0:
        return float(out)
    return out
