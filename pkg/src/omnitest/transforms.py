"""Decreasing score transforms applied to p-values before summation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import ValidationError

#: p-values are clamped to at least this before log / power / normal scores.
CLAMP_FLOOR = 1e-300
# Largest double below 1; keeps the z score finite at p = 1.
_Z_CEILING = np.nextafter(1.0, 0.0)

TAGS = ("p", "logp", "z", "power")


@dataclass(frozen=True)
class TransformKind:
    """One of the four score transforms, identified by its CLI tag.

    ``alpha`` is only meaningful for the ``power`` transform, h(p) = p**-alpha.
    """

    tag: str
    alpha: float = 0.5

    def __post_init__(self):
        if self.tag not in TAGS:
            raise ValidationError(f"unknown transform {self.tag!r}; expected one of {TAGS}")
        if self.tag == "power":
            if not (self.alpha > 0 and np.isfinite(self.alpha)):
                raise ValidationError("power transform requires alpha > 0")
        else:
            # alpha is irrelevant elsewhere; normalize so equality is by tag only
            object.__setattr__(self, "alpha", 0.5)

    @classmethod
    def parse(cls, value: str | "TransformKind", alpha: float = 0.5) -> "TransformKind":
        if isinstance(value, TransformKind):
            return value
        return cls(str(value), alpha)

    def __str__(self):
        return self.tag


ONE_MINUS_P = TransformKind("p")
NEG_LOG = TransformKind("logp")
INV_NORMAL_Z = TransformKind("z")
POWER = TransformKind("power")


def transform(p, kind):
    """Apply h(p) elementwise. Scalars in, scalar out.

    Values below ``CLAMP_FLOOR`` are clamped to it rather than rejected;
    range validation belongs to :class:`~omnitest.pvalues.PValueVector`.
    """
    kind = TransformKind.parse(kind)
    arr = np.asarray(p, dtype=float)
    if np.any(~(arr <= 1.0)) or np.any(arr <= 0.0):
        raise ValidationError("transform requires p-values in (0, 1]")
    out = _apply(arr, kind)
    return float(out) if np.ndim(p) == 0 else out


def _apply(arr, kind):
    # Unvalidated fast path for simulation hot loops.
    tag = kind.tag
    if tag == "p":
        return 1.0 - arr
    clamped = np.maximum(arr, CLAMP_FLOOR)
    if tag == "logp":
        return -np.log(clamped)
    if tag == "z":
        return -special.ndtri(np.minimum(clamped, _Z_CEILING))
    return clamped ** (-kind.alpha)
