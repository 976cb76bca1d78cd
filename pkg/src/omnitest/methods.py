"""Method registry and a cache of Monte-Carlo calibrations."""

from __future__ import annotations

from typing import Iterable

import numpy as np

from . import classic
from .errors import ConfigurationError, ValidationError
from .montecarlo import McReference
from .omnibus import NullTable, build_null_table, omnibus_test
from .pvalues import PValueVector, TestReport
from .transforms import TransformKind

CLOSED_FORM = {
    "fisher": classic.fisher_batch,
    "stouffer": classic.stouffer_batch,
    "bonferroni": classic.bonferroni_batch,
    "sidak": classic.sidak_batch,
    "simes": classic.simes_batch,
}
OMNIBUS = ("omnibus-p", "omnibus-logp", "omnibus-z", "omnibus-power")
METHODS = ("fisher", "stouffer", "bonferroni", "sidak", "simes", "hc", "ks") + OMNIBUS


def is_calibrated(method: str) -> bool:
    return method not in CLOSED_FORM


def parse_methods(methods: str | Iterable[str] | None) -> list[str]:
    """Validate method names; ``None`` or ``"all"`` selects every method."""
    if methods is None:
        return list(METHODS)
    if isinstance(methods, str):
        methods = [s for s in (t.strip() for t in methods.split(",")) if s]
    out = []
    for name in methods:
        if name == "all":
            out.extend(x for x in METHODS if x not in out)
            continue
        if name not in METHODS:
            raise ValidationError(f"unknown method {name!r}; expected one of {', '.join(METHODS)}")
        if name not in out:
            out.append(name)
    if not out:
        raise ValidationError("no methods selected")
    return out


class Calibration:
    """Null tables and HC/KS references, keyed by (method, m).

    With ``autobuild=True`` missing entries are simulated on first use from
    (replicates, seed); otherwise a missing entry is a ConfigurationError.
    Entries are immutable and safe to share across threads once built.
    """

    def __init__(
        self,
        replicates: int = 10_000,
        seed: int = 0,
        alpha0: float = classic.DEFAULT_ALPHA0,
        power_alpha: float = 0.5,
        threads: int | None = None,
        autobuild: bool = True,
    ):
        self.replicates = int(replicates)
        self.seed = int(seed)
        self.alpha0 = float(alpha0)
        self.power_alpha = float(power_alpha)
        self.threads = threads
        self.autobuild = autobuild
        self._store: dict[tuple[str, int], NullTable | McReference] = {}

    def add(self, ref: NullTable | McReference) -> None:
        method = ref.method
        if isinstance(ref, McReference) and method == "hc" and ref.param("alpha0") != self.alpha0:
            raise ConfigurationError(f"HC reference uses alpha0={ref.param('alpha0')}, calibration expects {self.alpha0}")
        self._store[(method, ref.m)] = ref

    def __contains__(self, key) -> bool:
        return key in self._store

    def get(self, method: str, m: int):
        key = (method, int(m))
        if key not in self._store:
            if not self.autobuild:
                raise ConfigurationError(f"no null calibration for method {method!r} at m={m}")
            self._store[key] = self._build(method, int(m))
        return self._store[key]

    def _build(self, method, m):
        if method in OMNIBUS:
            kind = TransformKind(method.split("-", 1)[1], self.power_alpha)
            return build_null_table(m, kind, self.replicates, self.seed, threads=self.threads)
        if method == "hc":
            return classic.build_hc_reference(m, self.alpha0, self.replicates, self.seed, self.threads)
        if method == "ks":
            return classic.build_ks_reference(m, self.replicates, self.seed, self.threads)
        raise ConfigurationError(f"method {method!r} needs no calibration")

    def pvalues(self, method: str, P: np.ndarray) -> np.ndarray:
        """p-values of ``method`` for each row of P (rows sorted ascending)."""
        if method in CLOSED_FORM:
            return CLOSED_FORM[method](P)[1]
        ref = self.get(method, P.shape[1])
        if method in OMNIBUS:
            return ref.evaluate(P)[1]
        if method == "hc":
            return ref.pvalue(classic.hc_batch_stat(P, self.alpha0))
        return ref.pvalue(classic.ks_batch_stat(P))


def run_method(method: str, p, calibration: Calibration | None = None) -> TestReport:
    """Apply one named method to a single p-value vector."""
    p = PValueVector.coerce(p)
    if method == "fisher":
        return classic.fisher_test(p)
    if method == "stouffer":
        return classic.stouffer_test(p)
    if method == "bonferroni":
        return classic.bonferroni_test(p)
    if method == "sidak":
        return classic.sidak_test(p)
    if method == "simes":
        return classic.simes_test(p)
    if calibration is None:
        raise ConfigurationError(f"method {method!r} needs a Monte-Carlo calibration")
    ref = calibration.get(method, p.m)
    if method == "hc":
        return classic.hc_test(p, calibration.alpha0, ref)
    if method == "ks":
        return classic.ks_uniform_test(p, ref)
    if method in OMNIBUS:
        return omnibus_test(p, ref)
    raise ValidationError(f"unknown method {method!r}")
