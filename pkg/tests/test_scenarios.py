import math

import numpy as np
import pytest
from scipy import special

import oracles
from omnitest import rng as orng
from omnitest.errors import ConfigurationError, ValidationError
from omnitest.methods import METHODS, Calibration
from omnitest.scenarios import (
    ScenarioSpec,
    binomial_block,
    chi2_2x2,
    estimate_power,
    gen_binomial_pvalues,
    gen_ztest_pvalues,
    m1_grid,
    minimax_power,
    ztest_block,
)
from omnitest.stats_math import std_normal_cdf, std_normal_quantile


@pytest.fixture(scope="module")
def cal():
    return Calibration(replicates=10_000, seed=31)


def test_spec_validation():
    with pytest.raises(ValidationError):
        ScenarioSpec("ZTestEqual", 5, 6, 10)
    with pytest.raises(ValidationError):
        ScenarioSpec("Binomial", 5, 1, 10, p0=0.0)
    with pytest.raises(ValidationError):
        ScenarioSpec("Normal", 5, 1, 10)
    assert ScenarioSpec("ZTestEqual", 10, 4, 100).effect == pytest.approx(0.15)
    assert ScenarioSpec("ZTestExp", 10, 0, 100).effect == 0.0


def test_null_ztest_pvalues_uniform():
    spec = ScenarioSpec("ZTestEqual", 10, 0, 50)
    p = np.sort(ztest_block(spec, orng.substream(5, 2, 0), 10_000).ravel())
    ecdf = np.arange(1, p.size + 1) / p.size
    assert np.max(np.abs(ecdf - p)) <= 3 / math.sqrt(p.size)


@pytest.mark.parametrize("family", ["ZTestEqual", "ZTestNegNull", "ZTestExp", "ZTestExpNegNull"])
def test_pvalue_is_upper_tail_of_z(family):
    spec = ScenarioSpec(family, 6, 2, 40)
    p = ztest_block(spec, orng.substream(8, 2, 0), 50)
    # replay the same stream to recover z
    g = orng.substream(8, 2, 0)
    eff = np.zeros((50, 6))
    if family in ("ZTestEqual", "ZTestNegNull"):
        eff[:, :2] = spec.effect
        if family == "ZTestNegNull":
            eff[:, 2:] = -spec.effect
    else:
        eff[:, :2] = g.exponential(1 / spec.exp_rate, size=(50, 2))
        if family == "ZTestExpNegNull":
            eff[:, 2:] = -g.exponential(1 / spec.exp_rate, size=(50, 4))
    z = math.sqrt(40) * eff + g.standard_normal((50, 6))
    np.testing.assert_allclose(p, 1 - std_normal_cdf(z), atol=1e-12)


def test_per_test_power_matches_normal_formula():
    spec = ScenarioSpec("ZTestEqual", 10, 10, 100, gamma=0.3)
    p = ztest_block(spec, orng.substream(3, 2, 0), 10_000)
    rate = np.mean(p <= 0.05)
    analytic = 1 - std_normal_cdf(std_normal_quantile(0.95) - math.sqrt(100) * 0.3 / math.sqrt(10))
    assert abs(rate - analytic) <= 0.01


def test_exponential_effects_have_requested_rate():
    spec = ScenarioSpec("ZTestExp", 4, 4, 1)
    g = orng.substream(1, 2, 0)
    d = g.exponential(1 / spec.exp_rate, size=200_000)
    assert abs(d.mean() - 1 / (3 * math.sqrt(4))) < 0.002


def test_negative_nulls_are_stochastically_larger():
    a = ztest_block(ScenarioSpec("ZTestNegNull", 10, 2, 100), orng.substream(4, 2, 0), 5000)[:, 2:]
    b = ztest_block(ScenarioSpec("ZTestEqual", 10, 2, 100), orng.substream(4, 2, 0), 5000)[:, 2:]
    assert np.all(a >= b)


def test_single_vector_generators():
    g = orng.substream(1, 2, 0)
    assert gen_ztest_pvalues(ScenarioSpec("ZTestEqual", 7, 3, 10), g).m == 7
    assert gen_binomial_pvalues(ScenarioSpec("Binomial", 7, 3, 10), g).m == 7
    with pytest.raises(ValidationError):
        gen_ztest_pvalues(ScenarioSpec("Binomial", 7, 3, 10), g)


class TestChi2x2:
    def test_identical_groups(self):
        for x in (0, 7, 25, 50):
            assert chi2_2x2(x, 50, x, 50) == 1.0

    def test_degenerate_margins(self):
        assert chi2_2x2(0, 20, 0, 20) == 1.0
        assert chi2_2x2(20, 20, 20, 20) == 1.0
        assert chi2_2x2(0, 20, 0, 20, continuity=False) == 1.0

    def test_hand_oracle(self):
        yates = chi2_2x2(10, 50, 20, 50, True)
        plain = chi2_2x2(10, 50, 20, 50, False)
        assert yates == pytest.approx(0.04953461343562672, abs=1e-12)
        assert plain == pytest.approx(0.029096331741252073, abs=1e-12)
        assert yates != plain
        for tab in [(3, 10, 8, 10), (1, 30, 0, 12), (44, 50, 41, 60)]:
            for cc in (True, False):
                assert chi2_2x2(*tab, cc) == pytest.approx(oracles.chi2_2x2_hand(*tab, cc), abs=1e-12)

    def test_yates_never_overcorrects(self):
        # |O - E| < 0.5 gives statistic 0, hence p = 1
        assert chi2_2x2(10, 21, 10, 20) == 1.0

    def test_domain(self):
        with pytest.raises(ValidationError):
            chi2_2x2(0, 0, 1, 5)
        with pytest.raises(ValidationError):
            chi2_2x2(6, 5, 1, 5)

    def test_all_success_groups_via_generator(self):
        spec = ScenarioSpec("Binomial", 5, 0, 10, p0=0.999999, p1=0.999999)
        p = binomial_block(spec, orng.substream(2, 2, 0), 100)
        assert np.all(p == 1.0)


def test_binomial_null_is_conservative():
    for p0, n in [(0.05, 10), (0.2, 50), (0.5, 100)]:
        spec = ScenarioSpec("Binomial", 10, 0, n, p0=p0, p1=p0)
        p = binomial_block(spec, orng.substream(6, 2, 0), 3000).ravel()
        grid = np.linspace(0.001, 1, 1000)
        ecdf = np.searchsorted(np.sort(p), grid, side="right") / p.size
        assert np.max(ecdf - grid) <= 3 / math.sqrt(p.size)


def test_saturation(cal):
    spec = ScenarioSpec("ZTestEqual", 10, 10, 100, gamma=10.0)
    for r in estimate_power(spec, METHODS, 1000, 4, cal):
        assert r.power == 1.0, r.method
    # KS is bounded by the fraction of alternatives, everything else saturates
    spec = ScenarioSpec("ZTestEqual", 10, 3, 100, gamma=10.0)
    for r in estimate_power(spec, [x for x in METHODS if x != "ks"], 1000, 4, cal):
        assert r.power == 1.0, r.method


def test_power_determinism_across_threads(cal):
    spec = ScenarioSpec("ZTestExpNegNull", 10, 3, 100)
    a = estimate_power(spec, ["omnibus-logp", "fisher", "hc"], 9000, 5, cal, threads=1)
    b = estimate_power(spec, ["omnibus-logp", "fisher", "hc"], 9000, 5, cal, threads=3)
    assert [r.rejections for r in a] == [r.rejections for r in b]


def test_missing_calibration_is_configuration_error():
    strict = Calibration(replicates=1000, seed=1, autobuild=False)
    spec = ScenarioSpec("ZTestEqual", 10, 3, 100)
    with pytest.raises(ConfigurationError):
        estimate_power(spec, ["omnibus-logp"], 100, 1, strict)
    estimate_power(spec, ["fisher"], 100, 1, strict)


def test_power_result_fields(cal):
    (r,) = estimate_power(ScenarioSpec("ZTestEqual", 10, 3, 100), ["omnibus-logp"], 500, 9, cal)
    assert r.power == r.rejections / 500
    assert r.replicates == 10_000 and r.seed == 9 and r.rng_id == orng.RNG_ID
    row = r.csv_row()
    assert row[0] == "ZTestEqual" and row[5] == "omnibus-logp" and len(row) == 11


def test_m1_grid():
    assert m1_grid(10) == list(range(1, 11))
    assert m1_grid(1000) == [1, 2, 5, 10, 20, 50, 100, 200, 500, 1000]
    assert m1_grid(300) == [1, 2, 5, 10, 20, 50, 100, 200, 300]


def test_power_nondecreasing_in_n(cal):
    methods = ["omnibus-logp", "fisher", "simes", "stouffer", "hc"]
    for m1 in (1, 4, 10):
        prev = None
        for n in (25, 50, 100, 200):
            rows = estimate_power(ScenarioSpec("ZTestEqual", 10, m1, n), methods, 4000, 12, cal)
            if prev:
                for a, b in zip(prev, rows):
                    se = math.hypot(a.std_error, b.std_error)
                    assert b.power >= a.power - 2 * se, (m1, n, b.method)
            prev = rows


def test_negative_nulls_hurt_fisher_not_bonferroni(cal):
    methods = ["bonferroni", "fisher"]
    drops = []
    for n in (100, 200):
        eq = estimate_power(ScenarioSpec("ZTestEqual", 10, 1, n), methods, 10_000, 21, cal)
        neg = estimate_power(ScenarioSpec("ZTestNegNull", 10, 1, n), methods, 10_000, 21, cal)
        assert abs(eq[0].power - neg[0].power) <= 0.03
        drops.append(eq[1].power - neg[1].power)
    assert min(drops) >= 0.3


def test_minimax_tracks_argmin(cal):
    res = minimax_power(10, 100, 0.3, ["bonferroni", "stouffer"], 2000, 3, cal, m1_values=[1, 5, 10])
    assert len(res.results) == 6
    # Stouffer is weakest with one alternative, Bonferroni with many
    assert res.minima["stouffer"].scenario.m1 == 1
    assert res.minima["bonferroni"].scenario.m1 == 10
    assert res.power("stouffer") == min(r.power for r in res.results if r.method == "stouffer")
