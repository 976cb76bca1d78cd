"""Omnibus test for the global null hypothesis over independent p-values."""

__version__ = "0.1.0"

from .classic import (
    bonferroni_test,
    build_hc_reference,
    build_ks_reference,
    fisher_test,
    hc_test,
    higher_criticism_stat,
    ks_statistic,
    ks_uniform_test,
    sidak_test,
    simes_test,
    stouffer_test,
)
from .errors import (
    CapacityError,
    ConfigurationError,
    OmnitestError,
    TableFileError,
    ValidationError,
)
from .methods import METHODS, Calibration, run_method
from .montecarlo import McReference, build_mc_reference, mc_null_pvalue
from .omnibus import NullTable, build_null_table, cumulative_scores, omnibus_stat, omnibus_test
from .persistence import load_null_table, read_pvalues, save_null_table
from .pvalues import PValueVector, TestReport
from .scenarios import (
    PowerResult,
    ScenarioSpec,
    chi2_2x2,
    estimate_power,
    gen_binomial_pvalues,
    gen_ztest_pvalues,
    minimax_power,
)
from .transforms import TransformKind, transform
