"""Where do two distributions differ?

Pointwise two-sample tests of CDF equality with finite-sample strong control
of the familywise error rate, the matching global goodness-of-fit test, and a
Kolmogorov-Smirnov baseline.
"""

from .calibration import (
    DEFAULT_REPS,
    DEFAULT_SEED,
    SUPPORTED_ALPHAS,
    CalibrationRecord,
    PValue,
    cache_lookup_or_build,
    calibrate,
    calibrate_levels,
    p_value,
    simulate_null_stats,
)
from .engine import CountPair, GlobalStat, RejectionRanges, crossing_alpha, global_statistic, rejected_ranges
from .ks import KsResult, ks_p_asymptotic, ks_p_permutation, ks_statistic, ks_test
from .report import ComparisonReport, RunConfig, compare, render_json, render_svg, render_text
from .samples import DataError, GroupedSamples, StepCdf, TieReport, detect_ties, ecdf, load_grouped, pooled_grid

__version__ = "0.1.0"

__all__ = [
    "CalibrationRecord", "ComparisonReport", "CountPair", "DataError", "DEFAULT_REPS",
    "DEFAULT_SEED", "GlobalStat", "GroupedSamples", "KsResult", "PValue", "RejectionRanges",
    "RunConfig", "StepCdf", "SUPPORTED_ALPHAS", "TieReport", "cache_lookup_or_build",
    "calibrate", "calibrate_levels", "compare", "crossing_alpha", "detect_ties", "ecdf",
    "global_statistic", "ks_p_asymptotic", "ks_p_permutation", "ks_statistic", "ks_test",
    "load_grouped", "p_value", "pooled_grid", "rejected_ranges", "render_json", "render_svg",
    "render_text", "simulate_null_stats",
]
