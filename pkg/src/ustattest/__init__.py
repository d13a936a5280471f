"""Adaptive U-statistic tests for high-dimensional means, covariances and
GLM coefficients, with power planning and a Monte Carlo harness."""

__version__ = "0.1.0"

from .matrix import (
    ColumnStats,
    DataMatrix,
    GroupedSample,
    as_data_matrix,
    center,
    column_stats,
    load_csv,
    save_csv,
)
from .powersums import (
    DistinctSumCache,
    PowerSumTable,
    brute_force_distinct_sum,
    closed_form_distinct_sum,
    distinct_index_sums,
    power_sums,
)
from .distributions import (
    PValue,
    chisq_sf,
    finite_order_pvalue,
    fisher_combine,
    gumbel_cov_pvalue,
    gumbel_mean_pvalue,
    min_combine,
    normal_sf,
    permutation_pvalue,
)
from .results import AdaptiveResult, PowerPlan, UStatResult, parse_orders
from .estimators import (
    CovarianceEqualityTest,
    CovarianceStructureTest,
    GlmScoreTest,
    OneSampleMeanTest,
    TwoSampleMeanTest,
)
from .planner import PlanInput, compare_with_max, d_ratio, rho_curve
from .simulate import RejectionReport, Scenario, generate, run

__all__ = [
    "AdaptiveResult",
    "ColumnStats",
    "CovarianceEqualityTest",
    "CovarianceStructureTest",
    "DataMatrix",
    "DistinctSumCache",
    "GlmScoreTest",
    "GroupedSample",
    "OneSampleMeanTest",
    "PlanInput",
    "PowerPlan",
    "PowerSumTable",
    "PValue",
    "RejectionReport",
    "Scenario",
    "TwoSampleMeanTest",
    "UStatResult",
    "as_data_matrix",
    "brute_force_distinct_sum",
    "center",
    "chisq_sf",
    "closed_form_distinct_sum",
    "column_stats",
    "compare_with_max",
    "d_ratio",
    "distinct_index_sums",
    "finite_order_pvalue",
    "fisher_combine",
    "generate",
    "gumbel_cov_pvalue",
    "gumbel_mean_pvalue",
    "load_csv",
    "min_combine",
    "normal_sf",
    "parse_orders",
    "permutation_pvalue",
    "power_sums",
    "rho_curve",
    "run",
    "save_csv",
]
