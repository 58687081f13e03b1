"""Forward-search location tests for elliptical models.

The package centers on an anchored-trimming estimator: the mean of the
fraction gamma of observations closest to a hypothesized center in
Mahalanobis distance.  Around it sit a test statistic with a weighted
chi-squared limit, three competitor tests (mean, coordinatewise median,
Hodges-Lehmann), closed-form asymptotic efficiencies for Gaussian, Cauchy,
and a very light-tailed family, and simulation campaigns for power,
finite-sample efficiency, and breakdown behaviour.
"""

from .linalg import (
    DimensionMismatch,
    NotSPD,
    NotSymmetric,
    SpdMatrix,
    mahalanobis_sq,
    trim_count,
)
from .elliptical import (
    CAUCHY,
    DivergentIntegral,
    EllipticalModel,
    FAMILY_TAGS,
    GAUSSIAN,
    LIGHT100,
    MixtureModel,
    component_variance,
    generator_by_name,
    marginal_density_at_zero,
    marginal_density_sq_integral,
    radial_integral,
    standard_model,
    truncated_radial_mean,
)
from .estimators import (
    Estimate,
    EstimatorKind,
    ForwardSearchConfig,
    cw_median,
    estimate,
    forward_search,
    hodges_lehmann,
    sample_mean,
)
from .engine import (
    InfiniteVariance,
    LimitSpec,
    MonteCarloConfig,
    MonteCarloQuantile,
    StatKind,
    TestReport,
    VarianceConstants,
    bootstrap_p_value,
    critical_value,
    empirical_critical_value,
    limit_weights,
    power_curve,
    power_table,
    run_test,
    scatter_scale_constant,
    statistic,
    variance_constants,
)
from .asymptotics import (
    ContiguousSpec,
    OffsetEstimate,
    contiguous_power,
    efficiency,
    efficiency_grid,
    estimate_offsets,
    information_check,
    limit_behavior,
    root_efficiency,
)
from .robustness import (
    BreakdownResult,
    EfficiencyResult,
    SingularCovariance,
    breakdown_experiment,
    empirical_limit_covariance,
    finite_sample_efficiency,
)
from .dataio import Dataset, MalformedTable, read_dataset, write_rows

__version__ = "0.1.0"

__all__ = [
    "BreakdownResult",
    "CAUCHY",
    "ContiguousSpec",
    "Dataset",
    "DimensionMismatch",
    "DivergentIntegral",
    "EfficiencyResult",
    "EllipticalModel",
    "Estimate",
    "EstimatorKind",
    "FAMILY_TAGS",
    "ForwardSearchConfig",
    "GAUSSIAN",
    "InfiniteVariance",
    "LIGHT100",
    "LimitSpec",
    "MalformedTable",
    "MixtureModel",
    "MonteCarloConfig",
    "MonteCarloQuantile",
    "NotSPD",
    "NotSymmetric",
    "OffsetEstimate",
    "SingularCovariance",
    "SpdMatrix",
    "StatKind",
    "TestReport",
    "VarianceConstants",
    "bootstrap_p_value",
    "breakdown_experiment",
    "component_variance",
    "contiguous_power",
    "critical_value",
    "cw_median",
    "efficiency",
    "efficiency_grid",
    "empirical_critical_value",
    "empirical_limit_covariance",
    "estimate",
    "estimate_offsets",
    "finite_sample_efficiency",
    "forward_search",
    "generator_by_name",
    "hodges_lehmann",
    "information_check",
    "limit_behavior",
    "limit_weights",
    "mahalanobis_sq",
    "marginal_density_at_zero",
    "marginal_density_sq_integral",
    "power_curve",
    "power_table",
    "radial_integral",
    "read_dataset",
    "root_efficiency",
    "run_test",
    "sample_mean",
    "scatter_scale_constant",
    "standard_model",
    "statistic",
    "trim_count",
    "truncated_radial_mean",
    "variance_constants",
    "write_rows",
    "__version__",
]
