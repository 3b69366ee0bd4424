"""Pair counting statistics of circular beta-ensembles.

Samplers for CUE and CbetaE eigenphases, test functions on the circle and the
line, the pair statistic ``S_N(f) = sum_{i != j} f(L_N (theta_i - theta_j))``,
exact finite-N moments for the CUE, exact trace cumulants, the limit laws in
the global, mesoscopic and microscopic regimes, and an experiment harness.
"""

__version__ = "0.1.0"

from .sampler import (  # noqa: E402
    EigensolverResidualError,
    PhaseConfiguration,
    SeedSpec,
    cmv_eigenphases,
    cmv_matrix,
    derive_trial_seed,
    sample_cbeta,
    sample_cue,
    trial_generator,
    verblunsky_coefficients,
)
from .functions import (  # noqa: E402
    CircleSeries,
    DivergentSeriesError,
    FunctionSpec,
    LineTransform,
    PeriodizationError,
    ScaledSeries,
    SingularEvaluationError,
    circle_coeffs,
    circle_restriction,
    eval_function,
    line_transform,
    scaled_coeffs,
)
from .pairstats import (  # noqa: E402
    InsufficientTruncationError,
    PairStatValue,
    TraceVector,
    circular_diff,
    pair_sum_direct,
    pair_sum_from_phases,
    pair_sum_spectral,
    spacing_sum,
    traces,
)
from .exact import (  # noqa: E402
    asymptotic_variance,
    expected_pair_sum,
    trace_covariance,
    variance_pair_sum,
    variance_via_covariance,
)
from .cumulants import (  # noqa: E402
    centered_product_expansion,
    count_lattice,
    cumulants_from_moments,
    g_function,
    moments_from_cumulants,
    pair_stat_moment,
    trace_cumulant,
)
from .limits import (  # noqa: E402
    LimitLaw,
    exp_series_law,
    logsine_variance,
    meso_variance,
    micro_variance,
    sample_limit_series,
)

__all__ = [
    "__version__",
    "EigensolverResidualError",
    "PhaseConfiguration",
    "SeedSpec",
    "cmv_eigenphases",
    "cmv_matrix",
    "derive_trial_seed",
    "sample_cbeta",
    "sample_cue",
    "trial_generator",
    "verblunsky_coefficients",
    "CircleSeries",
    "DivergentSeriesError",
    "FunctionSpec",
    "LineTransform",
    "PeriodizationError",
    "ScaledSeries",
    "SingularEvaluationError",
    "circle_coeffs",
    "circle_restriction",
    "eval_function",
    "line_transform",
    "scaled_coeffs",
    "InsufficientTruncationError",
    "PairStatValue",
    "TraceVector",
    "circular_diff",
    "pair_sum_direct",
    "pair_sum_from_phases",
    "pair_sum_spectral",
    "spacing_sum",
    "traces",
    "asymptotic_variance",
    "expected_pair_sum",
    "trace_covariance",
    "variance_pair_sum",
    "variance_via_covariance",
    "centered_product_expansion",
    "count_lattice",
    "cumulants_from_moments",
    "g_function",
    "moments_from_cumulants",
    "pair_stat_moment",
    "trace_cumulant",
    "LimitLaw",
    "exp_series_law",
    "logsine_variance",
    "meso_variance",
    "micro_variance",
    "sample_limit_series",
]
