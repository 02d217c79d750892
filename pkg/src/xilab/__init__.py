"""xilab: Chatterjee's rank correlation, oracle variants, model families,
power theory, and a deterministic Monte Carlo experiment harness."""

from .core import (
    NULL_VARIANCE,
    NeighborMap,
    PairedSample,
    REJECT,
    TestResult,
    TiePolicy,
    compute_ranks,
    neighbor_map,
    null_test,
    xi_n,
    xi_prime,
)
from .diagnostics import (
    StatSample,
    clt_diagnostic,
    normal_cdf,
    normal_pdf,
    normal_quantile,
    wasserstein1_to_std_normal,
)
from .errors import (
    ConfigError,
    InvalidCdfError,
    InvalidInputError,
    NumericError,
    TieError,
    XiLabError,
)
from .harness import (
    BiasVarianceRow,
    ExperimentConfig,
    ExperimentKind,
    ModelSpec,
    NullDistReport,
    PowerCurveRow,
    ProjectionRow,
    run_bias_variance_experiment,
    run_experiment,
    run_null_experiment,
    run_power_experiment,
    run_projection_experiment,
    write_rows_csv,
)
from .models import (
    BivariateModel,
    GaussianDensity,
    GaussianModel,
    MixtureModel,
    RegressionModel,
    RotationModel,
    StudentTDensity,
    make_model,
)
from .oracle import CdfFn, empirical_cdf, pairwise_abs_sum, pairwise_min_sum, xi_star, xi_star_prime
from .theory import (
    DetectionRegime,
    RateParams,
    XiEstimate,
    XiMethod,
    asymptotic_power,
    bn_rate,
    detection_regime,
    local_power_mixture,
    local_power_regression,
    local_power_rotation,
    rate_condition_holds,
    v0_rotation,
    xi_gaussian_smallrho,
    xi_mixture_exact,
    xi_population_mc,
    xi_regression_asymptotic,
    xi_rotation_asymptotic,
)

__version__ = "0.1.0"
