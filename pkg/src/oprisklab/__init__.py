"""Scale-invariant operational-loss aggregation: algebra, simulation, stable laws.

The package studies the bank-level loss ``L_N = sum of N lognormal-type cell
losses`` whose parameters are re-scaled with the number of cells N so that
bank-level statistics stay put.  It provides the closed-form regime algebra
(:mod:`oprisklab.invariance`), totally skewed stable distributions
(:mod:`oprisklab.stable`), severity families and their cumulant functions
(:mod:`oprisklab.severity`), a reproducible replication-parallel Monte Carlo
engine (:mod:`oprisklab.montecarlo`) and a CLI (``oprisk``) emitting CSV/JSON
tables.
"""

from ._backend import active_backend
from .errors import (
    ConfigError,
    DomainError,
    FitError,
    NumericalError,
    OpRiskError,
    PreconditionError,
)
from .invariance import (
    Diversification,
    ModelPoint,
    RegimeReport,
    Region,
    Schedule,
    ScheduleMode,
    VarianceClass,
    alpha_index,
    bbm_normalizers,
    classify_regime,
    correlation_schedule,
    curve_lambda,
    dr_asymptotic,
    eps_var_exponent,
    lindeberg_margin,
    lognormal_exact_schedule,
    lognormal_pair_correlation,
    mu_schedule,
    phase_grid,
    rho_prime,
    t_schedule,
    var_exponent,
)
from .montecarlo import (
    ModelSpec,
    SimEstimate,
    correlation_study,
    dr_study,
    eps_variance_analytic,
    fluctuation_study,
    simulate_bank_loss,
    simulate_fixed_params,
)
from .rng import RandomStream
from .severity import SeverityFamily, SeverityKind, cgf_asymptotic, cgf_exact
from .stable import (
    ParamConvention,
    StableDist,
    fit_location_scale,
    stable_cdf,
    stable_cdf_batch,
    stable_pdf,
    stable_quantile,
    stable_sample,
    to_classic,
    to_continuous,
)
from .stats import (
    StreamingMoments,
    bootstrap_se,
    empirical_quantile,
    ks_statistic,
    loglog_slope,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "Diversification",
    "DomainError",
    "FitError",
    "ModelPoint",
    "ModelSpec",
    "NumericalError",
    "OpRiskError",
    "ParamConvention",
    "PreconditionError",
    "RandomStream",
    "RegimeReport",
    "Region",
    "Schedule",
    "ScheduleMode",
    "SeverityFamily",
    "SeverityKind",
    "SimEstimate",
    "StableDist",
    "StreamingMoments",
    "VarianceClass",
    "active_backend",
    "alpha_index",
    "bbm_normalizers",
    "bootstrap_se",
    "cgf_asymptotic",
    "cgf_exact",
    "classify_regime",
    "correlation_schedule",
    "correlation_study",
    "curve_lambda",
    "dr_asymptotic",
    "dr_study",
    "empirical_quantile",
    "eps_var_exponent",
    "eps_variance_analytic",
    "fit_location_scale",
    "fluctuation_study",
    "ks_statistic",
    "lindeberg_margin",
    "loglog_slope",
    "lognormal_exact_schedule",
    "lognormal_pair_correlation",
    "mu_schedule",
    "phase_grid",
    "rho_prime",
    "simulate_bank_loss",
    "simulate_fixed_params",
    "stable_cdf",
    "stable_cdf_batch",
    "stable_pdf",
    "stable_quantile",
    "stable_sample",
    "t_schedule",
    "to_classic",
    "to_continuous",
    "var_exponent",
]
