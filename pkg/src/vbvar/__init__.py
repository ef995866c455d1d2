"""Variational Bayes estimation of sparse multivariate predictive regressions.

Shrinkage priors (adaptive lasso, adaptive normal-gamma, horseshoe, plus a
non-sparse normal baseline) are elicited directly on the regression matrix of
a VAR with exogenous predictors and fitted by coordinate-ascent variational
inference; an ordering-dependent Cholesky-linearized baseline is included for
comparison.  Posterior processing covers signal-adaptive sparsification, a
Wishart projection of the precision-matrix posterior and three one-step
predictive strategies, with a simulation harness and a rolling-window
forecasting/portfolio backtest on top.
"""

from .backtest import (
    BacktestReport,
    BacktestSpec,
    cer,
    certainty_equivalent,
    crra_weights,
    cum_sse_diff,
    load_cumsse_csv,
    load_forecasts_csv,
    load_metrics_json,
    r2_oos,
    rolling_forecasts,
    run_backtest,
    strategy_returns,
    weighted_r2_oos,
)
from .cavi import FitResult, compute_elbo, fit, fit_linearized
from .errors import NumericalFault, ValidationError
from .estimator import VBVAR
from .model import (
    Dataset,
    HyperParams,
    ModelSpec,
    RegressionMatrices,
    build_design,
    from_arrays,
    load_csv,
    permute,
    save_csv,
    spectral_radius,
)
from .posterior import (
    SparsePattern,
    WishartApprox,
    approx_accuracy,
    empirical_density,
    fit_wishart,
    fit_wishart_from_moments,
    savs,
)
from .predictive import (
    PredictiveDensity,
    log_predictive_score,
    predict_gaussian,
    predict_mc_theta,
    predict_mc_xi,
)
from .simulate import (
    ScenarioResult,
    ScenarioSpec,
    f1_score,
    frobenius_error,
    generate_theta,
    load_scenario_csv,
    run_scenario,
    simulate_var,
)
from .special_functions import (
    GIGParams,
    digamma,
    dlog_bessel_k_dorder,
    gig_moments,
    integrate_1d,
    log_bessel_k,
    log_gamma,
    log_multivariate_gamma,
    minimize_1d,
)

__version__ = "0.1.0"

__all__ = [
    "BacktestReport", "BacktestSpec", "Dataset", "FitResult", "GIGParams",
    "HyperParams", "ModelSpec", "NumericalFault", "PredictiveDensity",
    "RegressionMatrices", "ScenarioResult", "ScenarioSpec", "SparsePattern",
    "VBVAR", "ValidationError", "WishartApprox", "approx_accuracy",
    "build_design", "cer", "certainty_equivalent", "compute_elbo",
    "crra_weights", "cum_sse_diff", "digamma", "dlog_bessel_k_dorder",
    "empirical_density", "f1_score", "fit", "fit_linearized", "fit_wishart",
    "fit_wishart_from_moments", "frobenius_error", "from_arrays",
    "generate_theta", "gig_moments", "integrate_1d", "load_csv",
    "load_cumsse_csv", "load_forecasts_csv", "load_metrics_json", "load_scenario_csv",
    "log_bessel_k", "log_gamma", "log_multivariate_gamma",
    "log_predictive_score", "minimize_1d", "permute", "predict_gaussian",
    "predict_mc_theta", "predict_mc_xi", "r2_oos", "rolling_forecasts",
    "run_backtest", "run_scenario", "savs", "save_csv", "simulate_var",
    "spectral_radius", "strategy_returns", "weighted_r2_oos",
]
