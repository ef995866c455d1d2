"""Coordinate-ascent variational inference engine."""

from .direct import (
    init_state,
    prior_precision_diag,
    sweep,
    update_beta,
    update_hs_latents,
    update_lasso_latents,
    update_ng_latents,
    update_nu,
    update_theta_joint,
    update_theta_rows,
)
from .elbo import compute_elbo
from .engine import FitResult, fit, fit_linearized
from .eta import eta_log_kernel, eta_posterior
from .linearized import compute_elbo_linearized, recover_theta, sweep_linearized
from .moments import Design, MomentCache, build_cache, expected_sq_residual_sum, k_theta_t, make_design
from .state import HorseshoeLatents, LassoLatents, NormalGammaLatents, VariationalState

__all__ = [
    "Design",
    "FitResult",
    "HorseshoeLatents",
    "LassoLatents",
    "MomentCache",
    "NormalGammaLatents",
    "VariationalState",
    "build_cache",
    "compute_elbo",
    "compute_elbo_linearized",
    "eta_log_kernel",
    "eta_posterior",
    "expected_sq_residual_sum",
    "fit",
    "fit_linearized",
    "init_state",
    "k_theta_t",
    "make_design",
    "prior_precision_diag",
    "recover_theta",
    "sweep",
    "sweep_linearized",
    "update_beta",
    "update_hs_latents",
    "update_lasso_latents",
    "update_ng_latents",
    "update_nu",
    "update_theta_joint",
    "update_theta_rows",
]
