"""Coordinate updates for the direct-Theta parametrization.

One sweep follows the fixed order: nu_1; for j = 2..d nu_j then beta_j; the
Theta block (joint or row by row); the prior-specific latents.  Row updates
run sequentially so that every step is an exact coordinate-ascent move.
"""

from __future__ import annotations

import numpy as np
from scipy import linalg as sla
from scipy import special as sps

from ..errors import NumericalFault, ValidationError
from ..model import ModelSpec
from ..special_functions import gig_moments_grid
from .eta import eta_posterior
from .moments import Design, MomentCache, build_cache, expected_sq_residual_sum
from .state import (
    HorseshoeLatents,
    LassoLatents,
    NormalGammaLatents,
    VariationalState,
)

THETA_SQ_FLOOR = 1e-12


def _spd_inverse(mat: np.ndarray, context: str):
    try:
        factor = sla.cho_factor(mat, lower=True, check_finite=False)
    except (sla.LinAlgError, ValueError) as exc:
        raise NumericalFault(f"non-SPD system in {context}") from exc
    inv = sla.cho_solve(factor, np.eye(mat.shape[0]), check_finite=False)
    return 0.5 * (inv + inv.T), factor


def init_latents(prior: str, d: int, q: int, hyper):
    """Neutral latent initialisation giving a unit ridge on Theta.

    Several prior-mean moments (for instance E[1/upsilon] under the lasso's
    exponential mixing density) do not exist, so the blocks start at unit
    scales instead.
    """
    shape = (d, q)
    if prior == "normal":
        return None
    if prior == "adaptive_lasso":
        return LassoLatents(
            inv_ups_a=np.ones(shape),
            inv_ups_b=np.ones(shape),
            lam_a=np.full(shape, hyper.h1),
            lam_b=np.full(shape, hyper.h2),
        )
    if prior == "normal_gamma":
        eta0 = 1.0 / hyper.h3
        return NormalGammaLatents(
            gig_zeta=np.full(shape, eta0 - 0.5),
            gig_a=np.full(shape, eta0 * hyper.h1 / hyper.h2),
            gig_b=np.ones(shape),
            lam_a=np.full(shape, hyper.h1),
            lam_b=np.full(shape, hyper.h2),
            eta_mean=np.full(d, eta0),
            eta_log_c=np.zeros(d),
            eta_rate=np.full(d, q + hyper.h3),
        )
    if prior == "horseshoe":
        gamma_a = (d * q + 1) / 2.0
        return HorseshoeLatents(
            ups_b=np.ones(shape),
            lam_b=np.ones(shape),
            gamma_a=gamma_a,
            gamma_b=gamma_a,
            eta_b=1.0,
        )
    raise ValidationError(f"unknown prior {prior!r}")


def prior_precision_diag(spec: ModelSpec, state: VariationalState) -> np.ndarray:
    """Elementwise prior precision of Theta implied by the current latents, (d, q)."""
    hyper = spec.hyper
    lat = state.latents
    if spec.prior == "normal":
        return np.full((state.d, state.q), 1.0 / hyper.upsilon0)
    if spec.prior == "adaptive_lasso":
        return lat.mean_inv_ups()
    if spec.prior == "normal_gamma":
        _, mean_inv, _ = gig_moments_grid(lat.gig_zeta, lat.gig_a, lat.gig_b)
        return mean_inv
    if spec.prior == "horseshoe":
        return lat.mean_inv_gamma2() * lat.mean_inv_ups2()
    raise ValidationError(f"unknown prior {spec.prior!r}")


def init_state(spec: ModelSpec, design: Design) -> VariationalState:
    """Deterministic starting point: prior-informed nu, zero-mean coefficient
    blocks, and a single ridge pass for the Theta covariance."""
    d, q, n = design.d, design.q, design.n_obs
    hyper = spec.hyper
    y_var = np.var(design.y, axis=0)
    nu_a = np.full(d, hyper.a_nu + n / 2.0)
    nu_b = hyper.b_nu * (1.0 + y_var)
    beta_means = [np.zeros(j) for j in range(d)]
    beta_covs = [hyper.tau * np.eye(j) for j in range(d)]
    state = VariationalState(
        nu_a=nu_a,
        nu_b=nu_b,
        beta_means=beta_means,
        beta_covs=beta_covs,
        theta_mean=np.zeros((d, q)),
        latents=init_latents(spec.prior, d, q, hyper),
    )
    diag = prior_precision_diag(spec, state)
    nu0 = state.nu_mean()
    if spec.theta_factorization == "joint":
        if d * q > spec.joint_dim_limit:
            raise ValidationError(
                f"joint Theta block of dimension {d * q} exceeds limit {spec.joint_dim_limit}")
        system = np.kron(np.diag(nu0), design.gram) + np.diag(diag.ravel())
        state.theta_cov, _ = _spd_inverse(system, "init_state joint ridge pass")
    else:
        state.theta_row_covs = []
        for j in range(d):
            system = nu0[j] * design.gram + np.diag(diag[j])
            cov, _ = _spd_inverse(system, "init_state row ridge pass")
            state.theta_row_covs.append(cov)
    return state


def update_nu(state: VariationalState, design: Design, cache: MomentCache, j: int, hyper):
    a = hyper.a_nu + design.n_obs / 2.0
    b = hyper.b_nu + 0.5 * expected_sq_residual_sum(state, cache, j)
    if b <= 0 or not np.isfinite(b):
        raise NumericalFault(f"nu update produced nonpositive rate b={b} for row {j}")
    return a, b


def update_beta(state: VariationalState, design: Design, cache: MomentCache, j: int, hyper):
    if j < 1:
        raise ValidationError("beta blocks exist only for rows j >= 2")
    nu_j = state.nu_a[j] / state.nu_b[j]
    m = cache.r_gram[:j, :j] + cache.ksum[:j, :j]
    system = nu_j * m + np.eye(j) / hyper.tau
    cov, factor = _spd_inverse(system, f"beta update, row {j}")
    rhs = nu_j * (cache.r_gram[:j, j] + cache.ksum[:j, j])
    mean = sla.cho_solve(factor, rhs, check_finite=False)
    return mean, cov


def update_theta_joint(state: VariationalState, design: Design, spec: ModelSpec,
                       mu_omega: np.ndarray):
    d, q = state.d, state.q
    if d * q > spec.joint_dim_limit:
        raise ValidationError(
            f"joint Theta block of dimension {d * q} exceeds limit {spec.joint_dim_limit}")
    diag = prior_precision_diag(spec, state)
    system = np.kron(mu_omega, design.gram) + np.diag(diag.ravel())
    cov, factor = _spd_inverse(system, "joint Theta update")
    rhs = (mu_omega @ design.s_zy.T).ravel()
    mean = sla.cho_solve(factor, rhs, check_finite=False)
    return mean.reshape(d, q), cov


def update_theta_rows(state: VariationalState, design: Design, spec: ModelSpec,
                      mu_omega: np.ndarray):
    """Sequential row updates with the cross-row coupling through Omega."""
    d = state.d
    diag = prior_precision_diag(spec, state)
    mean = state.theta_mean.copy()
    covs = []
    for j in range(d):
        system = mu_omega[j, j] * design.gram + np.diag(diag[j])
        cov, factor = _spd_inverse(system, f"row Theta update, row {j}")
        coupling = mu_omega[j] @ mean - mu_omega[j, j] * mean[j]
        rhs = design.s_zy @ mu_omega[j] - design.gram @ coupling
        mean[j] = sla.cho_solve(factor, rhs, check_finite=False)
        covs.append(cov)
    return mean, covs


def update_lasso_latents(latents: LassoLatents, theta_sq: np.ndarray, hyper) -> LassoLatents:
    inv_ups_a = np.maximum(theta_sq, THETA_SQ_FLOOR)
    inv_ups_b = latents.mean_lam2()
    mean_ups = np.sqrt(inv_ups_a / inv_ups_b) + 1.0 / inv_ups_b
    lam_a = np.full_like(inv_ups_a, hyper.h1 + 1.0)
    lam_b = mean_ups / 2.0 + hyper.h2
    return LassoLatents(inv_ups_a=inv_ups_a, inv_ups_b=inv_ups_b, lam_a=lam_a, lam_b=lam_b)


def update_ng_latents(latents: NormalGammaLatents, theta_sq: np.ndarray,
                      hyper) -> NormalGammaLatents:
    d, q = theta_sq.shape
    eta = latents.eta_mean
    zeta = np.repeat(eta[:, None], q, axis=1) - 0.5
    gig_a = eta[:, None] * latents.mean_lam()
    gig_b = np.maximum(theta_sq, THETA_SQ_FLOOR)
    mean_ups, _, mean_log_ups = gig_moments_grid(zeta, gig_a, gig_b)
    lam_a = eta[:, None] + hyper.h1
    lam_b = eta[:, None] * mean_ups / 2.0 + hyper.h2
    mean_lam = lam_a / lam_b
    mean_log_lam = sps.digamma(lam_a) - np.log(lam_b)
    eta_mean = np.empty(d)
    eta_log_c = np.empty(d)
    eta_rate = np.empty(d)
    for j in range(d):
        rate = float(np.sum(mean_lam[j] * mean_ups[j] / 2.0
                            - mean_log_lam[j] - mean_log_ups[j] + np.log(2.0)) + hyper.h3)
        eta_mean[j], eta_log_c[j] = eta_posterior(q, rate)
        eta_rate[j] = rate
    return NormalGammaLatents(gig_zeta=zeta, gig_a=gig_a, gig_b=gig_b,
                              lam_a=lam_a, lam_b=lam_b,
                              eta_mean=eta_mean, eta_log_c=eta_log_c, eta_rate=eta_rate)


def update_hs_latents(latents: HorseshoeLatents, theta_sq: np.ndarray,
                      hyper) -> HorseshoeLatents:
    theta_sq = np.maximum(theta_sq, THETA_SQ_FLOOR)
    ups_b = latents.mean_inv_lam() + 0.5 * theta_sq * latents.mean_inv_gamma2()
    inv_ups2 = 1.0 / ups_b
    lam_b = 1.0 + inv_ups2
    gamma_b = latents.mean_inv_eta() + 0.5 * float(np.sum(inv_ups2 * theta_sq))
    eta_b = 1.0 + latents.gamma_a / gamma_b
    return HorseshoeLatents(ups_b=ups_b, lam_b=lam_b, gamma_a=latents.gamma_a,
                            gamma_b=gamma_b, eta_b=eta_b)


def update_latents(spec: ModelSpec, state: VariationalState) -> None:
    if spec.prior == "normal":
        return
    theta_sq = state.theta_second_moment(floor=THETA_SQ_FLOOR)
    if spec.prior == "adaptive_lasso":
        state.latents = update_lasso_latents(state.latents, theta_sq, spec.hyper)
    elif spec.prior == "normal_gamma":
        state.latents = update_ng_latents(state.latents, theta_sq, spec.hyper)
    elif spec.prior == "horseshoe":
        state.latents = update_hs_latents(state.latents, theta_sq, spec.hyper)


def sweep(spec: ModelSpec, state: VariationalState, design: Design) -> None:
    """One full coordinate sweep, mutating the state in place."""
    cache = build_cache(state, design)
    state.nu_a[0], state.nu_b[0] = update_nu(state, design, cache, 0, spec.hyper)
    for j in range(1, state.d):
        state.nu_a[j], state.nu_b[j] = update_nu(state, design, cache, j, spec.hyper)
        state.beta_means[j], state.beta_covs[j] = update_beta(state, design, cache, j, spec.hyper)
    mu_omega = state.mu_omega()
    if spec.theta_factorization == "joint":
        state.theta_mean, state.theta_cov = update_theta_joint(state, design, spec, mu_omega)
    else:
        state.theta_mean, state.theta_row_covs = update_theta_rows(state, design, spec, mu_omega)
    update_latents(spec, state)
