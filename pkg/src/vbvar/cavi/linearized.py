"""Linearized baseline: shrinkage priors on A = L Theta instead of Theta.

Writing the model as y_t = B y_t + A z_{t-1} + eps decouples the system into
d independent regressions of y_j on its contemporaneous predecessors and the
lagged regressors, which is why the estimate of Theta = L^{-1} A inherits the
ordering of the variables.  The sweep mirrors the direct engine; the Theta
coefficient state holds A, and ``recover_theta`` maps back by forward
substitution.
"""

from __future__ import annotations

import numpy as np
from scipy import linalg as sla
from scipy import special as sps

from ..errors import NumericalFault
from ..model import ModelSpec
from .direct import _spd_inverse, init_latents, prior_precision_diag, update_latents
from .elbo import LOG2PI, _logdet_spd, gamma_cross_entropy_terms, latent_block_terms
from .moments import Design
from .state import VariationalState


def init_state_linearized(spec: ModelSpec, design: Design) -> VariationalState:
    d, q, n = design.d, design.q, design.n_obs
    hyper = spec.hyper
    nu_a = np.full(d, hyper.a_nu + n / 2.0)
    nu_b = hyper.b_nu * (1.0 + np.var(design.y, axis=0))
    state = VariationalState(
        nu_a=nu_a,
        nu_b=nu_b,
        beta_means=[np.zeros(j) for j in range(d)],
        beta_covs=[hyper.tau * np.eye(j) for j in range(d)],
        theta_mean=np.zeros((d, q)),
        latents=init_latents(spec.prior, d, q, hyper),
    )
    diag = prior_precision_diag(spec, state)
    nu0 = state.nu_mean()
    state.theta_row_covs = []
    for j in range(d):
        cov, _ = _spd_inverse(nu0[j] * design.gram + np.diag(diag[j]),
                              "init_state_linearized ridge pass")
        state.theta_row_covs.append(cov)
    return state


def _expected_sq_residual_sum_lvb(state, design: Design, resid_a: np.ndarray, j: int) -> float:
    """sum_t E[(y_jt - beta_j y_t^j - a_j z_{t-1})^2]; regressors are data here."""
    e = resid_a[:, j]
    total = float(e @ e) + float(np.sum(state.theta_row_covs[j] * design.gram))
    if j > 0:
        mu_b = state.beta_means[j]
        sig_b = state.beta_covs[j]
        yj = design.y[:, :j]
        total += float(mu_b @ design.y_gram[:j, :j] @ mu_b) - 2.0 * float(mu_b @ (yj.T @ e))
        total += float(np.sum(sig_b * design.y_gram[:j, :j]))
    return total


def sweep_linearized(spec: ModelSpec, state: VariationalState, design: Design) -> None:
    d, q, n = state.d, state.q, design.n_obs
    hyper = spec.hyper
    resid_a = design.y - design.z @ state.theta_mean.T
    for j in range(d):
        b = hyper.b_nu + 0.5 * _expected_sq_residual_sum_lvb(state, design, resid_a, j)
        if b <= 0 or not np.isfinite(b):
            raise NumericalFault(f"nu update produced nonpositive rate b={b} for row {j}")
        state.nu_a[j] = hyper.a_nu + n / 2.0
        state.nu_b[j] = b
        if j > 0:
            nu_j = state.nu_a[j] / state.nu_b[j]
            system = nu_j * design.y_gram[:j, :j] + np.eye(j) / hyper.tau
            cov, factor = _spd_inverse(system, f"linearized beta update, row {j}")
            rhs = nu_j * (design.y[:, :j].T @ resid_a[:, j])
            state.beta_means[j] = sla.cho_solve(factor, rhs, check_finite=False)
            state.beta_covs[j] = cov
    diag = prior_precision_diag(spec, state)
    for j in range(d):
        nu_j = state.nu_a[j] / state.nu_b[j]
        target = design.y[:, j] - (design.y[:, :j] @ state.beta_means[j] if j > 0 else 0.0)
        system = nu_j * design.gram + np.diag(diag[j])
        cov, factor = _spd_inverse(system, f"linearized A update, row {j}")
        state.theta_mean[j] = sla.cho_solve(factor, nu_j * (design.z.T @ target),
                                            check_finite=False)
        state.theta_row_covs[j] = cov
    update_latents(spec, state)


def compute_elbo_linearized(spec: ModelSpec, state: VariationalState, design: Design) -> float:
    hyper = spec.hyper
    d, q, n = state.d, state.q, design.n_obs
    resid_a = design.y - design.z @ state.theta_mean.T
    total = 0.0
    for j in range(d):
        a_q, b_q = state.nu_a[j], state.nu_b[j]
        mu_nu = a_q / b_q
        mu_log_nu = sps.digamma(a_q) - np.log(b_q)
        esum = _expected_sq_residual_sum_lvb(state, design, resid_a, j)
        total += -0.5 * n * LOG2PI + 0.5 * n * mu_log_nu - 0.5 * mu_nu * esum
        total += gamma_cross_entropy_terms(hyper.a_nu, hyper.b_nu, a_q, b_q)
    for j in range(1, d):
        mu_b, cov_b = state.beta_means[j], state.beta_covs[j]
        beta_sq = mu_b ** 2 + np.diag(cov_b)
        total += -0.5 * np.sum(np.log(hyper.tau) + beta_sq / hyper.tau)
        total += 0.5 * (_logdet_spd(cov_b, f"linearized beta block {j}") + j)
    for j in range(d):
        total += 0.5 * (_logdet_spd(state.theta_row_covs[j], f"A row {j}") + q)
    total += latent_block_terms(spec.prior, state.latents,
                                state.theta_second_moment(), hyper, hyper.upsilon0)
    if not np.isfinite(total):
        raise NumericalFault("linearized ELBO evaluated to a non-finite value")
    return float(total)


def recover_theta(a_matrix: np.ndarray, b_lower: np.ndarray) -> np.ndarray:
    """Theta = L^{-1} A with L = I - B, solved by forward substitution."""
    d = a_matrix.shape[0]
    l_mat = np.eye(d) - b_lower
    return sla.solve_triangular(l_mat, a_matrix, lower=True, unit_diagonal=True)
