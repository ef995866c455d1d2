"""Fit drivers and the result container."""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import linalg as sla

from ..errors import NumericalFault, ValidationError
from ..model import Dataset, ModelSpec, build_design
from . import direct, linearized
from .elbo import compute_elbo
from .moments import Design, make_design
from .state import VariationalState

log = logging.getLogger("vbvar")


def _chol_psd(mat: np.ndarray) -> np.ndarray:
    """Cholesky-like factor that tolerates positive SEMIdefinite matrices."""
    if mat.size == 0:
        return mat
    try:
        return np.linalg.cholesky(mat)
    except np.linalg.LinAlgError:
        vals, vecs = np.linalg.eigh(0.5 * (mat + mat.T))
        if np.min(vals) < -1e-8 * max(1.0, np.max(np.abs(vals))):
            raise NumericalFault("covariance block is not positive semidefinite")
        return vecs * np.sqrt(np.clip(vals, 0.0, None))


@dataclass
class FitResult:
    """Converged (or best-effort) posterior summary of one model fit."""

    spec: ModelSpec
    theta: np.ndarray              # posterior mean of Theta, (d, q)
    b_lower: np.ndarray            # posterior mean of B = I - L
    v_diag: np.ndarray             # posterior means of the nu precisions
    mu_omega: np.ndarray           # E_q[Omega]
    theta_var: np.ndarray          # elementwise posterior variances of Theta
    elbo_trace: list
    n_iter: int
    converged: bool
    wall_time: float
    n_obs: int
    n_assets: int
    n_predictors: int
    z_norms_sq: np.ndarray         # squared column norms of the design matrix
    state: VariationalState
    asset_names: tuple = ()
    a_matrix: Optional[np.ndarray] = None   # linearized parametrization only
    _wishart: object = field(default=None, repr=False)

    @property
    def q(self) -> int:
        return self.theta.shape[1]

    def e_log_det_omega(self) -> float:
        """E_q[log|Omega|] = sum_j E[log nu_j]; |L| = 1 drops out."""
        from scipy.special import digamma
        return float(np.sum(digamma(self.state.nu_a) - np.log(self.state.nu_b)))

    def theta_vec_cov(self) -> np.ndarray:
        """Covariance of vec(Theta') in row-major order.

        For the linearized parametrization the A-block covariance is pushed
        through Theta = L^{-1} A at the posterior mean of L, which ignores the
        variability of L itself.
        """
        cov = self.state.full_theta_cov()
        if self.spec.parametrization == "direct":
            return cov
        d, q = self.theta.shape
        l_inv = sla.solve_triangular(np.eye(d) - self.b_lower, np.eye(d),
                                     lower=True, unit_diagonal=True)
        t_mat = np.kron(l_inv, np.eye(q))
        return t_mat @ cov @ t_mat.T

    def sample_parameters(self, rng: np.random.Generator, n_draws: int):
        """Draw (Theta, B, nu) from the variational posterior.

        Returns arrays of shapes (n, d, q), (n, d, d) and (n, d).
        """
        d, q = self.theta.shape
        st = self.state
        nus = rng.gamma(shape=st.nu_a, scale=1.0 / st.nu_b, size=(n_draws, d))
        b_draws = np.zeros((n_draws, d, d))
        for j in range(1, d):
            chol = _chol_psd(st.beta_covs[j])
            eps = rng.standard_normal((n_draws, j))
            b_draws[:, j, :j] = st.beta_means[j][None, :] + eps @ chol.T
        if st.joint:
            chol = _chol_psd(st.theta_cov)
            eps = rng.standard_normal((n_draws, d * q))
            coef = st.theta_mean.reshape(-1)[None, :] + eps @ chol.T
            coef = coef.reshape(n_draws, d, q)
        else:
            coef = np.empty((n_draws, d, q))
            for j in range(d):
                chol = _chol_psd(st.theta_row_covs[j])
                eps = rng.standard_normal((n_draws, q))
                coef[:, j, :] = st.theta_mean[j][None, :] + eps @ chol.T
        if self.spec.parametrization == "direct":
            thetas = coef
        else:
            thetas = np.empty_like(coef)
            for i in range(n_draws):
                thetas[i] = linearized.recover_theta(coef[i], b_draws[i])
        return thetas, b_draws, nus

    def to_dict(self, include_timing: bool = True) -> dict:
        doc = {
            "model": {
                "prior": self.spec.prior,
                "parametrization": self.spec.parametrization,
                "theta_factorization": self.spec.theta_factorization,
                "hyper": {k: getattr(self.spec.hyper, k)
                          for k in ("a_nu", "b_nu", "tau", "upsilon0", "h1", "h2", "h3")},
                "convergence": {
                    "max_iter": self.spec.max_iter,
                    "tol_elbo": self.spec.tol_elbo,
                    "tol_param": self.spec.tol_param,
                },
            },
            "n_obs": self.n_obs,
            "n_assets": self.n_assets,
            "n_predictors": self.n_predictors,
            "asset_names": list(self.asset_names),
            "theta_mean": self.theta.tolist(),
            "theta_var": self.theta_var.tolist(),
            "b_lower": self.b_lower.tolist(),
            "v_diag": self.v_diag.tolist(),
            "mu_omega": self.mu_omega.tolist(),
            "elbo_trace": list(self.elbo_trace),
            "n_iter": self.n_iter,
            "converged": self.converged,
        }
        if include_timing:
            doc["wall_time_seconds"] = self.wall_time
        if self.a_matrix is not None:
            doc["a_matrix"] = self.a_matrix.tolist()
        return doc

    def to_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True)
            fh.write("\n")


def _converged(elbo, prev_elbo, d_param, spec) -> bool:
    rel = abs(elbo - prev_elbo) / max(abs(prev_elbo), 1e-12)
    return rel < spec.tol_elbo and d_param < spec.tol_param


def _run(spec: ModelSpec, design: Design, init_fn, sweep_fn, elbo_fn):
    state = init_fn(spec, design)
    prev_elbo = -np.inf
    converged = False
    n_iter = 0
    for it in range(spec.max_iter):
        theta_prev = state.theta_mean.copy()
        sweep_fn(spec, state, design)
        elbo = elbo_fn(spec, state, design)
        state.elbo_trace.append(elbo)
        n_iter = it + 1
        log.debug("sweep %d: elbo=%.10g", n_iter, elbo)
        d_param = float(np.max(np.abs(state.theta_mean - theta_prev)))
        if it > 0 and _converged(elbo, prev_elbo, d_param, spec):
            converged = True
            break
        prev_elbo = elbo
    return state, converged, n_iter


def fit(dataset: Dataset, spec: ModelSpec) -> FitResult:
    """Estimate the model by coordinate-ascent variational inference.

    Dispatches on ``spec.parametrization``; returns the best state flagged
    non-converged when the iteration budget runs out.
    """
    if spec.parametrization == "cholesky_linearized":
        return fit_linearized(dataset, spec)
    t0 = time.perf_counter()
    y, z = build_design(dataset)
    design = make_design(y, z)
    state, converged, n_iter = _run(spec, design, direct.init_state, direct.sweep, compute_elbo)
    wall = time.perf_counter() - t0
    if not converged:
        log.warning("fit did not converge in %d sweeps", spec.max_iter)
    return FitResult(
        spec=spec,
        theta=state.theta_mean.copy(),
        b_lower=state.b_matrix(),
        v_diag=state.nu_mean(),
        mu_omega=state.mu_omega(),
        theta_var=state.theta_var(),
        elbo_trace=list(state.elbo_trace),
        n_iter=n_iter,
        converged=converged,
        wall_time=wall,
        n_obs=design.n_obs,
        n_assets=dataset.n_assets,
        n_predictors=dataset.n_predictors,
        z_norms_sq=np.diag(design.gram).copy(),
        state=state,
        asset_names=dataset.asset_names,
    )


def fit_linearized(dataset: Dataset, spec: ModelSpec) -> FitResult:
    """Estimate the linearized baseline and recover Theta = L^{-1} A."""
    if spec.parametrization != "cholesky_linearized":
        raise ValidationError("fit_linearized requires parametrization='cholesky_linearized'")
    t0 = time.perf_counter()
    y, z = build_design(dataset)
    design = make_design(y, z)
    state, converged, n_iter = _run(spec, design, linearized.init_state_linearized,
                                    linearized.sweep_linearized,
                                    linearized.compute_elbo_linearized)
    wall = time.perf_counter() - t0
    if not converged:
        log.warning("fit_linearized did not converge in %d sweeps", spec.max_iter)
    b_lower = state.b_matrix()
    a_matrix = state.theta_mean.copy()
    theta = linearized.recover_theta(a_matrix, b_lower)
    return FitResult(
        spec=spec,
        theta=theta,
        b_lower=b_lower,
        v_diag=state.nu_mean(),
        mu_omega=state.mu_omega(),
        theta_var=state.theta_var(),
        elbo_trace=list(state.elbo_trace),
        n_iter=n_iter,
        converged=converged,
        wall_time=wall,
        n_obs=design.n_obs,
        n_assets=dataset.n_assets,
        n_predictors=dataset.n_predictors,
        z_norms_sq=np.diag(design.gram).copy(),
        state=state,
        asset_names=dataset.asset_names,
        a_matrix=a_matrix,
    )
