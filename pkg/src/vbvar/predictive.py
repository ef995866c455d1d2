"""One-step-ahead variational predictive distributions.

Three strategies: full Monte Carlo over all parameter blocks, Monte Carlo
over the coefficients with the precision integrated out against its Wishart
approximation (a Student-t mixture), and a closed-form Gaussian obtained by
replacing the Student-t kernel with its closest Gaussian.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg as sla
from scipy import special as sps

from .errors import NumericalFault, ValidationError
from .posterior import fit_wishart

LOG2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class PredictiveDensity:
    """Predictive law of y_{t+1}; exactly one representation is populated.

    ``kind`` is one of ``mc_xi`` (Gaussian mixture over parameter draws),
    ``mc_theta`` (Student-t mixture with common scale) or ``gaussian``.
    """

    kind: str
    mean: np.ndarray
    draws: Optional[np.ndarray] = None
    component_means: Optional[np.ndarray] = None
    component_chol_l: Optional[np.ndarray] = None     # mc_xi: unit-lower L per draw
    component_nu: Optional[np.ndarray] = None         # mc_xi: V diagonals per draw
    student_dof: Optional[float] = None               # mc_theta: v = delta - d + 1
    student_scale: Optional[np.ndarray] = None        # mc_theta: S = (v H)^{-1}
    cov: Optional[np.ndarray] = None                  # gaussian: Sigma_pred

    @property
    def d(self) -> int:
        return self.mean.shape[0]

    def log_density(self, y: np.ndarray) -> float:
        return log_predictive_score(self, y)


def _draw_rng(rng_or_seed) -> np.random.Generator:
    if isinstance(rng_or_seed, np.random.Generator):
        return rng_or_seed
    return np.random.default_rng(rng_or_seed)


def predict_mc_xi(fit, z_t: np.ndarray, n_draws: Optional[int] = None,
                  rng=None) -> PredictiveDensity:
    """Monte Carlo predictive: average the Gaussian likelihood over full
    parameter draws (Theta, B, nu), including the noise draw in the sample."""
    n = int(n_draws if n_draws is not None else fit.spec.n_draws)
    if n < 1:
        raise ValidationError("n_draws must be >= 1")
    rng = _draw_rng(rng)
    z_t = np.asarray(z_t, dtype=float)
    d = fit.n_assets
    thetas, b_draws, nu_draws = fit.sample_parameters(rng, n)
    if np.any(nu_draws <= 0):
        raise NumericalFault("drew a nonpositive precision")
    means = thetas @ z_t
    l_draws = np.eye(d)[None, :, :] - b_draws
    # y = mean + L^{-1} u with u ~ N(0, V^{-1}); Omega = L'VL is SPD by construction
    u = rng.standard_normal((n, d)) / np.sqrt(nu_draws)
    draws = np.empty((n, d))
    for i in range(n):
        draws[i] = means[i] + sla.solve_triangular(l_draws[i], u[i], lower=True,
                                                   unit_diagonal=True)
    return PredictiveDensity(kind="mc_xi", mean=means.mean(axis=0), draws=draws,
                             component_means=means, component_chol_l=l_draws,
                             component_nu=nu_draws)


def predict_mc_theta(fit, z_t: np.ndarray, n_draws: Optional[int] = None,
                     rng=None) -> PredictiveDensity:
    """Student-t mixture predictive: coefficients sampled, precision
    integrated against the fitted Wishart."""
    n = int(n_draws if n_draws is not None else fit.spec.n_draws)
    rng = _draw_rng(rng)
    z_t = np.asarray(z_t, dtype=float)
    d = fit.n_assets
    wish = fit_wishart(fit)
    v = wish.student_dof()
    if v <= 0:
        raise ValidationError(f"Student-t predictive needs delta > d - 1, got dof {v}")
    scale = np.linalg.inv(v * wish.h_hat)
    scale = 0.5 * (scale + scale.T)
    thetas, _, _ = fit.sample_parameters(rng, n)
    means = thetas @ z_t
    chol = np.linalg.cholesky(scale)
    gam = rng.chisquare(v, size=n) / v
    eps = rng.standard_normal((n, d))
    draws = means + (eps @ chol.T) / np.sqrt(gam)[:, None]
    return PredictiveDensity(kind="mc_theta", mean=means.mean(axis=0), draws=draws,
                             component_means=means, student_dof=float(v),
                             student_scale=scale)


def predict_gaussian(fit, z_t: np.ndarray) -> PredictiveDensity:
    """Closed-form Gaussian predictive from the Student-t's best Gaussian.

    With R = (v-2)/v * S^{-1}, the coefficient integral gives
    Sigma_pred = (R - R Z Sigma~ Z' R)^{-1} and the mean reduces to
    Theta_hat z_t.
    """
    z_t = np.asarray(z_t, dtype=float)
    d, q = fit.n_assets, fit.q
    wish = fit_wishart(fit)
    v = wish.student_dof()
    if v <= 2:
        raise ValidationError(f"Gaussian predictive requires dof v > 2, got {v}")
    r_mat = (v - 2.0) * wish.h_hat          # (v-2)/v * S^{-1} with S = (v H)^{-1}
    z_big = np.kron(np.eye(d), z_t[None, :])     # (d, dq)
    theta_cov = fit.theta_vec_cov()
    try:
        cov_factor = sla.cho_factor(theta_cov, lower=True, check_finite=False)
    except sla.LinAlgError as exc:
        raise NumericalFault("coefficient covariance is not SPD") from exc
    prec_theta = sla.cho_solve(cov_factor, np.eye(d * q), check_finite=False)
    sigma_tilde = np.linalg.inv(prec_theta + z_big.T @ r_mat @ z_big)
    sigma_tilde = 0.5 * (sigma_tilde + sigma_tilde.T)
    inner = r_mat - r_mat @ z_big @ sigma_tilde @ z_big.T @ r_mat
    sigma_pred = np.linalg.inv(inner)
    sigma_pred = 0.5 * (sigma_pred + sigma_pred.T)
    mu_vec = fit.theta.reshape(-1)
    mean = sigma_pred @ r_mat @ z_big @ sigma_tilde @ (prec_theta @ mu_vec)
    return PredictiveDensity(kind="gaussian", mean=mean, cov=sigma_pred)


def _logpdf_gaussian(y, mean, cov):
    d = y.shape[0]
    factor = sla.cho_factor(cov, lower=True, check_finite=False)
    log_det = 2.0 * float(np.sum(np.log(np.diag(factor[0]))))
    dev = sla.cho_solve(factor, y - mean, check_finite=False)
    quad = float((y - mean) @ dev)
    return -0.5 * (d * LOG2PI + log_det + quad)


def _logpdf_student(y, means, dof, scale):
    """Rows of ``means`` are component locations of t_dof(m, scale)."""
    d = means.shape[1]
    factor = sla.cho_factor(scale, lower=True, check_finite=False)
    log_det = 2.0 * float(np.sum(np.log(np.diag(factor[0]))))
    dev = y[None, :] - means
    solved = sla.cho_solve(factor, dev.T, check_finite=False).T
    quad = np.sum(dev * solved, axis=1)
    const = (sps.gammaln((dof + d) / 2.0) - sps.gammaln(dof / 2.0)
             - 0.5 * d * np.log(dof * np.pi) - 0.5 * log_det)
    return const - 0.5 * (dof + d) * np.log1p(quad / dof)


def log_predictive_score(pd: PredictiveDensity, y_realized: np.ndarray) -> float:
    """Log predictive density at the realized vector (log-sum-exp mixtures)."""
    y = np.asarray(y_realized, dtype=float)
    if y.shape != (pd.d,):
        raise ValidationError(f"realized vector must have shape ({pd.d},)")
    if pd.kind == "gaussian":
        out = _logpdf_gaussian(y, pd.mean, pd.cov)
    elif pd.kind == "mc_theta":
        comps = _logpdf_student(y, pd.component_means, pd.student_dof, pd.student_scale)
        out = float(sps.logsumexp(comps) - np.log(len(comps)))
    elif pd.kind == "mc_xi":
        n, d = pd.component_means.shape
        dev = y[None, :] - pd.component_means
        comps = np.empty(n)
        for i in range(n):
            half = pd.component_chol_l[i] @ dev[i]
            log_det_omega = float(np.sum(np.log(pd.component_nu[i])))
            comps[i] = -0.5 * (d * LOG2PI - log_det_omega
                               + float(half @ (pd.component_nu[i] * half)))
        out = float(sps.logsumexp(comps) - np.log(n))
    else:
        raise ValidationError(f"unknown predictive kind {pd.kind!r}")
    if not np.isfinite(out):
        raise NumericalFault("predictive density is not finite at the realized point")
    return float(out)
