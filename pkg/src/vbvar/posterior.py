"""Post-inference processing: sparsification, Wishart approximation, accuracy.

The sparsifier zeroes a coefficient when its magnitude cubed times the energy
of the matching regressor column falls below one, which is the signal/null
split rule rearranged free of divisions.  The precision-matrix posterior is
projected onto a Wishart family by matching E[Omega] and E[log|Omega|].
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import ValidationError
from .special_functions import log_multivariate_gamma, minimize_1d

DELTA_MAX = 1e6
DELTA_EDGE = 1e-6


@dataclass(frozen=True)
class SparsePattern:
    """Sparsified point estimate: boolean keep-mask and the masked matrix."""

    mask: np.ndarray
    theta_sparse: np.ndarray

    def __post_init__(self):
        if self.mask.shape != self.theta_sparse.shape:
            raise ValidationError("mask and theta_sparse must share a shape")
        if np.any(self.theta_sparse[~self.mask] != 0.0):
            raise ValidationError("theta_sparse must vanish where the mask is false")


def savs(theta_hat: np.ndarray, z: np.ndarray) -> SparsePattern:
    """Signal adaptive variable selection on a posterior-mean matrix.

    ``z`` is the design matrix whose columns align with the columns of
    ``theta_hat``; entry (j, k) is zeroed iff |theta_jk|^3 * ||z_k||^2 <= 1.
    """
    theta_hat = np.asarray(theta_hat, dtype=float)
    z = np.asarray(z, dtype=float)
    if z.ndim != 2 or z.shape[1] != theta_hat.shape[1]:
        raise ValidationError("design columns must align with theta columns")
    energy = np.sum(z ** 2, axis=0)
    keep = np.abs(theta_hat) ** 3 * energy[None, :] > 1.0
    sparse = np.where(keep, theta_hat, 0.0)
    return SparsePattern(mask=keep, theta_sparse=sparse)


@dataclass(frozen=True)
class WishartApprox:
    """Wishart(delta_hat, h_hat) projection of the precision-matrix posterior."""

    delta_hat: float
    h_hat: np.ndarray
    e_log_det: float
    e_omega: np.ndarray

    @property
    def d(self) -> int:
        return self.e_omega.shape[0]

    def student_dof(self) -> float:
        """Degrees of freedom of the implied predictive Student-t."""
        return self.delta_hat - self.d + 1.0


def wishart_objective(delta: float, d: int, log_det_e_omega: float, e_log_det: float) -> float:
    """Profiled KL objective psi(delta, H_delta) with H_delta = E[Omega]/delta."""
    return (d * delta / 2.0 * np.log(2.0)
            + delta / 2.0 * (log_det_e_omega - d * np.log(delta))
            + log_multivariate_gamma(d, delta / 2.0)
            - delta / 2.0 * e_log_det
            + d * delta / 2.0)


def fit_wishart_from_moments(e_omega: np.ndarray, e_log_det: float,
                             *, tol: float = 1e-9) -> WishartApprox:
    """Project a distribution with the given moments onto the Wishart family."""
    e_omega = np.asarray(e_omega, dtype=float)
    d = e_omega.shape[0]
    sign, log_det = np.linalg.slogdet(e_omega)
    if sign <= 0:
        raise ValidationError("E[Omega] must be positive definite")
    lo = d - 1.0 + DELTA_EDGE
    delta_hat = minimize_1d(
        lambda delta: wishart_objective(delta, d, log_det, e_log_det),
        lo, DELTA_MAX, tol=tol)
    if delta_hat > 0.999 * DELTA_MAX:
        warnings.warn("Wishart projection hit the upper degrees-of-freedom bound; "
                      "the precision posterior is nearly degenerate", RuntimeWarning)
    return WishartApprox(delta_hat=float(delta_hat), h_hat=e_omega / delta_hat,
                         e_log_det=float(e_log_det), e_omega=e_omega)


def fit_wishart(fit_result) -> WishartApprox:
    """Wishart projection of a converged fit, cached on the result object."""
    if getattr(fit_result, "_wishart", None) is None:
        fit_result._wishart = fit_wishart_from_moments(
            fit_result.mu_omega, fit_result.e_log_det_omega())
    return fit_result._wishart


def sample_omega_entries(fit_result, entries, n_draws: int,
                         rng: np.random.Generator) -> np.ndarray:
    """Draw entries of Omega = L'VL from the variational blocks.

    ``entries`` is a sequence of (row, col) index pairs; returns an array of
    shape (n_draws, len(entries)).
    """
    _, b_draws, nu_draws = fit_result.sample_parameters(rng, n_draws)
    d = fit_result.n_assets
    l_draws = np.eye(d)[None, :, :] - b_draws
    out = np.empty((n_draws, len(entries)))
    for idx, (j, k) in enumerate(entries):
        out[:, idx] = np.sum(l_draws[:, :, j] * nu_draws * l_draws[:, :, k], axis=1)
    return out


def wishart_marginal_density(approx: WishartApprox, j: int, k: int,
                             n_draws: int = 100_000, rng=None):
    """Density evaluator of one Omega entry under the fitted Wishart.

    Diagonal entries have the scaled chi-square form; off-diagonal marginals
    are estimated from Wishart draws on a histogram grid.
    """
    if j == k:
        scale = approx.h_hat[j, j]
        dof = approx.delta_hat

        def density(x):
            return stats.chi2.pdf(np.asarray(x, dtype=float) / scale, dof) / scale

        return density
    rng = np.random.default_rng(0) if rng is None else rng
    draws = stats.wishart.rvs(df=approx.delta_hat, scale=approx.h_hat,
                              size=n_draws, random_state=rng)
    samples = draws[:, j, k]
    return empirical_density(samples)


def empirical_density(samples: np.ndarray, bins: int = 512):
    """Histogram step-function density over the sample range."""
    samples = np.asarray(samples, dtype=float)
    counts, edges = np.histogram(samples, bins=bins, density=True)

    def density(x):
        x = np.asarray(x, dtype=float)
        idx = np.clip(np.searchsorted(edges, x, side="right") - 1, 0, bins - 1)
        out = counts[idx]
        out = np.where((x < edges[0]) | (x > edges[-1]), 0.0, out)
        return out

    return density


def approx_accuracy(samples_p: np.ndarray, q_density, *, bins: int = 512,
                    grid_range=None) -> float:
    """Accuracy ACC = 100 (1 - 0.5 integral |q - p|) in percent.

    ``samples_p`` represent the reference distribution; ``q_density`` is the
    approximating density evaluator.  Both are integrated as histograms on a
    common grid spanning ``grid_range`` (default: the sample range).
    """
    samples_p = np.asarray(samples_p, dtype=float)
    if samples_p.size < 1000:
        raise ValidationError("approx_accuracy needs at least 1000 samples")
    lo, hi = grid_range if grid_range is not None else (samples_p.min(), samples_p.max())
    if not lo < hi:
        raise ValidationError("degenerate sample range")
    edges = np.linspace(lo, hi, bins + 1)
    width = edges[1] - edges[0]
    p_hist, _ = np.histogram(samples_p, bins=edges, density=True)
    centers = 0.5 * (edges[:-1] + edges[1:])
    q_vals = np.asarray(q_density(centers), dtype=float)
    tv = 0.5 * float(np.sum(np.abs(q_vals - p_hist)) * width)
    return float(np.clip(100.0 * (1.0 - tv), 0.0, 100.0))
