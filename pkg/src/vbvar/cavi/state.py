"""Variational parameter blocks for the coordinate-ascent engine."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from ..errors import NumericalFault


@dataclass
class LassoLatents:
    """Per-entry inverse-Gaussian block for 1/upsilon and Gamma block for lambda^2.

    ``inv_ups_a`` holds the squared-coefficient moments and ``inv_ups_b`` the
    lambda^2 moments, exactly as the update stores them; the implied density of
    upsilon itself is GIG(1/2, inv_ups_b, inv_ups_a).
    """

    inv_ups_a: np.ndarray
    inv_ups_b: np.ndarray
    lam_a: np.ndarray
    lam_b: np.ndarray

    def mean_inv_ups(self):
        return np.sqrt(self.inv_ups_b / self.inv_ups_a)

    def mean_ups(self):
        return np.sqrt(self.inv_ups_a / self.inv_ups_b) + 1.0 / self.inv_ups_b

    def mean_lam2(self):
        return self.lam_a / self.lam_b


@dataclass
class NormalGammaLatents:
    """GIG block for upsilon, Gamma block for lambda, numeric posterior of eta."""

    gig_zeta: np.ndarray
    gig_a: np.ndarray
    gig_b: np.ndarray
    lam_a: np.ndarray
    lam_b: np.ndarray
    eta_mean: np.ndarray
    eta_log_c: np.ndarray
    eta_rate: np.ndarray  # total exponential rate used when q(eta_j) was formed

    def mean_lam(self):
        return self.lam_a / self.lam_b


@dataclass
class HorseshoeLatents:
    """Inverse-gamma scale parameters; all shapes are fixed by the updates."""

    ups_b: np.ndarray          # per-entry, shape 1
    lam_b: np.ndarray          # per-entry, shape 1
    gamma_a: float             # (d*(d+p+1)+1)/2
    gamma_b: float
    eta_b: float

    def mean_inv_ups2(self):
        return 1.0 / self.ups_b

    def mean_inv_lam(self):
        return 1.0 / self.lam_b

    def mean_inv_gamma2(self):
        return self.gamma_a / self.gamma_b

    def mean_inv_eta(self):
        return 1.0 / self.eta_b


@dataclass
class VariationalState:
    """All variational blocks for one fit.

    ``theta_mean`` is stored as a (d, q) matrix whose row-major flattening is
    the vec(Theta') ordering used by the joint Gaussian block.  Under the
    joint factorization ``theta_cov`` holds the full dq x dq covariance;
    under row independence ``theta_row_covs`` holds one q x q block per row.
    """

    nu_a: np.ndarray
    nu_b: np.ndarray
    beta_means: List[np.ndarray]
    beta_covs: List[np.ndarray]
    theta_mean: np.ndarray
    theta_cov: Optional[np.ndarray] = None
    theta_row_covs: Optional[List[np.ndarray]] = None
    latents: object = None
    elbo_trace: list = field(default_factory=list)

    @property
    def d(self) -> int:
        return self.theta_mean.shape[0]

    @property
    def q(self) -> int:
        return self.theta_mean.shape[1]

    @property
    def joint(self) -> bool:
        return self.theta_cov is not None

    def nu_mean(self):
        return self.nu_a / self.nu_b

    def theta_row_cov(self, j: int) -> np.ndarray:
        if self.joint:
            q = self.q
            return self.theta_cov[j * q:(j + 1) * q, j * q:(j + 1) * q]
        return self.theta_row_covs[j]

    def theta_var(self) -> np.ndarray:
        """Elementwise posterior variances of Theta, shape (d, q)."""
        if self.joint:
            return np.diag(self.theta_cov).reshape(self.d, self.q)
        return np.stack([np.diag(c) for c in self.theta_row_covs])

    def theta_second_moment(self, floor: float = 0.0) -> np.ndarray:
        m2 = self.theta_mean ** 2 + self.theta_var()
        if floor > 0.0:
            m2 = np.maximum(m2, floor)
        return m2

    def full_theta_cov(self) -> np.ndarray:
        """Dense dq x dq covariance (block diagonal under row independence)."""
        if self.joint:
            return self.theta_cov
        dq = self.d * self.q
        out = np.zeros((dq, dq))
        for j, c in enumerate(self.theta_row_covs):
            out[j * self.q:(j + 1) * self.q, j * self.q:(j + 1) * self.q] = c
        return out

    def b_matrix(self) -> np.ndarray:
        """Posterior mean of the strictly-lower Cholesky complement B."""
        d = self.d
        b = np.zeros((d, d))
        for j in range(1, d):
            b[j, :j] = self.beta_means[j]
        return b

    def c_theta(self) -> np.ndarray:
        """Covariance correction sum_k Cov(beta_k) * E[nu_k], embedded top-left."""
        d = self.d
        c = np.zeros((d, d))
        nu = self.nu_mean()
        for k in range(1, d):
            c[:k, :k] += self.beta_covs[k] * nu[k]
        return c

    def mu_omega(self) -> np.ndarray:
        """E_q[Omega] = (I-B)' V (I-B) + C_theta, symmetrised."""
        d = self.d
        il = np.eye(d) - self.b_matrix()
        m = il.T @ (self.nu_mean()[:, None] * il) + self.c_theta()
        m = 0.5 * (m + m.T)
        if not np.all(np.isfinite(m)):
            raise NumericalFault("E_q[Omega] contains non-finite entries")
        return m
