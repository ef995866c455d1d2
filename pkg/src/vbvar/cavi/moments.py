"""Shared moment computations for one coordinate sweep.

The five-term expected squared residual and the beta updates only need two
matrix aggregates per sweep: the Gram matrix of residual means R'R and the
matrix K with entries trace{Cov(theta_i, theta_k) sum_t z z'}.  The per-period
matrices from the derivations are never materialised; ``k_theta_t`` exposes
one of them for oracle checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .state import VariationalState


@dataclass(frozen=True)
class Design:
    """Lagged regression system plus its fixed aggregates."""

    y: np.ndarray          # (n, d)
    z: np.ndarray          # (n, q)
    gram: np.ndarray       # Z'Z, (q, q)
    s_zy: np.ndarray       # Z'Y, (q, d)
    y_gram: np.ndarray     # Y'Y, (d, d); regressor Gram of the linearized model

    @property
    def n_obs(self) -> int:
        return self.y.shape[0]

    @property
    def d(self) -> int:
        return self.y.shape[1]

    @property
    def q(self) -> int:
        return self.z.shape[1]


def make_design(y: np.ndarray, z: np.ndarray) -> Design:
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    return Design(y=y, z=z, gram=z.T @ z, s_zy=z.T @ y, y_gram=y.T @ y)


@dataclass
class MomentCache:
    """Sweep-level aggregates derived from the current state."""

    resid: np.ndarray      # (n, d) residual means Y - Z Theta'
    r_gram: np.ndarray     # resid' resid, (d, d)
    ksum: np.ndarray       # (d, d), entries trace{Cov(theta_i, theta_k) Z'Z}
    c_theta: np.ndarray    # (d, d)
    mu_omega: np.ndarray   # (d, d)


def ksum_matrix(state: VariationalState, gram: np.ndarray) -> np.ndarray:
    d, q = state.d, state.q
    if state.joint:
        blocks = state.theta_cov.reshape(d, q, d, q)
        return np.einsum("iakb,ab->ik", blocks, gram)
    out = np.zeros((d, d))
    for j in range(d):
        out[j, j] = float(np.sum(state.theta_row_covs[j] * gram))
    return out


def k_theta_t(state: VariationalState, z_t: np.ndarray) -> np.ndarray:
    """Full d x d matrix of trace{Cov(theta_i, theta_k) z z'} for one period."""
    d, q = state.d, state.q
    out = np.zeros((d, d))
    if state.joint:
        blocks = state.theta_cov.reshape(d, q, d, q)
        out = np.einsum("a,iakb,b->ik", z_t, blocks, z_t)
    else:
        for j in range(d):
            out[j, j] = float(z_t @ state.theta_row_covs[j] @ z_t)
    return out


def build_cache(state: VariationalState, design: Design) -> MomentCache:
    resid = design.y - design.z @ state.theta_mean.T
    return MomentCache(
        resid=resid,
        r_gram=resid.T @ resid,
        ksum=ksum_matrix(state, design.gram),
        c_theta=state.c_theta(),
        mu_omega=state.mu_omega(),
    )


def expected_sq_residual_sum(state: VariationalState, cache: MomentCache, j: int) -> float:
    """sum_t E[eps_{j,t}^2] under the current variational moments.

    Expands the square into the residual-mean term, the theta covariance
    trace, the beta second-moment traces and the cross-covariance correction.
    """
    rg, ks = cache.r_gram, cache.ksum
    total = rg[j, j] + ks[j, j]
    if j > 0:
        mu_b = state.beta_means[j]
        sig_b = state.beta_covs[j]
        m = rg[:j, :j] + ks[:j, :j]
        g = rg[:j, j]
        k_cross = ks[:j, j]
        total += float(mu_b @ m @ mu_b) - 2.0 * float(mu_b @ g)
        total += float(np.sum(sig_b * m))
        total -= 2.0 * float(k_cross @ mu_b)
    return float(total)
