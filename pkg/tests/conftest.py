"""Shared helpers for the test suite."""

import numpy as np
import pytest

import vbvar


def equicorrelated(d, rho):
    return (1.0 - rho) * np.eye(d) + rho * np.ones((d, d))


def sparse_var_dataset(seed, d=4, T=150, sparsity=0.7, rho=0.5, scale=1.0):
    rng = np.random.default_rng(seed)
    theta = vbvar.generate_theta(d, sparsity, rng) * scale
    sr = vbvar.spectral_radius(theta)
    if sr >= 0.95:
        theta *= 0.9 / sr
    sigma = equicorrelated(d, rho) if rho else None
    dataset = vbvar.simulate_var(theta, T, rng, noise_sigma=sigma)
    return theta, dataset


def theta_under_permutation(theta, perm, n_predictors):
    """Row/column permutation of Theta matching a relabelling of the assets."""
    out = theta[perm, :].copy()
    lag = out[:, 1 + n_predictors:]
    out[:, 1 + n_predictors:] = lag[:, perm]
    return out


@pytest.fixture(scope="session")
def small_fits():
    """One converged fit per prior on a shared d=3 dataset (direct, rows)."""
    _, dataset = sparse_var_dataset(42, d=3, T=120)
    fits = {}
    for prior in ("normal", "adaptive_lasso", "normal_gamma", "horseshoe"):
        spec = vbvar.ModelSpec(prior=prior, max_iter=400)
        fits[prior] = vbvar.fit(dataset, spec)
    return dataset, fits
