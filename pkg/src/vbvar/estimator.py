"""Scikit-learn style front end for the variational VAR.

The estimator wraps the coordinate-ascent engine behind the familiar
``fit`` / ``predict`` / ``get_params`` surface so it composes with model
selection and pipeline tooling.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .cavi import fit as cavi_fit
from .errors import ValidationError
from .model import HyperParams, ModelSpec, build_design, from_arrays
from .posterior import fit_wishart, savs
from .predictive import predict_gaussian, predict_mc_theta, predict_mc_xi


class VBVAR(BaseEstimator):
    """Sparse multivariate predictive regression via variational Bayes.

    Fits y_t = Theta (1, x_{t-1}, y_{t-1})' + u_t with a global-local
    shrinkage prior elicited directly on Theta (or, for the linearized
    baseline, on A = L Theta), then sparsifies the posterior mean with the
    signal-adaptive selector.

    Parameters
    ----------
    prior : {'normal', 'adaptive_lasso', 'normal_gamma', 'horseshoe'}
        Shrinkage family for the coefficient matrix.
    parametrization : {'direct', 'cholesky_linearized'}
        Whether the prior acts on Theta itself or on its Cholesky-rotated
        transform (the ordering-dependent baseline).
    theta_factorization : {'joint', 'row_independent'}
        Joint Gaussian over all coefficients or independent row blocks.
    a_nu, b_nu, tau, upsilon0, h1, h2, h3 : float
        Prior hyper-parameters; see :class:`vbvar.model.HyperParams`.
    max_iter : int
        Sweep budget for the coordinate ascent.
    tol_elbo, tol_param : float
        Joint stopping rule: relative bound change and max coefficient change.
    predictive : {'gaussian', 'mc_theta', 'mc_xi'}
        Default one-step predictive strategy.
    n_draws : int
        Draw count for the Monte Carlo predictives.

    Attributes
    ----------
    theta_ : ndarray of shape (d, d+p+1)
        Posterior mean of the coefficient matrix (intercept column first).
    theta_sparse_ : ndarray of shape (d, d+p+1)
        Posterior mean after signal-adaptive sparsification.
    omega_ : ndarray of shape (d, d)
        Posterior mean of the noise precision matrix.
    elbo_trace_ : list of float
        Evidence lower bound after each sweep.
    converged_ : bool
    """

    def __init__(self, prior="horseshoe", parametrization="direct",
                 theta_factorization="row_independent",
                 a_nu=0.01, b_nu=0.01, tau=100.0, upsilon0=100.0,
                 h1=0.5, h2=0.5, h3=1.0,
                 max_iter=500, tol_elbo=1e-8, tol_param=1e-6,
                 predictive="gaussian", n_draws=1000):
        self.prior = prior
        self.parametrization = parametrization
        self.theta_factorization = theta_factorization
        self.a_nu = a_nu
        self.b_nu = b_nu
        self.tau = tau
        self.upsilon0 = upsilon0
        self.h1 = h1
        self.h2 = h2
        self.h3 = h3
        self.max_iter = max_iter
        self.tol_elbo = tol_elbo
        self.tol_param = tol_param
        self.predictive = predictive
        self.n_draws = n_draws

    def _spec(self) -> ModelSpec:
        hyper = HyperParams(a_nu=self.a_nu, b_nu=self.b_nu, tau=self.tau,
                            upsilon0=self.upsilon0, h1=self.h1, h2=self.h2, h3=self.h3)
        return ModelSpec(prior=self.prior, parametrization=self.parametrization,
                         theta_factorization=self.theta_factorization, hyper=hyper,
                         max_iter=self.max_iter, tol_elbo=self.tol_elbo,
                         tol_param=self.tol_param, predictive=self.predictive,
                         n_draws=self.n_draws)

    def fit(self, y, x=None):
        """Fit on a (T, d) return panel and optional (T, p) predictor panel."""
        dataset = from_arrays(y, x)
        self.result_ = cavi_fit(dataset, self._spec())
        _, z = build_design(dataset)
        self.n_assets_ = dataset.n_assets
        self.n_predictors_ = dataset.n_predictors
        self.theta_ = self.result_.theta
        self.theta_sparse_ = savs(self.result_.theta, z).theta_sparse
        self.b_lower_ = self.result_.b_lower
        self.omega_ = self.result_.mu_omega
        self.elbo_trace_ = list(self.result_.elbo_trace)
        self.converged_ = self.result_.converged
        self.n_iter_ = self.result_.n_iter
        return self

    def _check_fitted(self):
        if not hasattr(self, "result_"):
            raise NotFittedError("this VBVAR instance is not fitted yet")

    def _z_from(self, y_last, x_last):
        y_last = np.asarray(y_last, dtype=float).ravel()
        if y_last.shape[0] != self.n_assets_:
            raise ValidationError(f"y_last must have {self.n_assets_} entries")
        if self.n_predictors_ == 0:
            x_arr = np.empty(0)
        else:
            if x_last is None:
                raise ValidationError("model was fitted with predictors; pass x_last")
            x_arr = np.asarray(x_last, dtype=float).ravel()
            if x_arr.shape[0] != self.n_predictors_:
                raise ValidationError(f"x_last must have {self.n_predictors_} entries")
        return np.concatenate([[1.0], x_arr, y_last])

    def predict(self, y_last, x_last=None):
        """One-step-ahead posterior-mean forecast given the latest observation."""
        self._check_fitted()
        return self.theta_ @ self._z_from(y_last, x_last)

    def predict_density(self, y_last, x_last=None, method=None, n_draws=None, rng=None):
        """One-step-ahead predictive distribution via the configured strategy."""
        self._check_fitted()
        z_t = self._z_from(y_last, x_last)
        method = method or self.predictive
        if method == "gaussian":
            return predict_gaussian(self.result_, z_t)
        if method == "mc_theta":
            return predict_mc_theta(self.result_, z_t, n_draws or self.n_draws, rng=rng)
        if method == "mc_xi":
            return predict_mc_xi(self.result_, z_t, n_draws or self.n_draws, rng=rng)
        raise ValidationError(f"unknown predictive method {method!r}")

    def wishart_approximation(self):
        """Wishart projection of the precision-matrix posterior."""
        self._check_fitted()
        return fit_wishart(self.result_)
