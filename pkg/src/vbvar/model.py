"""Domain types for the multivariate predictive regression.

The model regresses a vector of returns on an intercept, lagged exogenous
predictors and its own lag,

    y_t = Theta z_{t-1} + u_t,      u_t ~ N(0, Omega^{-1}),

with z_{t-1} = (1, x_{t-1}, y_{t-1}) of dimension q = d + p + 1.  The noise
precision is parameterised through the modified Cholesky factorisation
Omega = L' V L with unit-lower-triangular L and positive diagonal V.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
import pandas as pd

from .errors import ValidationError
from .validation import (
    check_in,
    check_matrix,
    check_permutation,
    check_positive,
)

PRIORS = {"normal", "adaptive_lasso", "normal_gamma", "horseshoe"}
PARAMETRIZATIONS = {"direct", "cholesky_linearized"}
FACTORIZATIONS = {"joint", "row_independent"}
PREDICTIVE_METHODS = {"mc_xi", "mc_theta", "gaussian"}


@dataclass(frozen=True)
class HyperParams:
    """Fixed prior hyper-parameters.

    ``a_nu``/``b_nu`` parameterise the Gamma prior on each noise precision,
    ``tau`` is the prior variance of the Cholesky-factor entries, ``upsilon0``
    the prior variance of the regression coefficients under the normal prior,
    ``h1``/``h2`` the hyper-prior of the local shrinkage rates and ``h3`` the
    exponential rate of the normal-gamma row parameter.
    """

    a_nu: float = 0.01
    b_nu: float = 0.01
    tau: float = 100.0
    upsilon0: float = 100.0
    h1: float = 0.5
    h2: float = 0.5
    h3: float = 1.0

    def __post_init__(self):
        for name in ("a_nu", "b_nu", "tau", "upsilon0", "h1", "h2", "h3"):
            check_positive(f"hyper.{name}", getattr(self, name))


@dataclass(frozen=True)
class ModelSpec:
    """Estimation configuration: prior family, parametrization and stopping rule."""

    prior: str = "horseshoe"
    parametrization: str = "direct"
    theta_factorization: str = "row_independent"
    hyper: HyperParams = field(default_factory=HyperParams)
    max_iter: int = 500
    tol_elbo: float = 1e-8
    tol_param: float = 1e-6
    predictive: str = "gaussian"
    n_draws: int = 1000
    joint_dim_limit: int = 4000

    def __post_init__(self):
        check_in("prior", self.prior, PRIORS)
        check_in("parametrization", self.parametrization, PARAMETRIZATIONS)
        check_in("theta_factorization", self.theta_factorization, FACTORIZATIONS)
        check_in("predictive", self.predictive, PREDICTIVE_METHODS)
        if self.max_iter < 1:
            raise ValidationError("max_iter must be >= 1")
        check_positive("tol_elbo", self.tol_elbo)
        check_positive("tol_param", self.tol_param)
        if self.n_draws < 1:
            raise ValidationError("n_draws must be >= 1 for Monte Carlo prediction")

    def with_options(self, **kwargs) -> "ModelSpec":
        return replace(self, **kwargs)

    @property
    def label(self) -> str:
        prefix = "vb" if self.parametrization == "direct" else "lvb"
        return f"{prefix}-{self.prior}"


@dataclass(frozen=True)
class Dataset:
    """Aligned panel of d endogenous returns and p exogenous predictors.

    Rows are time periods ordered by ``time_index`` (strictly increasing);
    missing values are rejected, not imputed.
    """

    y: np.ndarray
    x: np.ndarray
    asset_names: tuple
    predictor_names: tuple
    time_index: tuple

    def __post_init__(self):
        y = check_matrix("y", self.y, min_rows=2)
        x = check_matrix("x", self.x, allow_empty=True)
        if x.size == 0:
            x = np.empty((y.shape[0], 0))
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)
        if x.shape[0] != y.shape[0]:
            raise ValidationError("y and x must have the same number of rows")
        object.__setattr__(self, "asset_names", tuple(self.asset_names))
        object.__setattr__(self, "predictor_names", tuple(self.predictor_names))
        object.__setattr__(self, "time_index", tuple(self.time_index))
        if len(self.asset_names) != y.shape[1]:
            raise ValidationError("asset_names must match the number of return columns")
        if len(self.predictor_names) != x.shape[1]:
            raise ValidationError("predictor_names must match the number of predictor columns")
        if len(self.time_index) != y.shape[0]:
            raise ValidationError("time_index must have one entry per row")
        try:
            ordered = all(a < b for a, b in zip(self.time_index[:-1], self.time_index[1:]))
        except TypeError as exc:
            raise ValidationError("time_index entries are not mutually orderable") from exc
        if not ordered:
            raise ValidationError("time_index must be strictly increasing")

    @property
    def n_periods(self) -> int:
        return self.y.shape[0]

    @property
    def n_assets(self) -> int:
        return self.y.shape[1]

    @property
    def n_predictors(self) -> int:
        return self.x.shape[1]

    def window(self, start: int, stop: int) -> "Dataset":
        """Contiguous sub-sample covering rows start..stop-1."""
        if not (0 <= start < stop <= self.n_periods):
            raise ValidationError(f"invalid window [{start}, {stop})")
        return Dataset(
            y=self.y[start:stop],
            x=self.x[start:stop],
            asset_names=self.asset_names,
            predictor_names=self.predictor_names,
            time_index=self.time_index[start:stop],
        )


def from_arrays(y, x=None, asset_names=None, predictor_names=None, time_index=None) -> Dataset:
    """Build a Dataset from plain arrays, generating default labels."""
    y = check_matrix("y", y, min_rows=2)
    t, d = y.shape
    if x is None:
        x = np.empty((t, 0))
    x = check_matrix("x", x, allow_empty=True)
    if x.size == 0:
        x = np.empty((t, 0))
    p = x.shape[1]
    if asset_names is None:
        asset_names = [f"y{j + 1}" for j in range(d)]
    if predictor_names is None:
        predictor_names = [f"x{k + 1}" for k in range(p)]
    if time_index is None:
        time_index = list(range(t))
    return Dataset(y=y, x=x, asset_names=tuple(asset_names),
                   predictor_names=tuple(predictor_names), time_index=tuple(time_index))


def build_design(dataset: Dataset):
    """Stack the lagged regression system.

    Returns ``(Y, Z)`` where row t of ``Z`` is (1, x_{t-1}, y_{t-1}) and row t
    of ``Y`` is y_t; one observation is lost to lagging.
    """
    t = dataset.n_periods
    if t < 2:
        raise ValidationError("need at least 2 periods to build a lagged design")
    y, x = dataset.y, dataset.x
    ones = np.ones((t - 1, 1))
    z = np.hstack([ones, x[:-1], y[:-1]])
    return y[1:].copy(), z


def design_width(d: int, p: int) -> int:
    return d + p + 1


def permute(dataset: Dataset, perm: Sequence[int]) -> Dataset:
    """Reorder the endogenous columns; ``perm[i]`` is the old index of new column i."""
    d = dataset.n_assets
    perm = check_permutation("perm", perm, d)
    return Dataset(
        y=dataset.y[:, perm],
        x=dataset.x,
        asset_names=tuple(dataset.asset_names[i] for i in perm),
        predictor_names=dataset.predictor_names,
        time_index=dataset.time_index,
    )


@dataclass(frozen=True)
class RegressionMatrices:
    """True or estimated model matrices: Theta = (Gamma, Phi) with intercept
    column first, the strictly-lower Cholesky complement B = I - L, and the
    diagonal of V."""

    theta: np.ndarray
    b_lower: np.ndarray
    v_diag: np.ndarray

    def __post_init__(self):
        theta = check_matrix("theta", self.theta)
        d = theta.shape[0]
        b = check_matrix("b_lower", self.b_lower, n_cols=d)
        if b.shape[0] != d:
            raise ValidationError("b_lower must be d x d")
        if not np.allclose(b, np.tril(b, -1)):
            raise ValidationError("b_lower must be strictly lower triangular")
        v = np.asarray(self.v_diag, dtype=float)
        if v.shape != (d,) or np.any(v <= 0):
            raise ValidationError("v_diag must be d positive reals")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "b_lower", b)
        object.__setattr__(self, "v_diag", v)

    @property
    def cholesky_l(self) -> np.ndarray:
        return np.eye(self.b_lower.shape[0]) - self.b_lower

    @property
    def omega(self) -> np.ndarray:
        l = self.cholesky_l
        return l.T @ np.diag(self.v_diag) @ l

    @property
    def a_matrix(self) -> np.ndarray:
        return self.cholesky_l @ self.theta

    def autoregressive_block(self) -> np.ndarray:
        """The Phi block (last d columns of Theta)."""
        d = self.theta.shape[0]
        return self.theta[:, -d:]


def spectral_radius(phi: np.ndarray) -> float:
    phi = np.asarray(phi, dtype=float)
    if np.allclose(phi, np.diag(np.diag(phi))):
        return float(np.max(np.abs(np.diag(phi)))) if phi.size else 0.0
    return float(np.max(np.abs(np.linalg.eigvals(phi))))


def load_csv(path, returns: Sequence[str], predictors: Sequence[str] = ()) -> Dataset:
    """Read a dataset from CSV.

    The first column holds the period label; the remaining columns are matched
    against the declared return and predictor names (the column roles come
    from the run configuration, not from the file).
    """
    frame = pd.read_csv(path)
    if frame.shape[1] < 2:
        raise ValidationError("CSV must have a period column plus data columns")
    returns = list(returns)
    predictors = list(predictors)
    missing = [c for c in returns + predictors if c not in frame.columns]
    if missing:
        raise ValidationError(f"CSV is missing declared columns: {missing}")
    period_col = frame.columns[0]
    # keep the inferred dtype so numeric period labels stay numerically ordered
    time_index = tuple(frame[period_col].tolist())
    y = frame[returns].to_numpy(dtype=float)
    x = frame[predictors].to_numpy(dtype=float) if predictors else np.empty((len(frame), 0))
    return Dataset(y=y, x=x, asset_names=tuple(returns),
                   predictor_names=tuple(predictors), time_index=time_index)


def save_csv(path, dataset: Dataset, *, float_format="%.17g"):
    """Write a dataset in the same layout that :func:`load_csv` reads."""
    cols = ["period"] + list(dataset.asset_names) + list(dataset.predictor_names)
    data = np.hstack([dataset.y, dataset.x])
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(cols) + "\n")
        for label, row in zip(dataset.time_index, data):
            fields = [str(label)] + [float_format % v for v in row]
            fh.write(",".join(fields) + "\n")
