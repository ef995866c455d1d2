"""Input validation helpers used by the domain types and the estimator."""

from __future__ import annotations

import numpy as np

from .errors import ValidationError


def check_matrix(name, arr, *, min_rows=0, n_cols=None, allow_empty=False):
    """Coerce ``arr`` to a 2-D float array and reject NaN/inf entries."""
    out = np.asarray(arr, dtype=float)
    if out.ndim == 1:
        out = out[:, None]
    if out.ndim != 2:
        raise ValidationError(f"{name} must be a 2-D array, got ndim={out.ndim}")
    if not allow_empty and out.size == 0:
        raise ValidationError(f"{name} must not be empty")
    if out.size and not np.all(np.isfinite(out)):
        raise ValidationError(f"{name} contains NaN or infinite entries")
    if out.shape[0] < min_rows:
        raise ValidationError(f"{name} needs at least {min_rows} rows, got {out.shape[0]}")
    if n_cols is not None and out.shape[1] != n_cols:
        raise ValidationError(f"{name} must have {n_cols} columns, got {out.shape[1]}")
    return out


def check_vector(name, arr, *, length=None):
    out = np.asarray(arr, dtype=float)
    if out.ndim != 1:
        raise ValidationError(f"{name} must be a 1-D array")
    if not np.all(np.isfinite(out)):
        raise ValidationError(f"{name} contains NaN or infinite entries")
    if length is not None and out.shape[0] != length:
        raise ValidationError(f"{name} must have length {length}, got {out.shape[0]}")
    return out


def check_positive(name, value, *, strict=True):
    value = float(value)
    if not np.isfinite(value):
        raise ValidationError(f"{name} must be finite")
    if strict and value <= 0:
        raise ValidationError(f"{name} must be > 0, got {value}")
    if not strict and value < 0:
        raise ValidationError(f"{name} must be >= 0, got {value}")
    return value


def check_in(name, value, allowed):
    if value not in allowed:
        raise ValidationError(f"{name} must be one of {sorted(allowed)}, got {value!r}")
    return value


def check_spd(name, mat, *, tol=0.0):
    """Verify symmetry and positive definiteness through a Cholesky attempt."""
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValidationError(f"{name} must be a square matrix")
    if not np.allclose(mat, mat.T, atol=1e-8 + tol):
        raise ValidationError(f"{name} must be symmetric")
    try:
        np.linalg.cholesky(0.5 * (mat + mat.T))
    except np.linalg.LinAlgError as exc:
        raise ValidationError(f"{name} must be positive definite") from exc
    return mat


def check_permutation(name, perm, d):
    perm = np.asarray(perm, dtype=int)
    if perm.shape != (d,) or sorted(perm.tolist()) != list(range(d)):
        raise ValidationError(f"{name} must be a permutation of 0..{d - 1}")
    return perm
