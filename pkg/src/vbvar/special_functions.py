"""Scalar special functions and 1-D numerical routines for the updates.

Bessel evaluations are kept in log scale throughout: the GIG arguments
sqrt(a*b) produced by the coordinate updates can exceed 700, where the raw
modified Bessel function underflows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize, special

from .errors import NumericalFault, ValidationError


def _log_cosh(u):
    u = np.abs(u)
    return u - np.log(2.0) + np.log1p(np.exp(-2.0 * u))


def _log_bessel_k_quad(order: float, x: float) -> float:
    """log K_order(x) from the integral representation, evaluated in log scale.

    Fallback for the rare order/argument combinations where the scaled scipy
    routine over- or underflows.
    """
    order = abs(float(order))

    def log_integrand(t):
        with np.errstate(over="ignore"):
            return -x * np.cosh(t) + _log_cosh(order * t)

    # locate the maximiser of the integrand: solve x*sinh(t) = order*tanh(order*t)
    t_hi = 1.0
    while log_integrand(t_hi * 2) > log_integrand(t_hi):
        t_hi *= 2
        if t_hi > 1e6:
            raise NumericalFault("log_bessel_k fallback failed to bracket the mode")
    res = optimize.minimize_scalar(lambda t: -log_integrand(t), bounds=(0.0, 2 * t_hi),
                                   method="bounded", options={"xatol": 1e-10})
    t_star, log_peak = res.x, log_integrand(res.x)
    t_max = max(t_star, 1.0)
    while log_integrand(t_max) > log_peak - 45.0:
        t_max *= 2
        if t_max > 1e8:
            break
    val, _ = integrate.quad(lambda t: np.exp(log_integrand(t) - log_peak), 0.0, t_max, limit=200)
    if not np.isfinite(val) or val <= 0:
        raise NumericalFault(f"log_bessel_k quadrature failed for order={order}, x={x}")
    return log_peak + np.log(val)


def log_bessel_k(order, x):
    """Logarithm of the modified Bessel function of the second kind K_order(x).

    Finite for every x > 0; symmetric in the order.
    """
    order_in = np.asarray(order, dtype=float)
    x_in = np.asarray(x, dtype=float)
    scalar_out = order_in.ndim == 0 and x_in.ndim == 0
    order_arr, x_arr = np.broadcast_arrays(np.atleast_1d(order_in), np.atleast_1d(x_in))
    if np.any(x_arr <= 0) or not np.all(np.isfinite(x_arr)):
        raise ValidationError("log_bessel_k requires x > 0")
    out = np.log(special.kve(order_arr, x_arr)) - x_arr
    bad = ~np.isfinite(out)
    if np.any(bad):
        out = out.copy()
        for idx in np.argwhere(bad):
            key = tuple(idx)
            out[key] = _log_bessel_k_quad(order_arr[key], x_arr[key])
    if scalar_out:
        return float(out[0])
    return out.reshape(np.broadcast_shapes(order_in.shape, x_in.shape))


def dlog_bessel_k_dorder(order, x):
    """Central finite difference of log K in the order, step 1e-4*max(1,|order|)."""
    order_arr = np.asarray(order, dtype=float)
    h = 1e-4 * np.maximum(1.0, np.abs(order_arr))
    out = (log_bessel_k(order_arr + h, x) - log_bessel_k(order_arr - h, x)) / (2.0 * h)
    if order_arr.ndim == 0 and np.asarray(x).ndim == 0:
        return float(out)
    return out


def digamma(x):
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr <= 0):
        raise ValidationError("digamma requires x > 0")
    out = special.digamma(x_arr)
    return float(out) if np.isscalar(x) else out


def log_gamma(x):
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr <= 0):
        raise ValidationError("log_gamma requires x > 0")
    out = special.gammaln(x_arr)
    return float(out) if np.isscalar(x) else out


def log_multivariate_gamma(d: int, x: float) -> float:
    """log Gamma_d(x), expanded as a sum of univariate log-gamma terms."""
    if d < 1:
        raise ValidationError("log_multivariate_gamma requires d >= 1")
    x = float(x)
    if x <= (d - 1) / 2.0:
        raise ValidationError(f"log_multivariate_gamma requires x > (d-1)/2 = {(d - 1) / 2}")
    i = np.arange(1, d + 1)
    return float(d * (d - 1) / 4.0 * np.log(np.pi) + np.sum(special.gammaln(x + (1 - i) / 2.0)))


@dataclass(frozen=True)
class GIGParams:
    """Parameters of a generalized inverse Gaussian density
    f(v) proportional to v^(zeta-1) exp(-(a*v + b/v)/2)."""

    zeta: float
    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ValidationError("GIG requires a > 0 and b > 0")


def gig_log_norm_const(zeta, a, b):
    """h(zeta, a, b) = log of the GIG normalizing constant."""
    sab = np.sqrt(np.asarray(a, dtype=float) * np.asarray(b, dtype=float))
    return 0.5 * np.asarray(zeta) * (np.log(a) - np.log(b)) - np.log(2.0) - log_bessel_k(zeta, sab)


def gig_moments(params: GIGParams):
    """Mean, mean of the inverse and mean of the log of a GIG variable.

    The inverse moment uses the Bessel recurrence shortcut
    E[1/v] = sqrt(a/b) K_{zeta+1}/K_zeta - 2 zeta / b.
    """
    zeta, a, b = params.zeta, params.a, params.b
    sab = float(np.sqrt(a * b))
    lk = log_bessel_k(zeta, sab)
    lk1 = log_bessel_k(zeta + 1.0, sab)
    ratio = np.exp(lk1 - lk)
    mean = np.sqrt(b / a) * ratio
    mean_inverse = np.sqrt(a / b) * ratio - 2.0 * zeta / b
    mean_log = 0.5 * (np.log(b) - np.log(a)) + dlog_bessel_k_dorder(zeta, sab)
    if mean_inverse <= 0:
        raise NumericalFault(f"GIG inverse moment came out nonpositive for {params}")
    return {"mean": float(mean), "mean_inverse": float(mean_inverse), "mean_log": float(mean_log)}


def gig_moments_grid(zeta, a, b):
    """Vectorized version of :func:`gig_moments` over matching arrays."""
    zeta = np.asarray(zeta, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    sab = np.sqrt(a * b)
    lk = log_bessel_k(zeta, sab)
    lk1 = log_bessel_k(zeta + 1.0, sab)
    ratio = np.exp(lk1 - lk)
    mean = np.sqrt(b / a) * ratio
    mean_inverse = np.sqrt(a / b) * ratio - 2.0 * zeta / b
    mean_log = 0.5 * (np.log(b) - np.log(a)) + dlog_bessel_k_dorder(zeta, sab)
    if np.any(mean_inverse <= 0) or not np.all(np.isfinite(mean)):
        raise NumericalFault("GIG moment grid produced invalid values")
    return mean, mean_inverse, mean_log


def minimize_1d(f, lower: float, upper: float, tol: float = 1e-8) -> float:
    """Argmin of a unimodal scalar function on [lower, upper] within tol."""
    if not lower < upper:
        raise ValidationError("minimize_1d requires lower < upper")
    res = optimize.minimize_scalar(f, bounds=(lower, upper), method="bounded",
                                   options={"xatol": tol})
    if not np.isfinite(res.fun):
        raise NumericalFault("minimize_1d: objective evaluated to a non-finite value")
    return float(res.x)


def integrate_1d(f, lower: float, upper: float, tol: float = 1e-10) -> float:
    """Adaptive quadrature on [lower, upper]; upper may be numpy.inf."""
    out = integrate.quad(f, lower, upper, epsabs=0.0, epsrel=tol, limit=200, full_output=1)
    val = out[0]
    if len(out) > 3:
        raise NumericalFault(f"integrate_1d did not converge: {out[3]}")
    if not np.isfinite(val):
        raise NumericalFault("integrate_1d produced a non-finite value")
    return float(val)
