"""Numeric posterior for the normal-gamma row shrinkage parameter.

The optimal density is q(eta) proportional to h(eta) exp(-eta * rate) with
log h(eta) = m (eta log eta - log Gamma(eta)) and m = d + p + 1.  log h grows
like m*eta for large eta, so the density is integrable iff rate > m; the
coordinate update guarantees this.  All integrals run in log scale around the
mode, with the integration box extended until the tail is below 1e-12 of the
peak.
"""

from __future__ import annotations

import numpy as np
from scipy import optimize, special

from ..errors import NumericalFault
from ..special_functions import integrate_1d

_TAIL_LOG = np.log(1e-12)


def eta_log_kernel(eta, m: int, rate: float):
    eta = np.asarray(eta, dtype=float)
    out = np.full(eta.shape, -np.inf)
    pos = eta > 0
    e = eta[pos]
    out[pos] = m * (e * np.log(e) - special.gammaln(e)) - e * rate
    return out if out.ndim else float(out)


def _kernel_slope(eta, m, rate):
    return m * (np.log(eta) + 1.0 - special.digamma(eta)) - rate


def eta_posterior(m: int, rate: float):
    """Mean and log normalizing constant of the eta density.

    Returns ``(mean, log_c)``; raises on non-integrable or non-finite input.
    """
    if not np.isfinite(rate):
        raise NumericalFault("eta update received a non-finite rate")
    if rate <= m:
        raise NumericalFault(
            f"eta density not integrable: rate {rate} must exceed the entry count {m}")
    hi = 1.0
    while _kernel_slope(hi, m, rate) > 0:
        hi *= 2.0
        if hi > 1e12:
            raise NumericalFault("eta mode search diverged")
    # the slope is strictly decreasing; the mode is of order m/rate when tiny
    lo = hi / 2.0 if hi > 1.0 else min(1e-12, 0.1 * m / rate)
    if _kernel_slope(lo, m, rate) < 0:
        lo = min(1e-12, 0.1 * m / rate)
    mode = optimize.brentq(_kernel_slope, lo, hi, args=(m, rate), xtol=1e-300, rtol=1e-14)
    log_peak = eta_log_kernel(np.asarray(mode), m, rate)

    upper = 2.0 * mode
    while eta_log_kernel(np.asarray(upper), m, rate) - log_peak > _TAIL_LOG:
        upper *= 2.0
        if upper > 1e15:
            raise NumericalFault("eta integration domain diverged")

    def scaled(e):
        return np.exp(eta_log_kernel(np.asarray(e), m, rate) - log_peak)

    mass = integrate_1d(scaled, 0.0, upper, tol=1e-10)
    first = integrate_1d(lambda e: e * scaled(e), 0.0, upper, tol=1e-10)
    if mass <= 0 or not np.isfinite(mass) or not np.isfinite(first):
        raise NumericalFault(f"eta integration failed (rate={rate}, m={m})")
    return first / mass, float(log_peak + np.log(mass))
