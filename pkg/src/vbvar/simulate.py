"""Simulation harness: sparse VAR data generation and estimator comparison.

The true transition matrix holds round(s*d^2) exact zeros at random positions;
nonzero entries come from an equal-weight mixture of two truncated normals
with means +-0.08 and standard deviation 0.1, truncated away from zero at
+-0.05.  Draws are rejected until the spectral radius is below one.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy import stats

from .cavi import fit as cavi_fit
from .errors import NumericalFault, ValidationError
from .model import Dataset, ModelSpec, build_design, from_arrays, spectral_radius
from .posterior import savs
from .utils import format_float, parallel_map

MIXTURE_MEAN = 0.08
MIXTURE_SD = 0.1
MIXTURE_TRUNC = 0.05
BURN_IN = 200
MAX_STATIONARITY_TRIES = 10_000


@dataclass(frozen=True)
class ScenarioSpec:
    """One simulation scenario: dimension, sample size, sparsity, estimators."""

    d: int
    T: int
    sparsity: float
    n_reps: int
    seed: int
    estimators: Sequence[ModelSpec]
    noise_sigma: Optional[np.ndarray] = None  # innovation covariance, default identity
    n_jobs: int = 1

    def __post_init__(self):
        if min(self.d, self.T, self.n_reps) < 1:
            raise ValidationError("d, T and n_reps must be >= 1")
        if not 0.0 < self.sparsity < 1.0:
            raise ValidationError("sparsity must lie in (0, 1)")
        if not self.estimators:
            raise ValidationError("at least one estimator is required")
        if self.noise_sigma is not None:
            sig = np.asarray(self.noise_sigma, dtype=float)
            if sig.shape != (self.d, self.d):
                raise ValidationError("noise_sigma must be d x d")
            object.__setattr__(self, "noise_sigma", sig)


@dataclass
class ScenarioResult:
    """Long-format records: one row per (replication, estimator, metric)."""

    spec: ScenarioSpec
    records: List[dict] = field(default_factory=list)

    def to_csv(self, path, *, include_timing: bool = False) -> None:
        """Long-format metric file.

        Wall times are recorded per fit but left out by default so reruns with
        the same seed write byte-identical files; pass ``include_timing`` (or
        use :meth:`timings_to_csv`) for the timing report.
        """
        cols = ["rep", "estimator", "prior", "parametrization", "metric", "value"]
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(",".join(cols) + "\n")
            for rec in self.records:
                if rec["metric"] == "wall_time_seconds" and not include_timing:
                    continue
                fh.write(",".join([
                    str(rec["rep"]), rec["estimator"], rec["prior"],
                    rec["parametrization"], rec["metric"], format_float(rec["value"]),
                ]) + "\n")

    def timings_to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("rep,estimator,wall_time_seconds\n")
            for rec in self.records:
                if rec["metric"] == "wall_time_seconds":
                    fh.write(f"{rec['rep']},{rec['estimator']},{format_float(rec['value'])}\n")

    def metric(self, estimator: str, metric: str) -> np.ndarray:
        vals = [r["value"] for r in self.records
                if r["estimator"] == estimator and r["metric"] == metric]
        return np.asarray(vals, dtype=float)

    def summary(self) -> List[dict]:
        """Median and interquartile range per (estimator, metric)."""
        keys = sorted({(r["estimator"], r["metric"]) for r in self.records
                       if r["metric"] != "failed"})
        out = []
        for estimator, metric in keys:
            vals = self.metric(estimator, metric)
            vals = vals[np.isfinite(vals)]
            if vals.size == 0:
                continue
            q1, med, q3 = np.percentile(vals, [25, 50, 75])
            out.append({"estimator": estimator, "metric": metric,
                        "median": float(med), "iqr": float(q3 - q1),
                        "n": int(vals.size)})
        return out


def _truncated_mixture(n: int, rng: np.random.Generator) -> np.ndarray:
    """Equal-weight mixture of N(+-0.08, 0.1^2) truncated beyond +-0.05."""
    signs = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    a = (MIXTURE_TRUNC - MIXTURE_MEAN) / MIXTURE_SD
    magnitudes = stats.truncnorm.rvs(a, np.inf, loc=MIXTURE_MEAN, scale=MIXTURE_SD,
                                     size=n, random_state=rng)
    return signs * magnitudes


def n_zero_entries(d: int, sparsity: float) -> int:
    """Half-up rounding of s*d^2."""
    return int(math.floor(sparsity * d * d + 0.5))


def generate_theta(d: int, sparsity: float, rng: np.random.Generator) -> np.ndarray:
    """Sparse stationary d x d transition matrix."""
    if not 0.0 < sparsity < 1.0:
        raise ValidationError("sparsity must lie in (0, 1)")
    n_zero = n_zero_entries(d, sparsity)
    for _ in range(MAX_STATIONARITY_TRIES):
        theta = _truncated_mixture(d * d, rng)
        zero_pos = rng.choice(d * d, size=n_zero, replace=False)
        theta[zero_pos] = 0.0
        theta = theta.reshape(d, d)
        if spectral_radius(theta) < 1.0:
            return theta
    raise NumericalFault("could not draw a stationary transition matrix")


def simulate_var(theta: np.ndarray, T: int, rng: np.random.Generator,
                 noise_sigma: Optional[np.ndarray] = None,
                 intercept: Optional[np.ndarray] = None,
                 burn_in: int = BURN_IN) -> Dataset:
    """Simulate y_t = c + Theta y_{t-1} + u_t and discard the burn-in."""
    theta = np.asarray(theta, dtype=float)
    d = theta.shape[0]
    if theta.shape == (d, d + 1):
        intercept = theta[:, 0]
        theta = theta[:, 1:]
    if theta.shape != (d, d):
        raise ValidationError("theta must be d x d or d x (d+1) with intercept column")
    if spectral_radius(theta) >= 1.0:
        raise ValidationError("theta must be stationary (spectral radius < 1)")
    c = np.zeros(d) if intercept is None else np.asarray(intercept, dtype=float)
    if noise_sigma is None:
        chol = np.eye(d)
    else:
        chol = np.linalg.cholesky(np.asarray(noise_sigma, dtype=float))
    total = burn_in + T
    shocks = rng.standard_normal((total, d)) @ chol.T
    y = np.zeros((total, d))
    prev = np.zeros(d)
    for t in range(total):
        prev = c + theta @ prev + shocks[t]
        y[t] = prev
    return from_arrays(y[burn_in:])


def frobenius_error(theta_true: np.ndarray, theta_hat: np.ndarray) -> float:
    theta_true = np.asarray(theta_true, dtype=float)
    theta_hat = np.asarray(theta_hat, dtype=float)
    if theta_true.shape != theta_hat.shape:
        raise ValidationError("frobenius_error requires matching shapes")
    return float(np.sqrt(np.sum((theta_true - theta_hat) ** 2)))


def f1_score(mask_true: np.ndarray, mask_hat: np.ndarray) -> dict:
    """Precision, recall and F1 of nonzero-pattern recovery; 0/0 counts as 0."""
    mask_true = np.asarray(mask_true, dtype=bool)
    mask_hat = np.asarray(mask_hat, dtype=bool)
    if mask_true.shape != mask_hat.shape:
        raise ValidationError("f1_score requires matching shapes")
    tp = float(np.sum(mask_true & mask_hat))
    fp = float(np.sum(~mask_true & mask_hat))
    fn = float(np.sum(mask_true & ~mask_hat))
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = 2.0 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return {"f1": f1, "precision": precision, "recall": recall}


def _run_replication(spec: ScenarioSpec, rep: int) -> List[dict]:
    rng = np.random.default_rng(np.random.SeedSequence(entropy=spec.seed, spawn_key=(rep,)))
    theta_true = generate_theta(spec.d, spec.sparsity, rng)
    dataset = simulate_var(theta_true, spec.T, rng, noise_sigma=spec.noise_sigma)
    _, z = build_design(dataset)
    mask_true = theta_true != 0.0
    records = []
    for est in spec.estimators:
        label = est.label
        base = {"rep": rep, "estimator": label, "prior": est.prior,
                "parametrization": est.parametrization}
        t0 = time.perf_counter()
        try:
            result = cavi_fit(dataset, est)
        except NumericalFault as exc:
            records.append(dict(base, metric="failed", value=1.0))
            records.append(dict(base, metric="error", value=float("nan")))
            continue
        elapsed = time.perf_counter() - t0
        # metrics on the autoregressive block; the intercept column is not
        # part of the data-generating matrix
        phi_hat = result.theta[:, -spec.d:]
        pattern = savs(result.theta, z)
        phi_mask = pattern.mask[:, -spec.d:]
        scores = f1_score(mask_true, phi_mask)
        records.append(dict(base, metric="frobenius", value=frobenius_error(theta_true, phi_hat)))
        records.append(dict(base, metric="f1", value=scores["f1"]))
        records.append(dict(base, metric="precision", value=scores["precision"]))
        records.append(dict(base, metric="recall", value=scores["recall"]))
        records.append(dict(base, metric="wall_time_seconds", value=elapsed))
        records.append(dict(base, metric="converged", value=float(result.converged)))
    return records


def run_scenario(spec: ScenarioSpec) -> ScenarioResult:
    """Run every replication and collect long-format metric records."""
    batches = parallel_map(lambda rep: _run_replication(spec, rep),
                           range(spec.n_reps), n_jobs=spec.n_jobs)
    result = ScenarioResult(spec=spec)
    for batch in batches:
        result.records.extend(batch)
    return result


def load_scenario_csv(path) -> List[dict]:
    """Read back a scenario file written by :meth:`ScenarioResult.to_csv`."""
    import csv
    with open(path, "r", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return [{"rep": int(r["rep"]), "estimator": r["estimator"], "prior": r["prior"],
             "parametrization": r["parametrization"], "metric": r["metric"],
             "value": float(r["value"])} for r in rows]
