"""Rolling-window out-of-sample evaluation: forecast accuracy and portfolio value.

Returns are expected in decimal units (0.01 = one percent per period).  Each
out-of-sample period refits every estimator on the trailing window and is
benchmarked against the rolling-mean forecast; portfolio exercises use the
trailing sample covariance of realized returns, power-utility weights clipped
to the configured bounds, and proportional costs on drifted-weight turnover.
"""

from __future__ import annotations

import json
import logging
import warnings
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence

import numpy as np
from scipy import linalg as sla

from .cavi import FitResult, fit as cavi_fit
from .errors import NumericalFault, ValidationError
from .model import Dataset, ModelSpec
from .predictive import predict_gaussian, predict_mc_theta, predict_mc_xi
from .utils import format_float, parallel_map

log = logging.getLogger("vbvar")

WEIGHTINGS = {"equal", "inverse_vol", "size"}


@dataclass(frozen=True)
class BacktestSpec:
    """Rolling evaluation settings."""

    estimators: Sequence[ModelSpec]
    window: int = 360
    risk_aversion: float = 5.0
    tc_bps: float = 10.0
    weight_bounds: tuple = (-2.0, 3.0)
    weighting: str = "equal"
    sizes: Optional[np.ndarray] = None
    seed: int = 0
    n_jobs: int = 1

    def __post_init__(self):
        if not self.estimators:
            raise ValidationError("at least one estimator is required")
        if self.window < 2:
            raise ValidationError("window must be >= 2")
        if self.risk_aversion <= 0:
            raise ValidationError("risk_aversion must be > 0")
        if self.tc_bps < 0:
            raise ValidationError("tc_bps must be >= 0")
        lo, hi = self.weight_bounds
        if not lo < hi:
            raise ValidationError("weight_bounds must satisfy lo < hi")
        if self.weighting not in WEIGHTINGS:
            raise ValidationError(f"weighting must be one of {sorted(WEIGHTINGS)}")


@dataclass
class ForecastPanel:
    """Per-period one-step forecasts for every estimator."""

    dates: tuple
    asset_names: tuple
    realized: np.ndarray                 # (n, d)
    naive: np.ndarray                    # (n, d) rolling means
    forecasts: Dict[str, np.ndarray]     # label -> (n, d)
    carried_forward: Dict[str, np.ndarray]  # label -> (n,) bool flags

    @property
    def n_oos(self) -> int:
        return self.realized.shape[0]


def _predictive_mean(fit_result: FitResult, z_t: np.ndarray, spec: ModelSpec,
                     rng) -> np.ndarray:
    if spec.predictive == "gaussian":
        return predict_gaussian(fit_result, z_t).mean
    if spec.predictive == "mc_theta":
        return predict_mc_theta(fit_result, z_t, spec.n_draws, rng=rng).mean
    return predict_mc_xi(fit_result, z_t, spec.n_draws, rng=rng).mean


def _estimator_forecast_path(dataset: Dataset, spec: BacktestSpec, e_idx: int):
    """All rolling one-step forecasts for one estimator (windows in order).

    A failed refit carries the previous window's parameters forward and flags
    the period, which is why windows run sequentially within an estimator.
    """
    est = spec.estimators[e_idx]
    t_total = dataset.n_periods
    oos = range(spec.window, t_total)
    forecasts = np.empty((len(oos), dataset.n_assets))
    carried = np.zeros(len(oos), dtype=bool)
    last_fit: Optional[FitResult] = None
    for i, t in enumerate(oos):
        train = dataset.window(t - spec.window, t)
        z_t = np.concatenate([[1.0], dataset.x[t - 1], dataset.y[t - 1]])
        rng = np.random.Generator(np.random.Philox(
            np.random.SeedSequence(entropy=spec.seed, spawn_key=(i, e_idx))))
        try:
            last_fit = cavi_fit(train, est)
        except NumericalFault as exc:
            if last_fit is None:
                raise
            carried[i] = True
            log.warning("window %d (%s): fit failed (%s); carrying forward",
                        i, est.label, exc)
        forecasts[i] = _predictive_mean(last_fit, z_t, est, rng)
    return forecasts, carried


def rolling_forecasts(dataset: Dataset, spec: BacktestSpec) -> ForecastPanel:
    """Refit on each trailing window and emit the one-step predictive means.

    Estimators are independent and run concurrently when ``n_jobs`` allows.
    """
    t_total = dataset.n_periods
    if t_total < spec.window + 1:
        raise ValidationError("need at least window + 1 periods for one forecast")
    oos = range(spec.window, t_total)
    labels = [est.label for est in spec.estimators]
    if len(set(labels)) != len(labels):
        raise ValidationError("estimator labels collide; vary prior or parametrization")
    realized = dataset.y[spec.window:]
    naive = np.stack([dataset.y[t - spec.window:t].mean(axis=0) for t in oos])
    paths = parallel_map(lambda e_idx: _estimator_forecast_path(dataset, spec, e_idx),
                         range(len(spec.estimators)), n_jobs=spec.n_jobs)
    forecasts = {lab: paths[e][0] for e, lab in enumerate(labels)}
    carried = {lab: paths[e][1] for e, lab in enumerate(labels)}
    return ForecastPanel(dates=tuple(dataset.time_index[spec.window:]),
                         asset_names=dataset.asset_names,
                         realized=realized, naive=naive,
                         forecasts=forecasts, carried_forward=carried)


def r2_oos(errors_model: np.ndarray, errors_naive: np.ndarray) -> float:
    """Out-of-sample R^2 of model errors against the naive benchmark errors."""
    errors_model = np.asarray(errors_model, dtype=float)
    errors_naive = np.asarray(errors_naive, dtype=float)
    if errors_model.shape != errors_naive.shape:
        raise ValidationError("error vectors must be aligned")
    sse_naive = float(np.sum(errors_naive ** 2))
    if sse_naive == 0.0:
        raise ValidationError("naive SSE is zero; R2_oos undefined")
    return 1.0 - float(np.sum(errors_model ** 2)) / sse_naive


def weighted_r2_oos(errors_model: np.ndarray, errors_naive: np.ndarray,
                    weights: np.ndarray) -> float:
    """1 - sum(w e_hat^2) / sum(w e_bar^2) over periods and assets."""
    errors_model = np.atleast_2d(np.asarray(errors_model, dtype=float))
    errors_naive = np.atleast_2d(np.asarray(errors_naive, dtype=float))
    weights = np.atleast_2d(np.asarray(weights, dtype=float))
    if errors_model.shape != errors_naive.shape or weights.shape != errors_model.shape:
        raise ValidationError("errors and weights must share a shape")
    if np.any(weights <= 0):
        raise ValidationError("weights must be positive")
    denom = float(np.sum(weights * errors_naive ** 2))
    if denom == 0.0:
        raise ValidationError("weighted naive SSE is zero")
    return 1.0 - float(np.sum(weights * errors_model ** 2)) / denom


def cum_sse_diff(errors_model: np.ndarray, errors_naive: np.ndarray,
                 weights: np.ndarray) -> np.ndarray:
    """Cumulative squared-error differential of weighted aggregate errors.

    Aggregates the weighted errors across assets each period, squares the
    aggregates, and accumulates naive minus model.
    """
    errors_model = np.atleast_2d(np.asarray(errors_model, dtype=float))
    errors_naive = np.atleast_2d(np.asarray(errors_naive, dtype=float))
    weights = np.atleast_2d(np.asarray(weights, dtype=float))
    if np.any(weights <= 0):
        raise ValidationError("weights must be positive")
    agg_model = np.sum(weights * errors_model, axis=1)
    agg_naive = np.sum(weights * errors_naive, axis=1)
    return np.cumsum(agg_naive ** 2) - np.cumsum(agg_model ** 2)


def crra_weights(forecast_mean: np.ndarray, cov: np.ndarray, risk_aversion: float,
                 bounds=(-2.0, 3.0)) -> np.ndarray:
    """Power-utility weights gamma^{-1} Sigma^{-1} (y_hat + sigma^2/2), clipped."""
    mu = np.asarray(forecast_mean, dtype=float)
    cov = np.asarray(cov, dtype=float)
    target = mu + 0.5 * np.diag(cov)
    try:
        factor = sla.cho_factor(cov, lower=True, check_finite=False)
        raw = sla.cho_solve(factor, target, check_finite=False)
    except (sla.LinAlgError, ValueError):
        jitter = 1e-8 * np.trace(cov) / cov.shape[0]
        warnings.warn("singular conditional covariance; adding trace-scaled jitter",
                      RuntimeWarning)
        raw = np.linalg.solve(cov + jitter * np.eye(cov.shape[0]), target)
    return np.clip(raw / risk_aversion, bounds[0], bounds[1])


def strategy_returns(weights: np.ndarray, realized: np.ndarray, tc_bps: float) -> np.ndarray:
    """Net portfolio returns with proportional costs on drifted-weight turnover."""
    weights = np.atleast_2d(np.asarray(weights, dtype=float))
    realized = np.atleast_2d(np.asarray(realized, dtype=float))
    if weights.shape != realized.shape:
        raise ValidationError("weights and returns must be aligned")
    rate = tc_bps / 1e4
    drifted = np.zeros(weights.shape[1])
    out = np.empty(weights.shape[0])
    for t in range(weights.shape[0]):
        w = weights[t]
        cost = rate * float(np.sum(np.abs(w - drifted)))
        gross = float(w @ realized[t])
        out[t] = gross - cost
        growth = 1.0 + gross
        if growth <= 0:
            raise NumericalFault(f"portfolio wealth wiped out at period {t}")
        drifted = w * (1.0 + realized[t]) / growth
    return out


def cer(strategy: np.ndarray, benchmark: np.ndarray, risk_aversion: float) -> float:
    """Annualized certainty-equivalent-return differential, in percent.

    Both series are net monthly decimal returns; the CER of each solves the
    average-power-utility equation and the differential is benchmark-relative.
    """
    strategy = np.asarray(strategy, dtype=float)
    benchmark = np.asarray(benchmark, dtype=float)
    if strategy.shape != benchmark.shape:
        raise ValidationError("return series must be aligned")
    return 12.0 * 100.0 * (certainty_equivalent(strategy, risk_aversion)
                           - certainty_equivalent(benchmark, risk_aversion))


def certainty_equivalent(returns: np.ndarray, risk_aversion: float) -> float:
    """Per-period certain return with the same average power utility."""
    wealth = 1.0 + np.asarray(returns, dtype=float)
    if np.any(wealth <= 0):
        raise NumericalFault("wealth factor <= 0; power utility undefined")
    if abs(risk_aversion - 1.0) < 1e-12:
        return float(np.exp(np.mean(np.log(wealth))) - 1.0)
    util = np.mean(wealth ** (1.0 - risk_aversion))
    return float(util ** (1.0 / (1.0 - risk_aversion)) - 1.0)


@dataclass
class BacktestReport:
    """All evaluation outputs of one backtest run."""

    panel: ForecastPanel
    window: int
    risk_aversion: float
    tc_bps: float
    weighting: str
    per_asset_r2: Dict[str, np.ndarray]
    weighted_r2: Dict[str, float]
    cum_sse: Dict[str, np.ndarray]
    cer_single: Dict[str, np.ndarray]
    cer_multi: Dict[str, float]
    weight_paths: Dict[str, np.ndarray] = field(default_factory=dict)
    return_paths: Dict[str, np.ndarray] = field(default_factory=dict)

    def to_files(self, out_dir) -> None:
        import os
        os.makedirs(out_dir, exist_ok=True)
        self.write_forecasts_csv(os.path.join(out_dir, "forecasts.csv"))
        self.write_cumsse_csv(os.path.join(out_dir, "cumsse.csv"))
        self.write_metrics_json(os.path.join(out_dir, "metrics.json"))

    def write_forecasts_csv(self, path) -> None:
        panel = self.panel
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("date,asset,estimator,forecast,naive,realized\n")
            for i, date in enumerate(panel.dates):
                for a, asset in enumerate(panel.asset_names):
                    for lab in sorted(panel.forecasts):
                        fh.write(",".join([
                            str(date), asset, lab,
                            format_float(panel.forecasts[lab][i, a]),
                            format_float(panel.naive[i, a]),
                            format_float(panel.realized[i, a]),
                        ]) + "\n")

    def write_cumsse_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("date,estimator,value\n")
            for lab in sorted(self.cum_sse):
                for date, value in zip(self.panel.dates, self.cum_sse[lab]):
                    fh.write(f"{date},{lab},{format_float(value)}\n")

    def write_metrics_json(self, path) -> None:
        doc = {
            "settings": {
                "window": self.window,
                "risk_aversion": self.risk_aversion,
                "tc_bps": self.tc_bps,
                "weighting": self.weighting,
                "cost_model": "proportional to L1 turnover against drifted previous weights",
            },
            "assets": list(self.panel.asset_names),
            "r2_oos": {lab: {asset: vals[a] for a, asset in enumerate(self.panel.asset_names)}
                       for lab, vals in self.per_asset_r2.items()},
            "weighted_r2_oos": dict(self.weighted_r2),
            "cer_single": {lab: {asset: vals[a] for a, asset in enumerate(self.panel.asset_names)}
                           for lab, vals in self.cer_single.items()},
            "cer_multi": dict(self.cer_multi),
            "carried_forward_periods": {lab: int(f.sum())
                                        for lab, f in self.panel.carried_forward.items()},
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=1, sort_keys=True)
            fh.write("\n")


def load_forecasts_csv(path):
    """Read back forecasts.csv into (dates, assets, {estimator: array}) form."""
    import csv
    with open(path, "r", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    # preserve the writer's ordering rather than re-sorting label strings
    dates = list(dict.fromkeys(r["date"] for r in rows))
    assets = list(dict.fromkeys(r["asset"] for r in rows))
    labels = list(dict.fromkeys(r["estimator"] for r in rows))
    d_idx = {v: i for i, v in enumerate(dates)}
    a_idx = {v: i for i, v in enumerate(assets)}
    out = {lab: np.full((len(dates), len(assets)), np.nan) for lab in labels}
    naive = np.full((len(dates), len(assets)), np.nan)
    realized = np.full((len(dates), len(assets)), np.nan)
    for r in rows:
        i, j = d_idx[r["date"]], a_idx[r["asset"]]
        out[r["estimator"]][i, j] = float(r["forecast"])
        naive[i, j] = float(r["naive"])
        realized[i, j] = float(r["realized"])
    return dates, assets, out, naive, realized


def load_cumsse_csv(path):
    """Read back cumsse.csv into {estimator: series} keyed by date order."""
    import csv
    with open(path, "r", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    out: Dict[str, list] = {}
    for r in rows:
        out.setdefault(r["estimator"], []).append(float(r["value"]))
    return {k: np.asarray(v) for k, v in out.items()}


def load_metrics_json(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _metric_weights(dataset: Dataset, spec: BacktestSpec) -> np.ndarray:
    """Per-period metric weights for the out-of-sample rows."""
    t_total = dataset.n_periods
    oos = range(spec.window, t_total)
    d = dataset.n_assets
    if spec.weighting == "equal":
        return np.ones((len(oos), d))
    if spec.weighting == "inverse_vol":
        vols = np.stack([dataset.y[t - spec.window:t].std(axis=0, ddof=1) for t in oos])
        if np.any(vols <= 0):
            raise ValidationError("zero trailing volatility; inverse_vol weights undefined")
        return 1.0 / vols
    sizes = spec.sizes
    if sizes is None:
        raise ValidationError("size weighting requires a size series")
    sizes = np.asarray(sizes, dtype=float)
    if sizes.shape != dataset.y.shape:
        raise ValidationError("size series must align with the return panel")
    if np.any(sizes[spec.window:] <= 0):
        raise ValidationError("sizes must be positive")
    return 1.0 / sizes[spec.window:]


def trailing_covariances(dataset: Dataset, window: int) -> np.ndarray:
    """Rolling sample covariances of realized returns, one per forecast date."""
    t_total = dataset.n_periods
    return np.stack([np.cov(dataset.y[t - window:t].T, ddof=1).reshape(
        dataset.n_assets, dataset.n_assets) for t in range(window, t_total)])


def run_backtest(dataset: Dataset, spec: BacktestSpec) -> BacktestReport:
    """Full evaluation: statistical accuracy and portfolio significance."""
    panel = rolling_forecasts(dataset, spec)
    weights = _metric_weights(dataset, spec)
    covs = trailing_covariances(dataset, spec.window)
    errors_naive = panel.realized - panel.naive
    n, d = panel.realized.shape
    bounds = spec.weight_bounds
    gamma = spec.risk_aversion

    per_asset_r2, weighted_r2, cumsse = {}, {}, {}
    cer_single, cer_multi = {}, {}
    weight_paths, return_paths = {}, {}

    naive_multi_w = np.stack([
        crra_weights(panel.naive[t], covs[t], gamma, bounds) for t in range(n)])
    naive_multi_ret = strategy_returns(naive_multi_w, panel.realized, spec.tc_bps)

    for lab, fc in panel.forecasts.items():
        errors_model = panel.realized - fc
        per_asset_r2[lab] = np.array([
            r2_oos(errors_model[:, a], errors_naive[:, a]) for a in range(d)])
        weighted_r2[lab] = weighted_r2_oos(errors_model, errors_naive, weights)
        cumsse[lab] = cum_sse_diff(errors_model, errors_naive, weights)

        single = np.empty(d)
        for a in range(d):
            var_a = covs[:, a, a]
            w_model = np.clip((fc[:, a] + var_a / 2.0) / (gamma * var_a),
                              bounds[0], bounds[1])
            w_naive = np.clip((panel.naive[:, a] + var_a / 2.0) / (gamma * var_a),
                              bounds[0], bounds[1])
            ret_model = strategy_returns(w_model[:, None], panel.realized[:, a:a + 1],
                                         spec.tc_bps)
            ret_naive = strategy_returns(w_naive[:, None], panel.realized[:, a:a + 1],
                                         spec.tc_bps)
            single[a] = cer(ret_model, ret_naive, gamma)
        cer_single[lab] = single

        w_multi = np.stack([crra_weights(fc[t], covs[t], gamma, bounds) for t in range(n)])
        ret_multi = strategy_returns(w_multi, panel.realized, spec.tc_bps)
        cer_multi[lab] = cer(ret_multi, naive_multi_ret, gamma)
        weight_paths[lab] = w_multi
        return_paths[lab] = ret_multi

    return BacktestReport(panel=panel, window=spec.window, risk_aversion=gamma,
                          tc_bps=spec.tc_bps, weighting=spec.weighting,
                          per_asset_r2=per_asset_r2, weighted_r2=weighted_r2,
                          cum_sse=cumsse, cer_single=cer_single, cer_multi=cer_multi,
                          weight_paths=weight_paths, return_paths=return_paths)
