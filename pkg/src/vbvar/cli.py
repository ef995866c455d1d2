"""Command-line entry points: fit, simulate, backtest, predict.

A single YAML document configures each run; unknown keys are rejected so
typos fail loudly.  Exit codes are stable: 0 success, 1 validation error,
2 numerical fault.  All floating-point output is written with 17 significant
digits so reruns with the same config and seed are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np
import yaml

from .backtest import BacktestSpec, run_backtest
from .cavi import fit as cavi_fit
from .errors import NumericalFault, ValidationError
from .model import Dataset, HyperParams, ModelSpec, build_design, load_csv
from .posterior import fit_wishart, savs
from .predictive import log_predictive_score, predict_gaussian, predict_mc_theta, predict_mc_xi
from .simulate import ScenarioSpec, run_scenario
from .utils import default_n_jobs, format_float

log = logging.getLogger("vbvar")

COMMANDS = ("fit", "simulate", "backtest", "predict")

_MODEL_KEYS = {"prior", "parametrization", "theta_factorization", "hyper",
               "convergence", "predictive"}
_HYPER_KEYS = {"a_nu", "b_nu", "tau", "upsilon0", "h1", "h2", "h3"}
_CONV_KEYS = {"max_iter", "tol_elbo", "tol_param"}
_PRED_KEYS = {"method", "n_draws"}
_DATA_KEYS = {"csv", "returns", "predictors"}
_SIM_KEYS = {"d", "T", "sparsity", "n_reps", "estimators", "noise"}
_BT_KEYS = {"window", "risk_aversion", "tc_bps", "weight_bounds", "weighting",
            "estimators", "sizes_csv"}
_TOP_KEYS = {"seed", "threads", "verbosity", "output_dir", "data", "model",
             "simulate", "backtest", "holdout_last"}


def _reject_unknown(block: dict, allowed: set, context: str, errors: list) -> None:
    for key in block:
        if key not in allowed:
            errors.append(f"{context}: unknown key {key!r}")


def _parse_model(block: dict, errors: list, context: str = "model"):
    if not isinstance(block, dict):
        errors.append(f"{context}: must be a mapping")
        return None
    _reject_unknown(block, _MODEL_KEYS, context, errors)
    hyper_block = block.get("hyper", {}) or {}
    conv = block.get("convergence", {}) or {}
    pred = block.get("predictive", {}) or {}
    _reject_unknown(hyper_block, _HYPER_KEYS, f"{context}.hyper", errors)
    _reject_unknown(conv, _CONV_KEYS, f"{context}.convergence", errors)
    _reject_unknown(pred, _PRED_KEYS, f"{context}.predictive", errors)
    try:
        hyper = HyperParams(**hyper_block)
        return ModelSpec(
            prior=block.get("prior", "horseshoe"),
            parametrization=block.get("parametrization", "direct"),
            theta_factorization=block.get("theta_factorization", "row_independent"),
            hyper=hyper,
            max_iter=int(conv.get("max_iter", 500)),
            tol_elbo=float(conv.get("tol_elbo", 1e-8)),
            tol_param=float(conv.get("tol_param", 1e-6)),
            predictive=pred.get("method", "gaussian"),
            n_draws=int(pred.get("n_draws", 1000)),
        )
    except (ValidationError, TypeError, ValueError) as exc:
        errors.append(f"{context}: {exc}")
        return None


def _parse_estimators(block, errors, context):
    if not isinstance(block, list) or not block:
        errors.append(f"{context}: estimators must be a nonempty list")
        return []
    specs = []
    for i, item in enumerate(block):
        spec = _parse_model(item or {}, errors, context=f"{context}[{i}]")
        if spec is not None:
            specs.append(spec)
    labels = [s.label for s in specs]
    if len(set(labels)) != len(labels):
        errors.append(f"{context}: estimator labels collide; vary prior or parametrization")
    return specs


def validate_config(config: dict) -> list:
    """Return the list of schema violations (empty iff the config is valid)."""
    errors: list = []
    if not isinstance(config, dict):
        return ["config root must be a mapping"]
    _reject_unknown(config, _TOP_KEYS | {"command"}, "config", errors)
    command = config.get("command")
    if command not in COMMANDS:
        errors.append(f"command must be one of {COMMANDS}, got {command!r}")
        return errors
    seed = config.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        errors.append("seed must be a nonnegative integer")
    threads = config.get("threads", 1)
    if not isinstance(threads, int) or threads < 1:
        errors.append("threads must be a positive integer")
    if command in ("fit", "backtest", "predict"):
        data = config.get("data")
        if not isinstance(data, dict):
            errors.append("data block is required for this command")
        else:
            _reject_unknown(data, _DATA_KEYS, "data", errors)
            if "csv" not in data:
                errors.append("data.csv is required")
            elif not os.path.exists(str(data["csv"])):
                errors.append(f"data.csv does not exist: {data['csv']}")
            if not data.get("returns"):
                errors.append("data.returns must list at least one column")
    if command in ("fit", "predict"):
        _parse_model(config.get("model", {}) or {}, errors)
    if command == "simulate":
        sim = config.get("simulate")
        if not isinstance(sim, dict):
            errors.append("simulate block is required")
        else:
            _reject_unknown(sim, _SIM_KEYS, "simulate", errors)
            for key in ("d", "T", "n_reps"):
                if not isinstance(sim.get(key), int) or sim.get(key, 0) < 1:
                    errors.append(f"simulate.{key} must be a positive integer")
            sparsity = sim.get("sparsity")
            if not isinstance(sparsity, (int, float)) or not 0 < float(sparsity) < 1:
                errors.append("simulate.sparsity must lie in (0, 1)")
            noise = sim.get("noise", "identity")
            if not (noise == "identity"
                    or (isinstance(noise, dict) and set(noise) == {"equicorrelated"})):
                errors.append("simulate.noise must be 'identity' or {equicorrelated: rho}")
            _parse_estimators(sim.get("estimators"), errors, "simulate.estimators")
    if command == "backtest":
        bt = config.get("backtest")
        if not isinstance(bt, dict):
            errors.append("backtest block is required")
        else:
            _reject_unknown(bt, _BT_KEYS, "backtest", errors)
            specs = _parse_estimators(bt.get("estimators"), errors, "backtest.estimators")
            try:
                if specs:
                    _backtest_spec(bt, specs, sizes=None, threads=threads, seed=seed)
            except ValidationError as exc:
                errors.append(f"backtest: {exc}")
    return errors


def _backtest_spec(bt: dict, estimators, sizes, threads: int, seed: int) -> BacktestSpec:
    bounds = bt.get("weight_bounds", [-2.0, 3.0])
    return BacktestSpec(
        estimators=estimators,
        window=int(bt.get("window", 360)),
        risk_aversion=float(bt.get("risk_aversion", 5.0)),
        tc_bps=float(bt.get("tc_bps", 10.0)),
        weight_bounds=(float(bounds[0]), float(bounds[1])),
        weighting=bt.get("weighting", "equal"),
        sizes=sizes,
        seed=seed,
        n_jobs=threads,
    )


def _load_dataset(config: dict) -> Dataset:
    data = config["data"]
    return load_csv(data["csv"], data["returns"], data.get("predictors") or ())


def _noise_sigma(sim: dict, d: int):
    noise = sim.get("noise", "identity")
    if noise == "identity":
        return None
    rho = float(noise["equicorrelated"])
    if not -1.0 / (d - 1) < rho < 1.0:
        raise ValidationError(f"equicorrelation rho={rho} is not positive definite for d={d}")
    return (1.0 - rho) * np.eye(d) + rho * np.ones((d, d))


def _cmd_fit(config: dict, out_dir: str) -> None:
    dataset = _load_dataset(config)
    spec = _parse_model_checked(config)
    result = cavi_fit(dataset, spec)
    _, z = build_design(dataset)
    # timing is reported separately so fit.json is byte-identical across reruns
    doc = result.to_dict(include_timing=False)
    pattern = savs(result.theta, z)
    doc["theta_sparse"] = pattern.theta_sparse.tolist()
    doc["savs_mask"] = pattern.mask.astype(int).tolist()
    wish = fit_wishart(result)
    doc["wishart"] = {"delta_hat": wish.delta_hat, "h_hat": wish.h_hat.tolist(),
                      "e_log_det": wish.e_log_det, "e_omega": wish.e_omega.tolist()}
    with open(os.path.join(out_dir, "fit.json"), "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")
    with open(os.path.join(out_dir, "timings.csv"), "w", encoding="utf-8") as fh:
        fh.write("step,wall_time_seconds\n")
        fh.write(f"fit,{format_float(result.wall_time)}\n")
    log.info("fit: %d sweeps, converged=%s", result.n_iter, result.converged)


def _parse_model_checked(config: dict) -> ModelSpec:
    errors: list = []
    spec = _parse_model(config.get("model", {}) or {}, errors)
    if errors or spec is None:
        raise ValidationError("; ".join(errors) or "invalid model block")
    return spec


def _cmd_predict(config: dict, out_dir: str, seed: int) -> None:
    dataset = _load_dataset(config)
    spec = _parse_model_checked(config)
    holdout = bool(config.get("holdout_last", True))
    if holdout:
        if dataset.n_periods < 3:
            raise ValidationError("holdout prediction needs at least 3 periods")
        train = dataset.window(0, dataset.n_periods - 1)
        realized = dataset.y[-1]
    else:
        train = dataset
        realized = None
    result = cavi_fit(train, spec)
    z_t = np.concatenate([[1.0], dataset.x[train.n_periods - 1],
                          dataset.y[train.n_periods - 1]])
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy=seed)))
    if spec.predictive == "gaussian":
        density = predict_gaussian(result, z_t)
    elif spec.predictive == "mc_theta":
        density = predict_mc_theta(result, z_t, rng=rng)
    else:
        density = predict_mc_xi(result, z_t, rng=rng)
    cov = density.cov
    if cov is None:
        cov = np.cov(density.draws.T, ddof=1).reshape(dataset.n_assets, dataset.n_assets)
    with open(os.path.join(out_dir, "predictions.csv"), "w", encoding="utf-8") as fh:
        fh.write("field,i,j,value\n")
        for a, name in enumerate(dataset.asset_names):
            fh.write(f"mean,{name},,{format_float(density.mean[a])}\n")
        for a, name_a in enumerate(dataset.asset_names):
            for b, name_b in enumerate(dataset.asset_names):
                fh.write(f"cov,{name_a},{name_b},{format_float(cov[a, b])}\n")
        if realized is not None:
            for a, name in enumerate(dataset.asset_names):
                fh.write(f"realized,{name},,{format_float(realized[a])}\n")
            score = log_predictive_score(density, realized)
            fh.write(f"log_score,,,{format_float(score)}\n")
    log.info("predict: wrote predictions.csv (method=%s)", spec.predictive)


def _cmd_simulate(config: dict, out_dir: str, seed: int, threads: int) -> None:
    sim = config["simulate"]
    errors: list = []
    estimators = _parse_estimators(sim.get("estimators"), errors, "simulate.estimators")
    if errors:
        raise ValidationError("; ".join(errors))
    spec = ScenarioSpec(d=int(sim["d"]), T=int(sim["T"]), sparsity=float(sim["sparsity"]),
                        n_reps=int(sim["n_reps"]), seed=seed, estimators=estimators,
                        noise_sigma=_noise_sigma(sim, int(sim["d"])), n_jobs=threads)
    result = run_scenario(spec)
    result.to_csv(os.path.join(out_dir, "scenario.csv"))
    # timings are inherently run-dependent, so they live outside the
    # deterministic outputs
    result.timings_to_csv(os.path.join(out_dir, "timings.csv"))
    log.info("simulate: wrote scenario.csv (%d records)", len(result.records))


def _cmd_backtest(config: dict, out_dir: str, seed: int, threads: int) -> None:
    dataset = _load_dataset(config)
    bt = config["backtest"]
    errors: list = []
    estimators = _parse_estimators(bt.get("estimators"), errors, "backtest.estimators")
    if errors:
        raise ValidationError("; ".join(errors))
    sizes = None
    if bt.get("sizes_csv"):
        sizes_data = load_csv(bt["sizes_csv"], list(dataset.asset_names))
        sizes = sizes_data.y
    spec = _backtest_spec(bt, estimators, sizes, threads, seed)
    report = run_backtest(dataset, spec)
    report.to_files(out_dir)
    log.info("backtest: wrote forecasts.csv, cumsse.csv, metrics.json")


def load_fit_json(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def load_predictions_csv(path) -> dict:
    """Read back predictions.csv into mean/cov/realized arrays and the score."""
    import csv
    with open(path, "r", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    assets = list(dict.fromkeys(r["i"] for r in rows if r["field"] == "mean"))
    idx = {a: i for i, a in enumerate(assets)}
    d = len(assets)
    out = {"assets": assets, "mean": np.full(d, np.nan),
           "cov": np.full((d, d), np.nan), "realized": None, "log_score": None}
    realized = np.full(d, np.nan)
    has_realized = False
    for r in rows:
        if r["field"] == "mean":
            out["mean"][idx[r["i"]]] = float(r["value"])
        elif r["field"] == "cov":
            out["cov"][idx[r["i"]], idx[r["j"]]] = float(r["value"])
        elif r["field"] == "realized":
            realized[idx[r["i"]]] = float(r["value"])
            has_realized = True
        elif r["field"] == "log_score":
            out["log_score"] = float(r["value"])
    if has_realized:
        out["realized"] = realized
    return out


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def _setup_logging(verbosity: int) -> None:
    env = os.environ.get("VBVAR_LOG_LEVEL")
    if env:
        level = getattr(logging, env.upper(), logging.INFO)
    else:
        level = {0: logging.WARNING, 1: logging.INFO}.get(verbosity, logging.DEBUG)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    log.setLevel(level)


def run(argv=None) -> int:
    parser = _Parser(prog="vbvar", description=__doc__)
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="path to the YAML run configuration")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--threads", type=int, default=None,
                        help="parallelism across replications/estimators (default: config)")
    parser.add_argument("--out", default=None, help="override the output directory")
    try:
        args = parser.parse_args(argv)
        if not os.path.exists(args.config):
            raise ValidationError(f"config file does not exist: {args.config}")
        with open(args.config, "r", encoding="utf-8") as fh:
            config = yaml.safe_load(fh) or {}
        config["command"] = args.command
        if args.seed is not None:
            config["seed"] = args.seed
        if args.threads is not None:
            config["threads"] = args.threads
        if args.out is not None:
            config["output_dir"] = args.out
        errors = validate_config(config)
        if errors:
            for err in errors:
                print(f"config error: {err}", file=sys.stderr)
            return 1
        _setup_logging(int(config.get("verbosity", 1)))
        seed = int(config.get("seed", 0))
        # parallelism spreads only independent replications/estimators
        threads = int(config.get("threads", default_n_jobs()))
        out_dir = str(config.get("output_dir", "."))
        os.makedirs(out_dir, exist_ok=True)
        if args.command == "fit":
            _cmd_fit(config, out_dir)
        elif args.command == "simulate":
            _cmd_simulate(config, out_dir, seed, threads)
        elif args.command == "backtest":
            _cmd_backtest(config, out_dir, seed, threads)
        else:
            _cmd_predict(config, out_dir, seed)
        return 0
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalFault as exc:
        print(f"numerical fault: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())
