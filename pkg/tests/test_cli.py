import json
import os

import numpy as np
import yaml

import vbvar
from vbvar.cli import run, validate_config
from conftest import sparse_var_dataset


def _write_csv(tmp_path, seed=80, d=2, T=50):
    _, dataset = sparse_var_dataset(seed, d=d, T=T, rho=0.3, scale=0.2)
    dataset = vbvar.from_arrays(dataset.y * 0.02)
    path = tmp_path / "returns.csv"
    vbvar.save_csv(path, dataset)
    return dataset, str(path)


def _write_config(tmp_path, doc, name="config.yaml"):
    path = tmp_path / name
    with open(path, "w") as fh:
        yaml.safe_dump(doc, fh)
    return str(path)


def test_validate_config_defaults_pass(tmp_path):
    _, csv_path = _write_csv(tmp_path)
    config = {"command": "fit", "data": {"csv": csv_path, "returns": ["y1", "y2"]},
              "model": {"prior": "horseshoe"}}
    assert validate_config(config) == []


def test_validate_config_catches_errors(tmp_path):
    _, csv_path = _write_csv(tmp_path)
    bad = {"command": "backtest",
           "data": {"csv": csv_path, "returns": ["y1", "y2"]},
           "backtest": {"risk_aversion": -1.0,
                        "estimators": [{"prior": "normal"}]}}
    errors = validate_config(bad)
    assert any("risk_aversion" in e for e in errors)
    bad2 = {"command": "fit", "data": {"csv": csv_path, "returns": ["y1"]},
            "model": {"convergence": {"tol_elbo": 0.0}}}
    assert any("tol_elbo" in e for e in validate_config(bad2))
    unknown = {"command": "fit", "data": {"csv": csv_path, "returns": ["y1"]},
               "model": {"prio": "normal"}}
    assert any("unknown key" in e for e in validate_config(unknown))


def test_cli_missing_input_exits_1(tmp_path, capsys):
    config = _write_config(tmp_path, {
        "data": {"csv": str(tmp_path / "missing.csv"), "returns": ["y1"]},
        "model": {}})
    code = run(["fit", "--config", config])
    assert code == 1
    assert "missing.csv" in capsys.readouterr().err


def test_cli_missing_config_exits_1(tmp_path):
    assert run(["fit", "--config", str(tmp_path / "none.yaml")]) == 1


def test_cli_fit_writes_outputs(tmp_path):
    _, csv_path = _write_csv(tmp_path)
    out = tmp_path / "out"
    config = _write_config(tmp_path, {
        "data": {"csv": csv_path, "returns": ["y1", "y2"]},
        "model": {"prior": "adaptive_lasso",
                  "convergence": {"max_iter": 150}},
        "verbosity": 0})
    code = run(["fit", "--config", config, "--out", str(out)])
    assert code == 0
    with open(out / "fit.json") as fh:
        doc = json.load(fh)
    assert np.asarray(doc["theta_mean"]).shape == (2, 3)
    assert "wishart" in doc and doc["wishart"]["delta_hat"] > 1.0
    assert "theta_sparse" in doc
    assert os.path.exists(out / "timings.csv")


def test_cli_simulate_and_determinism(tmp_path):
    config_doc = {
        "simulate": {"d": 3, "T": 60, "sparsity": 0.6, "n_reps": 2,
                     "noise": {"equicorrelated": 0.4},
                     "estimators": [{"prior": "normal"},
                                    {"prior": "adaptive_lasso",
                                     "convergence": {"max_iter": 120}}]},
        "seed": 9, "verbosity": 0}
    config = _write_config(tmp_path, config_doc)
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    assert run(["simulate", "--config", config, "--out", str(out1)]) == 0
    assert run(["simulate", "--config", config, "--out", str(out2)]) == 0
    with open(out1 / "scenario.csv", "rb") as fh:
        b1 = fh.read()
    with open(out2 / "scenario.csv", "rb") as fh:
        b2 = fh.read()
    assert b1 == b2
    assert b1.decode().startswith("rep,estimator,prior,parametrization,metric,value")


def test_cli_backtest_outputs(tmp_path):
    _, csv_path = _write_csv(tmp_path, T=48)
    out = tmp_path / "bt"
    config = _write_config(tmp_path, {
        "data": {"csv": csv_path, "returns": ["y1", "y2"]},
        "backtest": {"window": 40, "tc_bps": 10.0,
                     "estimators": [{"prior": "normal",
                                     "convergence": {"max_iter": 100}}]},
        "verbosity": 0})
    assert run(["backtest", "--config", config, "--out", str(out)]) == 0
    for name in ("forecasts.csv", "cumsse.csv", "metrics.json"):
        assert os.path.exists(out / name)
    with open(out / "metrics.json") as fh:
        metrics = json.load(fh)
    assert "vb-normal" in metrics["r2_oos"]


def test_cli_predict_holdout_score(tmp_path):
    _, csv_path = _write_csv(tmp_path, T=60)
    out = tmp_path / "pred"
    config = _write_config(tmp_path, {
        "data": {"csv": csv_path, "returns": ["y1", "y2"]},
        "model": {"prior": "normal", "convergence": {"max_iter": 150}},
        "verbosity": 0})
    assert run(["predict", "--config", config, "--out", str(out)]) == 0
    with open(out / "predictions.csv") as fh:
        lines = fh.read().strip().splitlines()
    fields = [ln.split(",")[0] for ln in lines[1:]]
    assert fields.count("mean") == 2
    assert fields.count("cov") == 4
    assert fields.count("log_score") == 1
    score = float(lines[-1].split(",")[-1])
    assert np.isfinite(score)


def test_cli_seed_override_changes_nothing_deterministic(tmp_path):
    """--seed feeds the scenario RNG: same seed, same bytes; different seed differs."""
    config = _write_config(tmp_path, {
        "simulate": {"d": 2, "T": 50, "sparsity": 0.5, "n_reps": 1,
                     "estimators": [{"prior": "normal"}]},
        "verbosity": 0})
    outs = []
    for i, seed in enumerate(("3", "3", "4")):
        out = tmp_path / f"s{i}"
        assert run(["simulate", "--config", config, "--seed", seed,
                    "--out", str(out)]) == 0
        with open(out / "scenario.csv", "rb") as fh:
            outs.append(fh.read())
    assert outs[0] == outs[1]
    assert outs[0] != outs[2]


def test_cli_threads_flag_matches_serial(tmp_path):
    config = _write_config(tmp_path, {
        "simulate": {"d": 2, "T": 50, "sparsity": 0.5, "n_reps": 2,
                     "estimators": [{"prior": "normal"}]},
        "verbosity": 0})
    out1, out2 = tmp_path / "t1", tmp_path / "t2"
    assert run(["simulate", "--config", config, "--out", str(out1),
                "--threads", "1"]) == 0
    assert run(["simulate", "--config", config, "--out", str(out2),
                "--threads", "2"]) == 0
    with open(out1 / "scenario.csv", "rb") as fh:
        b1 = fh.read()
    with open(out2 / "scenario.csv", "rb") as fh:
        b2 = fh.read()
    assert b1 == b2


def test_cli_rejects_unknown_command():
    assert run(["explode", "--config", "x.yaml"]) == 1


def test_emitted_files_reparse_with_own_readers(tmp_path):
    """Round-trip invariant: every emitted file loads through package readers."""
    from vbvar.backtest import load_cumsse_csv, load_forecasts_csv, load_metrics_json
    from vbvar.cli import load_fit_json, load_predictions_csv
    from vbvar.simulate import load_scenario_csv

    _, csv_path = _write_csv(tmp_path, T=48)
    base = {"data": {"csv": csv_path, "returns": ["y1", "y2"]}, "verbosity": 0}
    fit_cfg = _write_config(tmp_path, {**base, "model": {
        "prior": "normal", "convergence": {"max_iter": 100}}}, "f.yaml")
    sim_cfg = _write_config(tmp_path, {
        "simulate": {"d": 2, "T": 50, "sparsity": 0.5, "n_reps": 1,
                     "estimators": [{"prior": "normal"}]}, "verbosity": 0}, "s.yaml")
    bt_cfg = _write_config(tmp_path, {**base, "backtest": {
        "window": 40, "estimators": [{"prior": "normal",
                                      "convergence": {"max_iter": 100}}]}}, "b.yaml")
    out = tmp_path / "rt"
    assert run(["fit", "--config", fit_cfg, "--out", str(out)]) == 0
    assert run(["simulate", "--config", sim_cfg, "--out", str(out)]) == 0
    assert run(["backtest", "--config", bt_cfg, "--out", str(out)]) == 0
    assert run(["predict", "--config", fit_cfg, "--out", str(out)]) == 0

    doc = load_fit_json(out / "fit.json")
    assert np.asarray(doc["theta_mean"]).shape == (2, 3)
    records = load_scenario_csv(out / "scenario.csv")
    assert records and isinstance(records[0]["value"], float)
    dates, assets, forecasts, naive, realized = load_forecasts_csv(out / "forecasts.csv")
    assert assets == ["y1", "y2"] and len(dates) == 8
    assert np.all(np.isfinite(forecasts["vb-normal"]))
    series = load_cumsse_csv(out / "cumsse.csv")
    assert series["vb-normal"].shape == (8,)
    metrics = load_metrics_json(out / "metrics.json")
    assert "r2_oos" in metrics
    pred = load_predictions_csv(out / "predictions.csv")
    assert pred["mean"].shape == (2,) and pred["cov"].shape == (2, 2)
    assert pred["log_score"] is not None and np.isfinite(pred["log_score"])
