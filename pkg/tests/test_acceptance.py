"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Instance designs that the criteria leave open (sample sizes, innovation
covariances, priors) are fixed here and documented inline; every tolerance
comes from the criterion text.
"""

import os
import time

import numpy as np
import pytest
from scipy import integrate, special, stats

import vbvar
from vbvar.model import build_design
from vbvar.posterior import (
    approx_accuracy,
    fit_wishart,
    fit_wishart_from_moments,
    sample_omega_entries,
    wishart_marginal_density,
)
from vbvar.predictive import predict_gaussian, predict_mc_theta
from conftest import equicorrelated, sparse_var_dataset, theta_under_permutation

N_JOBS = min(4, os.cpu_count() or 1)


def _report(criterion, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    print(f"[{status}] Criterion {criterion}: {detail}")
    assert ok, f"criterion {criterion} failed: {detail}"


# --------------------------------------------------------------------------
# 1. ELBO monotonicity across every prior / parametrization / factorization


def test_criterion_1_elbo_monotonicity():
    t0 = time.perf_counter()
    worst = 0.0
    count = 0
    for prior in ("normal", "adaptive_lasso", "normal_gamma", "horseshoe"):
        for parametrization in ("direct", "cholesky_linearized"):
            for factorization in ("joint", "row_independent"):
                for instance in range(10):
                    _, dataset = sparse_var_dataset(1000 + instance, d=5, T=100,
                                                    rho=0.4)
                    spec = vbvar.ModelSpec(
                        prior=prior, parametrization=parametrization,
                        theta_factorization=factorization,
                        max_iter=20, tol_elbo=1e-16, tol_param=1e-16)
                    result = vbvar.fit(dataset, spec)
                    trace = np.asarray(result.elbo_trace)
                    rel_drop = (trace[:-1] - trace[1:]) / np.maximum(1.0, np.abs(trace[:-1]))
                    worst = max(worst, float(np.max(rel_drop)))
                    count += 1
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-8 and elapsed < 120.0
    _report(1, ok, f"{count} runs, worst relative ELBO drop {worst:.2e}, "
                   f"runtime {elapsed:.1f}s (< 120s)")


# --------------------------------------------------------------------------
# 2. Diffuse-prior fit equals feasible GLS at the converged E[Omega]


def test_criterion_2_gls_oracle():
    _, dataset = sparse_var_dataset(2001, d=3, T=200, rho=0.4)
    hyper = vbvar.HyperParams(tau=1e8, upsilon0=1e8)
    spec = vbvar.ModelSpec(prior="normal", theta_factorization="joint", hyper=hyper,
                           max_iter=3000, tol_elbo=1e-13, tol_param=1e-10)
    result = vbvar.fit(dataset, spec)
    y_d, z_d = build_design(dataset)
    omega = result.mu_omega
    gls = np.linalg.solve(np.kron(omega, z_d.T @ z_d),
                          (omega @ (y_d.T @ z_d)).ravel()).reshape(result.theta.shape)
    err = float(np.max(np.abs(gls - result.theta)))
    _report(2, err < 1e-4, f"max |theta - GLS| = {err:.2e} (tol 1e-4)")


# --------------------------------------------------------------------------
# 3. Expectation identities against Monte Carlo oracles


def _identity_a1(rng, n_draws=1_000_000):
    n, p = 6, 3
    y = rng.standard_normal(n)
    x = rng.standard_normal((p, n))
    mu = rng.standard_normal(p) * 0.5
    a = rng.standard_normal((p, p + 2))
    sigma = a @ a.T / (p + 2) * 0.2
    analytic = (np.sum((y - mu @ x) ** 2) + float(np.sum(sigma * (x @ x.T))))
    draws = mu[None, :] + rng.standard_normal((n_draws, p)) @ np.linalg.cholesky(sigma).T
    vals = np.sum((y[None, :] - draws @ x) ** 2, axis=1)
    return analytic, vals


def _identity_a2(rng, n_draws=1_000_000):
    d, p = 2, 3
    a = rng.standard_normal((p, p + 1))
    a_mat = a @ a.T / (p + 1)
    mu = rng.standard_normal((d, p)) * 0.4
    c = rng.standard_normal((d * p, d * p + 2))
    cov = c @ c.T / (d * p + 2) * 0.1
    blocks = cov.reshape(d, p, d, p)
    k_mat = np.einsum("iakb,ab->ik", blocks, a_mat)
    analytic = mu @ a_mat @ mu.T + k_mat
    chol = np.linalg.cholesky(cov)
    draws = (mu.reshape(-1)[None, :]
             + rng.standard_normal((n_draws, d * p)) @ chol.T).reshape(n_draws, d, p)
    vals = np.einsum("nip,pq,njq->nij", draws, a_mat, draws)
    return analytic, vals


def _identity_a3(rng, n_draws=1_000_000):
    d = 4
    a = rng.standard_normal((d, d + 1))
    sigma = a @ a.T / (d + 1) + 0.1 * np.eye(d)
    mu = rng.standard_normal(d)
    prec = np.linalg.inv(sigma)
    draws = mu[None, :] + rng.standard_normal((n_draws, d)) @ np.linalg.cholesky(sigma).T
    dev = draws - mu
    vals = np.einsum("ni,ij,nj->n", dev, prec, dev)
    return float(d), vals


def test_criterion_3_expectation_identities():
    rng = np.random.default_rng(3003)
    all_ok = True
    details = []
    for name, builder in (("quadratic-residual", _identity_a1),
                          ("matrix-quadratic", _identity_a2),
                          ("standardized-form", _identity_a3)):
        worst_z = 0.0
        for _ in range(5):
            analytic, vals = builder(rng)
            if np.ndim(analytic) == 0:
                mean, se = vals.mean(), vals.std(ddof=1) / np.sqrt(len(vals))
                z = abs(mean - analytic) / se
            else:
                mc = vals.mean(axis=0)
                se = vals.std(axis=0, ddof=1) / np.sqrt(vals.shape[0])
                z = float(np.max(np.abs(mc - analytic) / se))
            worst_z = max(worst_z, float(z))
        all_ok &= worst_z < 3.0
        details.append(f"{name} worst |z| = {worst_z:.2f}")
    _report(3, all_ok, "; ".join(details) + " (3 sigma band, 1e6 draws, 5 instances each)")


# --------------------------------------------------------------------------
# 4. Simulation-study direction at desk scale


@pytest.mark.slow
def test_criterion_4_simulation_direction():
    t0 = time.perf_counter()
    estimators = []
    for prior in ("adaptive_lasso", "normal_gamma", "horseshoe"):
        for parametrization in ("direct", "cholesky_linearized"):
            estimators.append(vbvar.ModelSpec(prior=prior, parametrization=parametrization,
                                              max_iter=500))
    # innovation covariance: equicorrelation 0.9, matching the strong
    # cross-sectional residual correlation of monthly industry returns; this
    # is the regime where the rotated-prior baseline scrambles the sparsity
    spec = vbvar.ScenarioSpec(d=15, T=360, sparsity=0.9, n_reps=20, seed=4004,
                              estimators=estimators,
                              noise_sigma=equicorrelated(15, 0.9), n_jobs=N_JOBS)
    result = vbvar.run_scenario(spec)
    ok = True
    details = []
    for prior in ("adaptive_lasso", "normal_gamma", "horseshoe"):
        f1_vb = float(np.median(result.metric(f"vb-{prior}", "f1")))
        f1_lvb = float(np.median(result.metric(f"lvb-{prior}", "f1")))
        fr_vb = float(np.median(result.metric(f"vb-{prior}", "frobenius")))
        fr_lvb = float(np.median(result.metric(f"lvb-{prior}", "frobenius")))
        ok &= f1_vb > f1_lvb and fr_vb < fr_lvb
        details.append(f"{prior}: F1 {f1_vb:.3f}>{f1_lvb:.3f}, "
                       f"frob {fr_vb:.3f}<{fr_lvb:.3f}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 1800.0
    _report(4, ok, "; ".join(details) + f"; runtime {elapsed:.0f}s (< 1800s)")


# --------------------------------------------------------------------------
# 5. Permutation equivariance of the direct fit; non-invariance of the baseline


@pytest.mark.slow
def test_criterion_5_permutation_invariance():
    # the direct fixed point is equivariant only up to O(1/T) mean-field
    # corrections, so the instances use a long sample to isolate the
    # structural property; the ordering dependence of the baseline persists
    direct_ok = 0
    lvb_noninvariant = 0
    details = []
    for seed in range(5):
        rng = np.random.default_rng(100 + seed)
        theta = vbvar.generate_theta(5, 0.6, rng) * 2.5
        sr = vbvar.spectral_radius(theta)
        if sr >= 0.95:
            theta *= 0.9 / sr
        dataset = vbvar.simulate_var(theta, 25600, rng,
                                     noise_sigma=equicorrelated(5, 0.9))
        perm = rng.permutation(5)
        spec = vbvar.ModelSpec(prior="horseshoe", parametrization="direct",
                               max_iter=8000, tol_elbo=1e-15, tol_param=1e-12)
        f1 = vbvar.fit(dataset, spec)
        f2 = vbvar.fit(vbvar.permute(dataset, perm), spec)
        gap_direct = float(np.max(np.abs(
            f2.theta - theta_under_permutation(f1.theta, perm, 0))))
        spec_l = spec.with_options(parametrization="cholesky_linearized")
        g1 = vbvar.fit(dataset, spec_l)
        g2 = vbvar.fit(vbvar.permute(dataset, perm), spec_l)
        gap_lvb = float(np.max(np.abs(
            g2.theta - theta_under_permutation(g1.theta, perm, 0))))
        direct_ok += gap_direct < 1e-6
        lvb_noninvariant += gap_lvb > 1e-3
        details.append(f"seed {seed}: direct {gap_direct:.1e}, baseline {gap_lvb:.1e}")
    ok = direct_ok == 5 and lvb_noninvariant >= 4
    _report(5, ok, f"direct equivariant {direct_ok}/5 (tol 1e-6), baseline "
                   f"non-invariant {lvb_noninvariant}/5 (> 1e-3); " + "; ".join(details))


# --------------------------------------------------------------------------
# 6. Wishart projection: recovery, self-accuracy, diagonal ordering


def test_criterion_6_wishart_projection():
    rng = np.random.default_rng(6006)
    # (a) exact recovery from true Wishart moments
    d0, delta0 = 4, 30.0
    a = rng.standard_normal((d0, d0))
    h0 = a @ a.T / d0 + np.eye(d0)
    e_omega = delta0 * h0
    e_log_det = float(np.sum(special.digamma((delta0 - np.arange(d0)) / 2.0))
                      + d0 * np.log(2.0) + np.linalg.slogdet(h0)[1])
    approx = fit_wishart_from_moments(e_omega, e_log_det)
    rel = abs(approx.delta_hat - delta0) / delta0
    ok_recovery = rel < 1e-3

    # (b) ACC of a distribution against itself at 1e5 samples
    samples = rng.chisquare(25.0, size=100_000) * 0.7
    dens = lambda x: stats.chi2.pdf(np.asarray(x) / 0.7, 25.0) / 0.7
    acc_self = approx_accuracy(samples, dens)
    ok_self = acc_self >= 95.0

    # (c) diagonal vs off-diagonal accuracy on a converged d=15 fit
    _, dataset = sparse_var_dataset(6007, d=15, T=360, rho=0.7)
    fit_res = vbvar.fit(dataset, vbvar.ModelSpec(prior="horseshoe", max_iter=300))
    wish = fit_wishart(fit_res)
    diag_entries = [(0, 0), (5, 5), (10, 10)]
    off_entries = [(0, 5), (3, 9), (7, 12)]
    accs = {}
    for entries, label in ((diag_entries, "diag"), (off_entries, "off")):
        vals = []
        draws = sample_omega_entries(fit_res, entries, 100_000, np.random.default_rng(1))
        for idx, (j, k) in enumerate(entries):
            dens_q = wishart_marginal_density(wish, j, k, n_draws=100_000,
                                              rng=np.random.default_rng(2))
            samples_p = draws[:, idx]
            lo = min(samples_p.min(), samples_p.mean() - 6 * samples_p.std())
            hi = max(samples_p.max(), samples_p.mean() + 6 * samples_p.std())
            vals.append(approx_accuracy(samples_p, dens_q, grid_range=(lo, hi)))
        accs[label] = float(np.mean(vals))
    ok_directional = accs["diag"] >= accs["off"]

    ok = ok_recovery and ok_self and ok_directional
    _report(6, ok, f"delta recovery rel err {rel:.1e} (tol 1e-3); "
                   f"ACC(p,p) = {acc_self:.1f}% (>= 95); "
                   f"diag ACC {accs['diag']:.1f}% >= off-diag ACC {accs['off']:.1f}%")


# --------------------------------------------------------------------------
# 7. Predictive consistency: Gaussian approximation vs Student-t mixture


def test_criterion_7_predictive_consistency():
    # concentrated case: dof far above the dimension
    _, dataset = sparse_var_dataset(7007, d=2, T=300, rho=0.4)
    fit_res = vbvar.fit(dataset, vbvar.ModelSpec(prior="adaptive_lasso", max_iter=400))
    wish = fit_wishart(fit_res)
    assert wish.delta_hat >= 2 + 50
    z_t = np.concatenate([[1.0], dataset.y[-1]])
    gauss = predict_gaussian(fit_res, z_t)
    n_mc = 100_000
    mc = predict_mc_theta(fit_res, z_t, n_mc, rng=np.random.default_rng(3))
    mc_mean = mc.draws.mean(axis=0)
    mc_cov = np.cov(mc.draws.T, ddof=1)
    se_mean = mc.draws.std(axis=0, ddof=1) / np.sqrt(n_mc)
    ok_mean = bool(np.all(np.abs(mc_mean - gauss.mean) < 3 * se_mean))
    se_cov = np.sqrt((np.outer(np.diag(mc_cov), np.diag(mc_cov)) + mc_cov ** 2) / n_mc)
    ok_cov = bool(np.all(np.abs(mc_cov - gauss.cov) < 3 * se_cov))

    # heavy-tail case: dof near the dimension
    _, tiny = sparse_var_dataset(7008, d=3, T=11, rho=0.3)
    fit_tiny = vbvar.fit(tiny, vbvar.ModelSpec(prior="adaptive_lasso", max_iter=300))
    wish_tiny = fit_wishart(fit_tiny)
    v = wish_tiny.student_dof()
    assert v < 10.0, f"expected dof below 10, got {v}"
    z_tiny = np.concatenate([[1.0], tiny.y[-1]])
    g_tiny = predict_gaussian(fit_tiny, z_tiny)
    mc_tiny = predict_mc_theta(fit_tiny, z_tiny, 4000, rng=np.random.default_rng(4))
    sd = np.sqrt(g_tiny.cov[0, 0])
    center = g_tiny.mean[0]
    lo, hi = center - 4 * sd, center + 4 * sd
    tail_gauss = float(stats.norm.sf(4.0) + stats.norm.cdf(-4.0))
    s = np.sqrt(mc_tiny.student_scale[0, 0])
    comp = mc_tiny.component_means[:, 0]
    tail_mix = float(np.mean(stats.t.sf((hi - comp) / s, v)
                             + stats.t.cdf((lo - comp) / s, v)))
    ok_tail = tail_mix > tail_gauss

    ok = ok_mean and ok_cov and ok_tail
    _report(7, ok, f"dof {wish.delta_hat:.0f} moments within 3 MC s.e. "
                   f"(mean {ok_mean}, cov {ok_cov}); tail at v={v:.1f}: "
                   f"mixture {tail_mix:.2e} > gaussian {tail_gauss:.2e}")


# --------------------------------------------------------------------------
# 8. Special-function oracles on a random parameter grid


def _gig_quad_moments(zeta, a, b):
    def kernel(v, f):
        return f(v) * v ** (zeta - 1.0) * np.exp(-0.5 * (a * v + b / v))

    opts = dict(limit=400)
    mass, _ = integrate.quad(lambda v: kernel(v, lambda _: 1.0), 0.0, np.inf, **opts)
    mean, _ = integrate.quad(lambda v: kernel(v, lambda u: u), 0.0, np.inf, **opts)
    inv, _ = integrate.quad(lambda v: kernel(v, lambda u: 1.0 / u), 0.0, np.inf, **opts)
    return mean / mass, inv / mass


def test_criterion_8_special_function_grid():
    rng = np.random.default_rng(8008)
    worst_moment = 0.0
    worst_recurrence = 0.0
    for _ in range(100):
        family = rng.integers(0, 3)
        if family == 0:        # generalized inverse Gaussian
            zeta = rng.uniform(-2.0, 3.0)
            a = 10.0 ** rng.uniform(-1.5, 1.5)
            b = 10.0 ** rng.uniform(-1.5, 1.5)
            m = vbvar.gig_moments(vbvar.GIGParams(zeta=zeta, a=a, b=b))
            q_mean, q_inv = _gig_quad_moments(zeta, a, b)
            worst_moment = max(worst_moment,
                               abs(m["mean"] - q_mean) / abs(q_mean),
                               abs(m["mean_inverse"] - q_inv) / abs(q_inv))
        elif family == 1:      # lasso inverse-Gaussian block: upsilon ~ GIG(1/2, b, a)
            a = 10.0 ** rng.uniform(-2.0, 1.0)   # squared-coefficient moment
            b = 10.0 ** rng.uniform(-1.0, 1.0)   # lambda^2 moment
            mu_inv = np.sqrt(b / a)
            mu_ups = np.sqrt(a / b) + 1.0 / b
            q_mean, q_inv = _gig_quad_moments(0.5, b, a)
            worst_moment = max(worst_moment,
                               abs(mu_ups - q_mean) / abs(q_mean),
                               abs(mu_inv - q_inv) / abs(q_inv))
        else:                  # inverse-gamma block
            shape = rng.uniform(0.6, 8.0)
            scale = 10.0 ** rng.uniform(-1.0, 1.0)
            mu_inv = shape / scale

            def kern(x, f, shape=shape, scale=scale):
                return f(x) * x ** (-shape - 1.0) * np.exp(-scale / x)

            mass, _ = integrate.quad(lambda x: kern(x, lambda _: 1.0), 0, np.inf, limit=400)
            inv, _ = integrate.quad(lambda x: kern(x, lambda u: 1.0 / u), 0, np.inf, limit=400)
            worst_moment = max(worst_moment, abs(mu_inv - inv / mass) / abs(inv / mass))
        # Bessel recurrence residual in log space
        zeta = rng.uniform(-3.0, 3.0)
        x = 10.0 ** rng.uniform(-2.0, 2.5)
        up = np.exp(vbvar.log_bessel_k(zeta + 1, x) - vbvar.log_bessel_k(zeta, x))
        down = np.exp(vbvar.log_bessel_k(zeta - 1, x) - vbvar.log_bessel_k(zeta, x))
        resid = abs(up - (down + 2 * zeta / x)) / max(1.0, abs(up))
        worst_recurrence = max(worst_recurrence, resid)
    ok = worst_moment < 1e-6 and worst_recurrence < 1e-8
    _report(8, ok, f"worst moment rel err {worst_moment:.1e} (tol 1e-6); "
                   f"worst recurrence residual {worst_recurrence:.1e} (tol 1e-8)")


# --------------------------------------------------------------------------
# 9. Backtest arithmetic against hand computations


def test_criterion_9_backtest_arithmetic():
    rng = np.random.default_rng(9009)
    n, d = 40, 2
    realized = rng.normal(0.005, 0.03, size=(n, d))
    naive = rng.normal(0.004, 0.002, size=(n, d))
    forecasts = naive + rng.normal(0.0, 0.02, size=(n, d))
    weights_metric = rng.uniform(0.5, 2.0, size=(n, d))
    gamma = 5.0

    em = realized - forecasts
    en = realized - naive
    ok = True

    # R2_oos per asset, by explicit loops
    for a in range(d):
        sse_m = sum(em[t, a] ** 2 for t in range(n))
        sse_n = sum(en[t, a] ** 2 for t in range(n))
        ok &= abs(vbvar.r2_oos(em[:, a], en[:, a]) - (1 - sse_m / sse_n)) < 1e-12

    # weighted R2
    num = sum(weights_metric[t, a] * em[t, a] ** 2 for t in range(n) for a in range(d))
    den = sum(weights_metric[t, a] * en[t, a] ** 2 for t in range(n) for a in range(d))
    ok &= abs(vbvar.weighted_r2_oos(em, en, weights_metric) - (1 - num / den)) < 1e-12

    # cumulative SSE differential
    series = vbvar.cum_sse_diff(em, en, weights_metric)
    run_m = run_n = 0.0
    for t in range(n):
        agg_m = sum(weights_metric[t, a] * em[t, a] for a in range(d))
        agg_n = sum(weights_metric[t, a] * en[t, a] for a in range(d))
        run_m += agg_m ** 2
        run_n += agg_n ** 2
        ok &= abs(series[t] - (run_n - run_m)) < 1e-12

    # CER differential with hand-computed weight paths and costs
    tc = 10.0
    var_hat = np.full(n, 0.03 ** 2)
    w_model = np.clip((forecasts[:, 0] + var_hat / 2) / (gamma * var_hat), -2.0, 3.0)
    w_naive = np.clip((naive[:, 0] + var_hat / 2) / (gamma * var_hat), -2.0, 3.0)

    def hand_returns(w, tc_bps):
        rate = tc_bps / 1e4
        drift = 0.0
        out = []
        for t in range(n):
            cost = rate * abs(w[t] - drift)
            gross = w[t] * realized[t, 0]
            out.append(gross - cost)
            drift = w[t] * (1 + realized[t, 0]) / (1 + gross)
        return np.array(out)

    r_model_hand = hand_returns(w_model, tc)
    r_model = vbvar.strategy_returns(w_model[:, None], realized[:, :1], tc)
    ok &= float(np.max(np.abs(r_model_hand - r_model))) < 1e-12

    def hand_ce(r):
        return float(np.mean((1 + r) ** (1 - gamma)) ** (1 / (1 - gamma)) - 1)

    r_naive = vbvar.strategy_returns(w_naive[:, None], realized[:, :1], tc)
    diff_hand = 12 * 100 * (hand_ce(r_model) - hand_ce(r_naive))
    ok &= abs(vbvar.cer(r_model, r_naive, gamma) - diff_hand) < 1e-12

    # identical model and naive forecasts, zero costs
    ok &= vbvar.r2_oos(en[:, 0], en[:, 0]) == 0.0
    r_same = vbvar.strategy_returns(w_naive[:, None], realized[:, :1], 0.0)
    ok &= vbvar.cer(r_same, r_same, gamma) == 0.0

    _report(9, ok, "R2, weighted R2, cumulative SSE, costs and CER match "
                   "hand arithmetic to 1e-12; identical forecasts give zeros")


# --------------------------------------------------------------------------
# 10. Byte-identical outputs for every command


def test_criterion_10_determinism(tmp_path):
    import yaml

    _, dataset = sparse_var_dataset(9010, d=2, T=48, rho=0.3, scale=0.2)
    dataset = vbvar.from_arrays(dataset.y * 0.02)
    csv_path = tmp_path / "returns.csv"
    vbvar.save_csv(csv_path, dataset)

    configs = {
        "fit": {"data": {"csv": str(csv_path), "returns": ["y1", "y2"]},
                "model": {"prior": "adaptive_lasso",
                          "convergence": {"max_iter": 150}}},
        "simulate": {"simulate": {"d": 3, "T": 60, "sparsity": 0.6, "n_reps": 2,
                                  "noise": {"equicorrelated": 0.4},
                                  "estimators": [{"prior": "horseshoe"}]}},
        "backtest": {"data": {"csv": str(csv_path), "returns": ["y1", "y2"]},
                     "backtest": {"window": 40,
                                  "estimators": [{"prior": "normal",
                                                  "convergence": {"max_iter": 100}}]}},
        "predict": {"data": {"csv": str(csv_path), "returns": ["y1", "y2"]},
                    "model": {"prior": "normal",
                              "predictive": {"method": "mc_theta", "n_draws": 200},
                              "convergence": {"max_iter": 150}}},
    }
    deterministic_outputs = {
        "fit": ["fit.json"],
        "simulate": ["scenario.csv"],
        "backtest": ["forecasts.csv", "cumsse.csv", "metrics.json"],
        "predict": ["predictions.csv"],
    }
    from vbvar.cli import run as cli_run
    ok = True
    details = []
    for command, doc in configs.items():
        doc = dict(doc)
        doc["verbosity"] = 0
        config_path = tmp_path / f"{command}.yaml"
        with open(config_path, "w") as fh:
            yaml.safe_dump(doc, fh)
        blobs = []
        for attempt in range(2):
            out_dir = tmp_path / f"{command}_{attempt}"
            code = cli_run([command, "--config", str(config_path), "--seed", "11",
                            "--out", str(out_dir)])
            ok &= code == 0
            blob = b""
            for name in deterministic_outputs[command]:
                with open(out_dir / name, "rb") as fh:
                    blob += fh.read()
            blobs.append(blob)
        same = blobs[0] == blobs[1]
        ok &= same
        details.append(f"{command}: {'identical' if same else 'DIFFERS'}")
    _report(10, ok, "; ".join(details))
