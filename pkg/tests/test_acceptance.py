"""Acceptance gate: one check per criterion, each printing a PASS/FAIL line."""
import itertools
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

from conftest import TINY, scalar_linear_system
from gradcheck import FAMILY_MODES, random_instance, relative_gradient_error
from errormodels import io
from errormodels.cli import run
from errormodels.config import CampaignConfig
from errormodels.datagen import compute_residuals, sample_parameters, sub_seed
from errormodels.dynsys import build_advection_diffusion, build_burgers_fom
from errormodels.evaluate import BoundParams, error_bound_sequence, fvu, lipschitz_constant
from errormodels.integrator import (TimeGrid, crank_nicolson, discrete_residual, implicit_euler,
                                    integrate)
from errormodels.noise import (fit_ar1, fit_gaussian, fit_laplacian, standardized_errors,
                               validation_frequency, ks_statistic)
from errormodels.pipeline import generate
from errormodels.reduction import (compute_pod, fit_residual_pca, galerkin_reduce,
                                   gappy_reconstruct, pca_project, qsample_select, reconstruct)
from errormodels.regress import TrainConfig, arx_raw_coefficients, predict_dataset, train_model
from test_regress import _dataset, _planted_arx

SEEDS = range(5)


@pytest.fixture
def report(capsys):
    """Print one verdict line outside pytest's capture, then assert it."""
    def emit(number, ok, detail, started):
        with capsys.disabled():
            verdict = "PASS" if ok else "FAIL"
            print(f"\n{verdict} criterion {number}: {detail} ({time.time() - started:.1f} s)")
        assert ok, detail
    return emit


def test_criterion_1_solver(report):
    t0 = time.time()
    traj = integrate(scalar_linear_system(-1.0), crank_nicolson(), TimeGrid(0.1, 100), None)
    recursion = np.max(np.abs(traj.states[:, 0] - (0.95 / 1.05) ** np.arange(101)))
    worst = 0.0
    cases = [(build_advection_diffusion(), crank_nicolson(), TimeGrid(3e-4, 1000), [-1.4, 0.6]),
             (build_burgers_fom(2.0), implicit_euler(), TimeGrid(0.05, 800),
              [0.03, 0.02, 4.2, 1.3])]
    for system, scheme, grid, mu in cases:
        states = integrate(system, scheme, grid, mu).states
        for n in range(1, grid.n_steps + 1):
            hist = [states[n - i] for i in range(1, scheme.width(n) + 1)]
            r = discrete_residual(system, scheme, states[n], hist, n, mu, grid.dt)
            worst = max(worst, np.linalg.norm(r))
    ok = recursion <= 1e-12 and worst <= 1e-10
    report(1, ok, f"recursion error {recursion:.1e}, max step residual {worst:.1e}", t0)


def test_criterion_2_reduction(report):
    t0 = time.time()
    ad = build_advection_diffusion(41)
    grid = TimeGrid(1e-3, 40)
    trajs = [integrate(ad, crank_nicolson(), grid, mu)
             for mu in itertools.product([-2.0, -0.1], [0.1, 1.0])]
    basis = compute_pod(trajs, "initial-state", skip=4, K=6)
    ortho = np.max(np.abs(basis.columns.T @ basis.columns - np.eye(6)))
    full = compute_pod(trajs[:1], "initial-state", skip=10, K=4)
    s = trajs[0].states[::10] - trajs[0].states[0]
    recon = np.max(np.linalg.norm(s - s @ full.columns @ full.columns.T, axis=1))
    rng = np.random.default_rng(7)
    pca = fit_residual_pca(rng.standard_normal((40, 12)) @ rng.standard_normal((12, 12)), n_r=3)
    r = rng.standard_normal(12)
    identity = np.max(np.abs(gappy_reconstruct(pca, np.arange(12), r) - pca_project(pca, r)))
    rows = qsample_select(pca, 4)
    c = np.array([1.5, -0.3, 0.7])
    inspan = np.max(np.abs(gappy_reconstruct(pca, rows, (pca.mean + pca.basis @ c)[rows]) - c))
    ok = ortho <= 1e-10 and recon <= 1e-9 and identity <= 1e-10 and inspan <= 1e-8
    report(2, ok, f"orthonormality {ortho:.1e}, reconstruction {recon:.1e}, "
                  f"identity sampling {identity:.1e}, in-span gappy {inspan:.1e}", t0)


def test_criterion_3_gradients(report):
    t0 = time.time()
    worst = {}
    for family, mode in FAMILY_MODES:
        rng = np.random.default_rng(sub_seed(0, family, mode))
        worst[f"{family}/{mode}"] = max(
            relative_gradient_error(family, *random_instance(family, rng), mode, alpha=0.05)
            for _ in range(20))
    ok = max(worst.values()) <= 1e-5
    name = max(worst, key=worst.get)
    report(3, ok, f"{len(worst)} family-modes x 20 instances, worst relative error "
                  f"{worst[name]:.1e} ({name})", t0)


def test_criterion_4_estimators(report):
    t0 = time.time()
    rng = np.random.default_rng(21)
    X, Y, Y0 = _planted_arx(rng)
    cfg = TrainConfig(lr=0.01, max_epochs=3000, patience=200, n_restarts=5, seed=3)
    w, p, b = arx_raw_coefficients(train_model("ARX", {"alpha": 0.0}, _dataset(X, Y, Y0), cfg,
                                               mode="RT"))
    arx_err = float(np.max(np.abs(np.r_[w, p, b] - [0.8, -0.5, 0.6, 0.3])))
    rng = np.random.default_rng(0)
    gauss = fit_gaussian(rng.normal(0, 2, 10_000)).variance / 4.0 - 1.0
    laplace = fit_laplacian(rng.laplace(0, 3, 10_000)).scale / 3.0 - 1.0
    seqs = np.empty((100, 100))
    for i in range(100):
        e = 0.0
        for t in range(100):
            e = 0.8 * e + rng.standard_normal()
            seqs[i, t] = e
    ar = fit_ar1(list(seqs))
    ar_c, ar_var = ar.coef / 0.8 - 1.0, ar.variance - 1.0
    hand = fit_ar1([[1.0, 0.5, 0.25]])
    rel = max(abs(gauss), abs(laplace), abs(ar_c), abs(ar_var))
    ok = (arx_err <= 1e-2 and rel <= 0.05 and hand.coef == 0.5
          and abs(hand.variance - 1.0 / 3.0) <= 1e-15)
    report(4, ok, f"ARX coefficient error {arx_err:.1e}, worst MLE relative error {rel:.3f}, "
                  f"hand example c={hand.coef}, variance={hand.variance:.15f}", t0)


def test_criterion_5_bound(report):
    t0 = time.time()
    ad = build_advection_diffusion()
    cn = crank_nicolson()
    mus = sample_parameters(ad.domain, 5, 11)
    kappas = [lipschitz_constant(ad.jacobian(None, 0.0, mu)) for mu in mus]
    # dt = 1 / max kappa keeps |alpha_0| - |beta_0| kappa dt >= 1/2 for every sample
    dt, n_steps = 1.0 / max(kappas), 600
    grid = TimeGrid(dt, n_steps)
    pod_mus = list(itertools.product([-2.0, -1.05, -0.1], [0.1, 0.55, 1.0]))
    basis = compute_pod([integrate(ad, cn, grid, m) for m in pod_mus], "initial-state",
                        skip=10, K=5)
    rom = galerkin_reduce(ad, basis)
    dominated, finite = 0, True
    for mu, kappa in zip(mus, kappas):
        truth = integrate(ad, cn, grid, mu).states
        approx = reconstruct(basis, ad, integrate(rom, cn, grid, mu).states, mu)
        r = np.linalg.norm(compute_residuals(ad, cn, approx, dt, mu, range(1, n_steps + 1)),
                           axis=1)
        err = np.linalg.norm(truth - approx, axis=1)
        bound = error_bound_sequence(r, [err[0]], BoundParams(kappa, cn, dt))
        finite &= bool(np.all(np.isfinite(bound)))
        dominated += bool(np.all(bound >= err))
    ok = dominated == len(mus) and finite
    report(5, ok, f"bound dominates the ROM error at all {n_steps + 1} indices for "
                  f"{dominated}/{len(mus)} parameters (dt={dt:.3e})", t0)


def _fit_and_score(data_dir, family, kind, response, hyper, cfg):
    man = io.read_json(Path(data_dir) / "manifest.json")
    train = io.load_dataset(data_dir, kind, man["splits"]["train"])
    test = io.load_dataset(data_dir, kind, man["splits"]["test"])
    model = train_model(family, hyper, train, cfg, response)
    truth = np.stack([s.response(response) for s in test.sequences])
    return fvu(truth, predict_dataset(model, test)), len(train)


@pytest.mark.slow
def test_criterion_6_advection_diffusion(report, tmp_path):
    t0 = time.time()
    lstm_fvu, arx_fvu, sizes = {}, {}, set()
    for seed in SEEDS:
        cfg = CampaignConfig(seed=seed)
        cfg.features.kinds = ["params+resnorm"]
        generate(cfg, tmp_path / f"ad{seed}", threads=1)
        tc = TrainConfig(lr=1e-2, max_epochs=300, patience=20, n_restarts=2,
                         seed=sub_seed(seed, "train"))
        for response in ("state-norm", "qoi"):
            lstm_fvu[seed, response], n = _fit_and_score(
                tmp_path / f"ad{seed}", "LSTM", "params+resnorm", response,
                {"depth": 1, "width": 10, "alpha": 1e-4}, tc)
            arx_fvu[seed, response], _ = _fit_and_score(
                tmp_path / f"ad{seed}", "ARX", "params+resnorm", response, {"alpha": 1e-4}, tc)
            sizes.add(n)
    worst = max(lstm_fvu.values())
    wins = {resp: sum(lstm_fvu[s, resp] <= arx_fvu[s, resp] for s in SEEDS)
            for resp in ("state-norm", "qoi")}
    ok = sizes == {40} and worst <= 0.1 and min(wins.values()) >= 4
    detail = ", ".join(f"seed {s}: LSTM {lstm_fvu[s, 'state-norm']:.4f}/{lstm_fvu[s, 'qoi']:.4f} "
                       f"ARX {arx_fvu[s, 'state-norm']:.4f}/{arx_fvu[s, 'qoi']:.4f}"
                       for s in SEEDS)
    report(6, ok, f"worst LSTM FVU {worst:.4f}, LSTM <= ARX in {wins} of 5 seeds "
                  f"[state-norm/qoi {detail}]", t0)


@pytest.mark.slow
def test_criterion_7_burgers(report, tmp_path):
    t0 = time.time()
    sampled, params_only = {}, {}
    for seed in SEEDS:
        cfg = CampaignConfig(seed=seed)
        cfg.system.name, cfg.surrogate.type = "burgers", "coarse-lfm"
        cfg.integrator.scheme, cfg.integrator.dt, cfg.integrator.n_steps = "implicit-euler", 0.05, 800
        cfg.coarse_grid.stride, cfg.coarse_grid.count = 8, 100
        cfg.features.kinds = ["params", "params+sampled-res"]
        cfg.validate()
        generate(cfg, tmp_path / f"b{seed}", threads=1)
        tc = TrainConfig(lr=1e-2, max_epochs=300, patience=30, n_restarts=2,
                         seed=sub_seed(seed, "train"))
        hyper = {"depth": 1, "width": 10, "alpha": 1e-5}
        sampled[seed], _ = _fit_and_score(tmp_path / f"b{seed}", "LSTM", "params+sampled-res",
                                          "qoi", hyper, tc)
        params_only[seed], _ = _fit_and_score(tmp_path / f"b{seed}", "LSTM", "params", "qoi",
                                              hyper, tc)
    wins = sum(sampled[s] < params_only[s] for s in SEEDS)
    worst = max(sampled.values())
    ok = worst <= 0.2 and wins >= 4
    detail = ", ".join(f"seed {s}: {sampled[s]:.4f} vs {params_only[s]:.4f}" for s in SEEDS)
    report(7, ok, f"worst sampled-residual LSTM FVU {worst:.4f}, beats params-only in "
                  f"{wins}/5 seeds [{detail}]", t0)


def test_criterion_8_noise_calibration(report):
    t0 = time.time()
    rng = np.random.default_rng(8)
    model = fit_gaussian(rng.normal(0.0, 0.7, 2000))
    draws = rng.normal(0.0, np.sqrt(model.variance), 5000)
    w68 = validation_frequency(model, draws, 0.68)
    w95 = validation_frequency(model, draws, 0.95)
    n = 100
    matched = np.sqrt(model.variance) * stats.norm.ppf((np.arange(1, n + 1) - 0.5) / n)
    ks = ks_statistic(standardized_errors(model, matched), "normal")
    ok = 0.63 <= w68 <= 0.73 and 0.92 <= w95 <= 0.98 and ks <= 0.01
    report(8, ok, f"omega(0.68)={w68:.4f}, omega(0.95)={w95:.4f}, K-S={ks:.4f}", t0)


def test_criterion_9_determinism(report, tmp_path):
    t0 = time.time()
    cfg = tmp_path / "tiny.toml"
    cfg.write_text(TINY)
    runs = []
    for i in range(2):
        out = tmp_path / f"run{i}"
        codes = [run(["generate", "--config", str(cfg), "--out", str(out / "data")])]
        for family in ("ARX", "LSTM"):
            codes.append(run(["train", "--data", str(out / "data"), "--family", family,
                              "--kind", "params+resnorm", "--config", str(cfg),
                              "--out", str(out / f"{family}.json")]))
            codes.append(run(["evaluate", "--model", str(out / f"{family}.json"),
                              "--data", str(out / "data"), "--out", str(out / f"eval-{family}")]))
        files = {p.relative_to(out): p.read_bytes() for p in sorted(out.rglob("*"))
                 if p.is_file() and p.name != "manifest.json"}
        manifest = io.read_json(out / "data" / "manifest.json")
        manifest.pop("metadata")
        files["manifest"] = repr(manifest)
        runs.append((codes, files))
    (codes_a, a), (codes_b, b) = runs
    same = a.keys() == b.keys() and all(a[k] == b[k] for k in a)
    ok = set(codes_a) == {0} and codes_a == codes_b and same
    report(9, ok, f"{len(a)} output files compared byte for byte, identical={same}", t0)
