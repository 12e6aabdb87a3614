"""Batch workflows behind the command-line interface."""

import csv
import itertools
import logging
import time
from pathlib import Path

import numpy as np

from . import io
from .config import family_grid
from .datagen import (CoarseSurrogate, CoarseTimeGrid, GalerkinSurrogate, SplitConfig,
                      build_dataset, run_campaign, sample_parameters, split_indices, sub_seed)
from .dynsys import build_advection_diffusion, build_burgers_fom, linear_interpolation
from .evaluate import fvu, report_grid
from .exceptions import CompatibilityError, ConfigurationError, DegenerateVarianceError
from .features import FeatureSpec, kind_is_sampled, kind_needs_pca
from .integrator import TimeGrid, get_scheme, integrate
from .noise import (fit_noise, histogram_data, ks_statistic, noise_scale_sequence,
                    standardized_errors, validation_frequency)
from .reduction import compute_pod, fit_residual_pca, galerkin_reduce, qsample_select
from .regress import TrainConfig, default_mode, get_family, grid_search_select, predict_dataset

log = logging.getLogger(__name__)

COVERAGE_LEVELS = (0.68, 0.95, 0.99)


def build_system(cfg):
    if cfg.system.name == "advection-diffusion":
        return build_advection_diffusion(cfg.system.n_cells)
    return build_burgers_fom(cfg.system.cell_width)


def _coarse_system(cfg):
    width = cfg.surrogate.cell_width
    if cfg.system.name == "burgers":
        return build_burgers_fom(width)
    cells = 2.0 / width
    if abs(cells - round(cells)) > 1e-9:
        raise ConfigurationError(f"coarse width {width} does not divide the domain [0, 2]")
    return build_advection_diffusion(int(round(cells)))


def build_surrogate(cfg, system, scheme, grid, threads=1):
    """Surrogate model plus the matrices to persist alongside the data."""
    if cfg.surrogate.type == "pod-galerkin":
        pod_mus = np.array(list(itertools.product(*cfg.surrogate.pod_grid)), dtype=float)
        if pod_mus.shape[1] != system.n_params:
            raise ConfigurationError(
                f"POD grid has {pod_mus.shape[1]} parameter axes, system has {system.n_params}")
        trajs = [integrate(system, scheme, grid, mu) for mu in pod_mus]
        basis = compute_pod(trajs, cfg.surrogate.x_ref, cfg.surrogate.skip, cfg.surrogate.K)
        rom = galerkin_reduce(system, basis)
        return GalerkinSurrogate(rom, basis, system), {"pod_basis": basis.columns}
    coarse = _coarse_system(cfg)
    return CoarseSurrogate(coarse, linear_interpolation(coarse.coords, system.coords)), {}


def generate(cfg, out_dir, threads=None):
    """Run the campaign and write datasets, summaries and the manifest."""
    out = Path(out_dir)
    threads = cfg.threads if threads is None else threads
    system = build_system(cfg)
    scheme = get_scheme(cfg.integrator.scheme)
    grid = TimeGrid(cfg.integrator.dt, cfg.integrator.n_steps)
    coarse = CoarseTimeGrid.from_stride(cfg.coarse_grid.stride, cfg.coarse_grid.count)
    coarse.check(grid.n_steps)
    split = SplitConfig(cfg.split.n_train, cfg.split.n_val, cfg.split.n_test,
                        cfg.split.n_noise_train, seed=cfg.seed)
    param_seed = sub_seed(cfg.seed, "parameters")
    mus = sample_parameters(system.domain, split.total, param_seed)
    ids = split_indices(len(mus), split)

    surrogate, artifacts = build_surrogate(cfg, system, scheme, grid, threads)
    raws = run_campaign(system, scheme, grid, coarse, surrogate, mus, threads)

    pca = rows = None
    if any(kind_needs_pca(k) for k in cfg.features.kinds):
        R = np.concatenate([raws[i].residuals for i in ids["train"]])
        pca = fit_residual_pca(R, cfg.features.energy)
        rows = qsample_select(pca, pca.n_r)
        artifacts.update(residual_pca_basis=pca.basis, residual_mean=pca.mean[None, :],
                         sampled_rows=rows[None, :].astype(float))

    out.mkdir(parents=True, exist_ok=True)
    (out / "artifacts").mkdir(exist_ok=True)
    for name, M in artifacts.items():
        io.write_matrix(out / "artifacts" / f"{name}.txt", M)
    (out / "trajectories").mkdir(exist_ok=True)
    for r in raws:
        with open(out / "trajectories" / io.instance_name(r.instance), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["coarse_index", "fine_index", "time", "delta_x", "delta_q", "residual_norm"])
            norms = np.linalg.norm(r.residuals, axis=1)
            for n in range(len(r.fine_index)):
                w.writerow([n + 1, int(r.fine_index[n]), io._fmt(r.times[n]), io._fmt(r.delta_x[n]),
                            io._fmt(r.delta_q[n]), io._fmt(norms[n])])
    kinds = {}
    for kind in cfg.features.kinds:
        spec = FeatureSpec(kind, system.n_params, system.dim,
                           pca=pca if kind_needs_pca(kind) else None,
                           rows=rows if kind_is_sampled(kind) else None)
        ds = build_dataset(raws, spec, coarse)
        kdir = out / "datasets" / kind
        kdir.mkdir(parents=True, exist_ok=True)
        names = spec.names()
        for seq in ds.sequences:
            io.write_sequence_csv(kdir / io.instance_name(seq.instance), seq, names)
        kinds[kind] = {"dim": spec.dim, "columns": names}

    manifest = {
        "schema_version": io.SCHEMA_VERSION,
        "system": cfg.system.name,
        "surrogate": cfg.surrogate.type,
        "state_dim": system.dim,
        "n_params": system.n_params,
        "scheme": scheme.name,
        "dt": grid.dt,
        "n_steps": grid.n_steps,
        "coarse_grid": list(coarse.indices),
        "feature_kinds": sorted(kinds),
        "features": kinds,
        "seeds": {"master": cfg.seed, "parameters": param_seed,
                  "noise_split": sub_seed(cfg.seed, "noise-split")},
        "splits": ids,
        "instances": [{"id": r.instance, "mu": r.mu.tolist(),
                       "initial_errors": list(r.initial_errors)} for r in raws],
        "artifacts": sorted(f"artifacts/{n}.txt" for n in artifacts),
        "n_residual_components": None if pca is None else pca.n_r,
        "config": cfg.to_dict(),
        "metadata": {"created": time.strftime("%Y-%m-%dT%H:%M:%S%z")},
    }
    io.write_json(out / "manifest.json", manifest)
    return manifest


def _manifest(data_dir):
    path = Path(data_dir) / "manifest.json"
    if not path.exists():
        raise ConfigurationError(f"no manifest.json in {data_dir}")
    return io.read_json(path)


def train_config(cfg):
    t = cfg.train
    return TrainConfig(lr=t.lr, beta1=t.beta1, beta2=t.beta2, eps=t.eps,
                       max_epochs=t.max_epochs, patience=t.patience, holdout=t.holdout,
                       n_restarts=t.n_restarts, seed=sub_seed(cfg.seed, "train"))


def _regression_errors(model, dataset):
    pred = predict_dataset(model, dataset)
    truth = np.stack([s.response(model.response) for s in dataset.sequences])
    return truth - pred, truth, pred


def train(cfg, data_dir, family, kind, response=None, out_path=None):
    """Grid search for ``family`` on one dataset and fit its noise models."""
    family = get_family(family)
    response = response or cfg.train.response
    man = _manifest(data_dir)
    if kind not in man["feature_kinds"]:
        raise CompatibilityError(
            f"data in {data_dir} has feature kinds {man['feature_kinds']}, not {kind!r}")
    ids = man["splits"]
    n_train = cfg.train.n_train or len(ids["train"])
    train_ids, val_ids = ids["train"][:n_train], ids["val"][:n_train // 4]
    train_ds = io.load_dataset(data_dir, kind, train_ids)
    val_ds = io.load_dataset(data_dir, kind, val_ids)
    grid = family_grid(cfg, family)
    mode = cfg.train.modes.get(family) if family not in ("kNN", "GP") else None
    if family not in ("kNN", "GP") and mode is None:
        mode = default_mode(family)
    model, score = grid_search_select(family, grid, train_ds, val_ds, train_config(cfg),
                                      response, mode)
    if cfg.train.noise and ids["noise_train"]:
        noise_ds = io.load_dataset(data_dir, kind, ids["noise_train"])
        err, _, _ = _regression_errors(model, noise_ds)
        model.noise = {k: fit_noise(k, list(err)) for k in cfg.train.noise}
    if out_path is not None:
        Path(out_path).parent.mkdir(parents=True, exist_ok=True)
        io.save_model(out_path, model)
    return model


def evaluate(model_path, data_dir, out_dir):
    """Test-set metrics, noise diagnostics and prediction CSVs."""
    model = io.load_model(model_path)
    man = _manifest(data_dir)
    kind = model.feature_kind
    if kind not in man["feature_kinds"] or man["features"][kind]["dim"] != model.n_features:
        raise CompatibilityError(
            f"model uses feature kind {kind!r} with {model.n_features} inputs; data in "
            f"{data_dir} provides {man['feature_kinds']}")
    ids = man["splits"]
    test = io.load_dataset(data_dir, kind, ids["test"])
    err, truth, pred = _regression_errors(model, test)
    metrics = {"family": model.family, "feature_kind": kind, "response": model.response,
               "train_size": model.train_size, "hyperparameters": model.hyper,
               "validation_score": None if not np.isfinite(model.validation_score)
               else model.validation_score}
    try:
        f = fvu(truth, pred)
        metrics.update(fvu=f, r2=1.0 - f, fvu_status="ok")
    except DegenerateVarianceError as exc:
        metrics.update(fvu=None, r2=None, fvu_status=f"degenerate-variance: {exc}")
    out = Path(out_dir)
    (out / "predictions").mkdir(parents=True, exist_ok=True)
    noise_ids = set(ids["noise_test"])
    noise_rows = [i for i, s in enumerate(test.sequences) if s.instance in noise_ids]
    noise_metrics = {}
    T = err.shape[1]
    scales = {k: noise_scale_sequence(m, T) for k, m in sorted(model.noise.items())}
    if noise_rows:
        E = err[noise_rows]
        for k, m in sorted(model.noise.items()):
            entry = {f"omega_{C:.2f}": validation_frequency(m, E, C) for C in COVERAGE_LEVELS}
            z = standardized_errors(m, E)
            entry["ks"] = ks_statistic(z, "laplace" if k == "laplacian" else "normal")
            entry["model"] = m.to_dict()
            noise_metrics[k] = entry
            edges, counts, dens = histogram_data(m, E)
            with open(out / f"histogram_{k}.csv", "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["bin_left", "bin_right", "count", "fitted_density"])
                for j in range(len(counts)):
                    w.writerow([io._fmt(edges[j]), io._fmt(edges[j + 1]), int(counts[j]),
                                io._fmt(dens[j])])
    metrics["noise"] = noise_metrics
    for i, seq in enumerate(test.sequences):
        with open(out / "predictions" / io.instance_name(seq.instance), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["coarse_index", "time", "truth", "prediction",
                        *(f"scale_{k}" for k in scales)])
            for n in range(len(seq)):
                w.writerow([n + 1, io._fmt(seq.times[n]), io._fmt(truth[i, n]),
                            io._fmt(pred[i, n]), *(io._fmt(s[n]) for s in scales.values())])
    io.write_json(out / "metrics.json", metrics)
    return metrics


def report(eval_dirs, out_path):
    """Merge evaluation outputs into a report grid (CSV + JSON)."""
    if not eval_dirs:
        raise ConfigurationError("no evaluation outputs given")
    results = {}
    for d in eval_dirs:
        path = Path(d) / "metrics.json" if Path(d).is_dir() else Path(d)
        try:
            m = io.read_json(path)
            key = (m["family"], m["feature_kind"], int(m["train_size"]))
            value = m["fvu"]
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise ConfigurationError(f"malformed metrics file {path}: {exc}") from None
        results[key] = float("nan") if value is None else float(value)
    table = report_grid(results)
    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    stem = out.with_suffix("")
    with open(stem.with_suffix(".csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["family", "feature_kind", "train_size", "fvu"])
        for r in table["rows"]:
            w.writerow([r["family"], r["feature_kind"], r["train_size"], repr(r["fvu"])])
    clean = {**table, "rows": [{**r, "fvu": r["fvu"] if np.isfinite(r["fvu"]) else None}
                               for r in table["rows"]]}
    io.write_json(stem.with_suffix(".json"), clean)
    return table
