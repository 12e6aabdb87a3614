"""File formats: matrices, dataset CSVs, manifests and model checkpoints."""

import csv
import json
from pathlib import Path

import numpy as np

from .datagen import CoarseTimeGrid, Dataset, Sequence
from .features import Standardizer
from .noise import NoiseModel
from .regress.model import RegressionModel

SCHEMA_VERSION = 1


def _fmt(x):
    return "%.17e" % float(x)


def write_matrix(path, M):
    """Header ``rows cols`` followed by one row per line."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.ndim != 2:
        raise ValueError("matrix must be 2D")
    lines = [f"{M.shape[0]} {M.shape[1]}"]
    lines += [" ".join(_fmt(v) for v in row) for row in M]
    Path(path).write_text("\n".join(lines) + "\n")


def read_matrix(path):
    lines = Path(path).read_text().split("\n")
    rows, cols = (int(v) for v in lines[0].split())
    M = np.array([[float(v) for v in ln.split()] for ln in lines[1:1 + rows]]).reshape(rows, cols)
    return M


def write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def read_json(path):
    return json.loads(Path(path).read_text())


def sequence_columns(feature_names):
    return ["coarse_index", "fine_index", "time", *feature_names, "delta_x", "delta_q"]


def write_sequence_csv(path, seq, feature_names):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(sequence_columns(feature_names))
        for n in range(len(seq)):
            w.writerow([n + 1, int(seq.fine_index[n]), _fmt(seq.times[n]),
                        *(_fmt(v) for v in seq.features[n]),
                        _fmt(seq.delta_x[n]), _fmt(seq.delta_q[n])])


def read_sequence_csv(path, mu, initial_errors, instance):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], np.array([[float(v) for v in r] for r in rows[1:]])
    if header[:3] != ["coarse_index", "fine_index", "time"] or header[-2:] != ["delta_x", "delta_q"]:
        raise ValueError(f"{path}: unexpected dataset columns")
    return Sequence(mu=np.asarray(mu, dtype=float), fine_index=body[:, 1].astype(int),
                    times=body[:, 2], features=body[:, 3:-2], delta_x=body[:, -2],
                    delta_q=body[:, -1], initial_errors=tuple(initial_errors), instance=instance)


def instance_name(i):
    return f"instance_{i:04d}.csv"


def load_dataset(data_dir, kind, ids=None):
    """Dataset of one feature kind from a generated directory."""
    data_dir = Path(data_dir)
    man = read_json(data_dir / "manifest.json")
    if kind not in man["feature_kinds"]:
        raise KeyError(kind)
    grid = CoarseTimeGrid(tuple(man["coarse_grid"]))
    inst = man["instances"]
    ids = range(len(inst)) if ids is None else ids
    seqs = [read_sequence_csv(data_dir / "datasets" / kind / instance_name(i), inst[i]["mu"],
                              inst[i]["initial_errors"], i) for i in ids]
    return Dataset(kind, grid, seqs)


def _encode_array(a):
    a = np.asarray(a, dtype=float)
    return {"shape": list(a.shape), "values": " ".join(_fmt(v) for v in a.ravel())}


def _decode_array(d):
    vals = np.array([float(v) for v in d["values"].split()]) if d["values"] else np.empty(0)
    return vals.reshape(d["shape"])


def _log_summary(entries):
    out = []
    for e in entries:
        if "grid" in e:
            out.append({"grid": e["grid"], "scores": [None if not np.isfinite(s) else s
                                                      for s in e["scores"]]})
        else:
            out.append({k: v for k, v in e.items() if k != "history"})
    return out


def model_to_dict(model):
    return {
        "schema_version": SCHEMA_VERSION,
        "family": model.family,
        "hyperparameters": model.hyper,
        "mode": model.mode,
        "feature_kind": model.feature_kind,
        "response": model.response,
        "n_features": model.n_features,
        "train_size": model.train_size,
        "shapes": {k: list(np.shape(v)) for k, v in model.params.items()},
        "params": {k: _encode_array(v) for k, v in model.params.items()},
        "standardizer": {k: _encode_array(v) for k, v in
                         vars(model.standardizer).items()},
        "validation_score": None if not np.isfinite(model.validation_score)
        else model.validation_score,
        "training_log": _log_summary(model.log),
        "noise": {k: v.to_dict() for k, v in model.noise.items()},
    }


def model_from_dict(d):
    s = Standardizer(**{k: _decode_array(v) for k, v in d["standardizer"].items()})
    score = d.get("validation_score")
    return RegressionModel(
        family=d["family"], hyper=d["hyperparameters"],
        params={k: _decode_array(v) for k, v in d["params"].items()},
        standardizer=s, mode=d["mode"], feature_kind=d["feature_kind"],
        response=d["response"], n_features=d["n_features"], log=d.get("training_log", []),
        validation_score=float("nan") if score is None else score,
        noise={k: NoiseModel.from_dict(v) for k, v in d.get("noise", {}).items()},
        train_size=d.get("train_size", 0))


def save_model(path, model):
    write_json(path, model_to_dict(model))


def load_model(path):
    return model_from_dict(read_json(path))
