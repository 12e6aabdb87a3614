"""Loss and gradient evaluation, Adam, restarts with early stopping, grid search."""

import logging
from dataclasses import dataclass

import numpy as np

from ..datagen import sub_seed
from ..exceptions import ConfigurationError, EmptyTrainingError, TrainingFailureError
from ..features import fit_standardizer, standardize
from .families import FAMILIES, NONRECURSIVE, NRT, RT, get_family
from .model import RegressionModel, check_mode, unroll
from .nonparametric import fit_nonparametric, predict_dataset

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer and training-loop settings."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    max_epochs: int = 1000
    patience: int = 20
    holdout: float = 0.2
    alpha: float = 0.0
    n_restarts: int = 20
    seed: int = 0

    def __post_init__(self):
        if not (self.lr > 0 and self.eps > 0 and 0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("lr and eps must be positive and the decays in [0, 1)")
        if self.max_epochs < 1 or self.n_restarts < 1 or self.patience < 0:
            raise ValueError("max_epochs and n_restarts must be positive, patience nonnegative")
        if not 0.0 < self.holdout < 1.0:
            raise ValueError("holdout fraction must lie in (0, 1)")
        if self.alpha < 0:
            raise ValueError("ridge coefficient must be nonnegative")


def _zeros_like(P):
    return {k: np.zeros_like(v) for k, v in P.items()}


def compute_loss_and_gradients(family, params, X, Y, Y0, mode=RT, alpha=0.0):
    """Sum-of-squares loss plus ridge penalty and its exact gradient.

    Parameters
    ----------
    family : str
        Sequence family name.
    params : dict
        Parameter blocks.
    X : (B, T, d) ndarray
        Standardized features.
    Y : (B, T) ndarray
        Standardized targets.
    Y0 : (B,) ndarray
        Standardized initial responses (seed of the recursion).
    mode : {"nonrecursive", "NRT", "RT"}
        ``RT`` differentiates through the prediction-fed recursion; ``NRT``
        feeds the true previous response; ``nonrecursive`` ignores it.
    alpha : float
        Ridge coefficient applied to weight blocks (biases excluded).
    """
    check_mode(family, mode)
    fam = FAMILIES[family]
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    Y0 = np.asarray(Y0, dtype=float)
    out, caches = unroll(family, params, X, Y0, mode, Y, keep_cache=True)
    err = out - Y
    weights = fam.weight_names(params)
    loss = float(np.sum(err * err)) + alpha * sum(float(np.sum(params[k] ** 2)) for k in weights)
    G = _zeros_like(params)
    dout = 2.0 * err
    dstate = ()
    dprev = np.zeros(X.shape[0])
    for t in reversed(range(X.shape[1])):
        dy = dout[:, t] + dprev if mode == RT else dout[:, t]
        dstate, dprev = fam.back(params, caches[t], dy, dstate, G)
    for k in weights:
        G[k] += 2.0 * alpha * params[k]
    return loss, G


def adam_step(params, grads, moments, t, cfg):
    """One bias-corrected Adam update; returns new params and moments."""
    m, v = moments
    b1, b2 = cfg.beta1, cfg.beta2
    new_p, new_m, new_v = {}, {}, {}
    c1 = 1.0 - b1 ** t
    c2 = 1.0 - b2 ** t
    for k in params:
        g = grads[k]
        new_m[k] = b1 * m[k] + (1.0 - b1) * g
        new_v[k] = b2 * v[k] + (1.0 - b2) * g * g
        new_p[k] = params[k] - cfg.lr * (new_m[k] / c1) / (np.sqrt(new_v[k] / c2) + cfg.eps)
    return new_p, (new_m, new_v)


def init_moments(params):
    return _zeros_like(params), _zeros_like(params)


def _holdout_loss(family, P, X, Y, Y0, mode):
    out, _ = unroll(family, P, X, Y0, mode, Y)
    return float(np.mean((out - Y) ** 2))


def _fit_once(family, hyper, X, Y, Y0, mode, cfg, seed):
    """A single Adam run with early stopping on a holdout subset."""
    rng = np.random.default_rng(seed)
    B = X.shape[0]
    n_hold = int(round(cfg.holdout * B)) if B > 1 else 0
    n_hold = min(max(n_hold, 1 if B > 1 else 0), B - 1)
    perm = rng.permutation(B)
    hold, fit = np.sort(perm[:n_hold]), np.sort(perm[n_hold:])
    if n_hold == 0:
        hold = fit
    P = FAMILIES[family].init(X.shape[2], hyper, rng)
    alpha = float(hyper.get("alpha", cfg.alpha))
    moments = init_moments(P)
    best = _holdout_loss(family, P, X[hold], Y[hold], Y0[hold], mode)
    best_P, best_epoch, wait = P, 0, 0
    history = []
    for epoch in range(1, cfg.max_epochs + 1):
        loss, G = compute_loss_and_gradients(family, P, X[fit], Y[fit], Y0[fit], mode, alpha)
        if not np.isfinite(loss) or not all(np.all(np.isfinite(g)) for g in G.values()):
            return None, {"seed": seed, "epochs": epoch, "diverged": True, "history": history}
        P, moments = adam_step(P, G, moments, epoch, cfg)
        h = _holdout_loss(family, P, X[hold], Y[hold], Y0[hold], mode)
        history.append(h)
        if not np.isfinite(h):
            break
        if h < best:
            best, best_P, best_epoch, wait = h, P, epoch, 0
        else:
            wait += 1
            if wait > cfg.patience:
                break
    entry = {"seed": seed, "epochs": len(history), "best_epoch": best_epoch,
             "best_holdout_loss": best, "diverged": False, "history": history}
    return best_P, entry


def _arrays(dataset, response):
    seqs = dataset.sequences
    if not seqs:
        raise EmptyTrainingError("training set is empty")
    lengths = {len(s) for s in seqs}
    if len(lengths) != 1:
        raise ConfigurationError("all sequences must share one coarse time grid")
    X = np.stack([s.features for s in seqs])
    Y = np.stack([s.response(response) for s in seqs])
    Y0 = np.array([s.initial_error(response) for s in seqs])
    return X, Y, Y0


def default_mode(family):
    return {"ANN": NONRECURSIVE}.get(family, RT)


def train_model(family, hyper, train, cfg=TrainConfig(), response="qoi", mode=None,
                standardizer=None, tag=0):
    """Fit a sequence family with ``cfg.n_restarts`` seeded Adam restarts.

    Each restart draws its own 20% holdout of the training sequences for
    early stopping and the restart with the lowest holdout loss is kept.
    """
    family = get_family(family)
    if family in ("kNN", "GP"):
        return fit_nonparametric(family, hyper, train, response)
    mode = default_mode(family) if mode is None else mode
    check_mode(family, mode)
    X, Y, Y0 = _arrays(train, response)
    s = standardizer or fit_standardizer(list(X), list(Y))
    Xs = standardize(s, X, "forward", "feature")
    Ys = standardize(s, Y, "forward", "response")
    Y0s = standardize(s, Y0, "forward", "response")
    best, best_loss, entries = None, np.inf, []
    for r in range(cfg.n_restarts):
        seed = sub_seed(cfg.seed, family, tag, r)
        P, entry = _fit_once(family, hyper, Xs, Ys, Y0s, mode, cfg, seed)
        entry["restart"] = r
        entries.append(entry)
        if P is not None and entry["best_holdout_loss"] < best_loss:
            best, best_loss = P, entry["best_holdout_loss"]
    if best is None:
        raise TrainingFailureError(f"all {cfg.n_restarts} restarts of {family} diverged")
    return RegressionModel(family=family, hyper=dict(hyper), params=best, standardizer=s,
                           mode=mode, feature_kind=train.kind, response=response,
                           n_features=X.shape[2], log=entries, train_size=len(train))


def validation_score(model, dataset):
    """Sum of squared prediction errors over all validation records (raw units)."""
    pred = predict_dataset(model, dataset)
    truth = np.stack([s.response(model.response) for s in dataset.sequences])
    return float(np.sum((pred - truth) ** 2))


def grid_search_select(family, grid, train, val, cfg=TrainConfig(), response="qoi", mode=None):
    """Train each grid tuple and keep the lowest validation error.

    Ties keep the earliest tuple in grid order. Returns the selected model and
    its validation score; ``model.log`` gains a ``grid`` record of all scores.
    """
    grid = list(grid)
    if not grid:
        raise ConfigurationError("hyperparameter grid is empty")
    best, best_score, scores = None, np.inf, []
    for i, hyper in enumerate(grid):
        try:
            model = train_model(family, hyper, train, cfg, response, mode, tag=i)
        except TrainingFailureError as exc:
            log.warning("grid tuple %s failed: %s", hyper, exc)
            scores.append(float("nan"))
            continue
        score = validation_score(model, val)
        scores.append(score)
        if score < best_score:
            best, best_score = model, score
    if best is None:
        raise TrainingFailureError(f"every grid tuple of {family} failed to train")
    best.validation_score = best_score
    best.log = list(best.log) + [{"grid": [dict(h) for h in grid], "scores": scores}]
    return best, best_score


def default_grid(family):
    """Hyperparameter grids used for the benchmark studies."""
    family = get_family(family)
    alphas = [10.0 ** -i for i in range(1, 6)]
    if family in ("ANN", "ANN-I", "RNN", "LSTM"):
        return [{"depth": d, "width": p, "alpha": a}
                for d in (1, 2) for p in (10, 25, 50, 100) for a in alphas]
    if family == "ARX":
        return [{"alpha": a} for a in alphas]
    if family == "LARX":
        return [{"latent": n, "alpha": a} for n in (10, 25, 50, 100) for a in alphas]
    if family == "kNN":
        return [{"k": k, "weighting": w} for k in range(1, 6) for w in ("uniform", "distance")]
    return [{"lam": lam} for lam in gp_lambda_grid()]


def gp_lambda_grid(n=20):
    return [10.0 ** (-8.0 + 8.0 * i / (n - 1)) for i in range(n)]


__all__ = ["TrainConfig", "compute_loss_and_gradients", "adam_step", "init_moments",
           "train_model", "grid_search_select", "validation_score", "default_grid",
           "gp_lambda_grid", "default_mode"]
