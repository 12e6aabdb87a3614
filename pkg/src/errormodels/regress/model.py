"""Trained regression models and sequence prediction."""

from dataclasses import dataclass, field

import numpy as np

from ..exceptions import ConfigurationError, ShapeError, WrongEntryPointError
from ..features import Standardizer, standardize
from .families import FAMILIES, NONRECURSIVE, NRT, RT

ADMISSIBLE_MODES = {name: fam.modes for name, fam in FAMILIES.items()}


@dataclass
class RegressionModel:
    """A fitted regression function together with its standardization.

    Parameters live in standardized feature/response space. ``params`` maps
    block names to arrays; for kNN and GP it holds the training data.
    """

    family: str
    hyper: dict
    params: dict
    standardizer: Standardizer
    mode: str = RT
    feature_kind: str = ""
    response: str = "qoi"
    n_features: int = 0
    log: list = field(default_factory=list)
    validation_score: float = float("nan")
    noise: dict = field(default_factory=dict)
    train_size: int = 0

    @property
    def latent_dim(self):
        P = self.params
        if self.family in ("ARX", "ANN-I"):
            return 1
        if self.family == "LARX":
            return P["W_h"].shape[0]
        if self.family in ("RNN", "LSTM"):
            return P["U0"].shape[0]
        return 0


def check_mode(family, mode):
    modes = ADMISSIBLE_MODES.get(family)
    if modes is None:
        raise WrongEntryPointError(f"family {family!r} has no sequence training mode")
    if mode not in modes:
        raise ConfigurationError(
            f"mode {mode!r} is not admissible for {family}; use one of {list(modes)}")


def unroll(family, P, X, Y0, mode=RT, Y=None, keep_cache=False):
    """Run the family recursion over a batch of equal-length sequences.

    ``X`` is ``(B, T, d)``, ``Y0`` the initial responses ``(B,)``. In ``RT``
    mode the previous output is the model's own prediction; otherwise it is
    the true previous response taken from ``Y``.
    """
    fam = FAMILIES[family]
    B, T, _ = X.shape
    state = fam.init_state(P, B)
    prev = np.asarray(Y0, dtype=float)
    out = np.empty((B, T))
    caches = [] if keep_cache else None
    for t in range(T):
        y, state, cache = fam.step(P, X[:, t], state, prev)
        out[:, t] = y
        if keep_cache:
            caches.append(cache)
        prev = y if mode == RT else Y[:, t]
    return out, caches


def _stack_features(model, features):
    X = np.asarray(features, dtype=float)
    if X.ndim == 2:
        X = X[None]
    if X.ndim != 3 or (model.n_features and X.shape[2] != model.n_features):
        raise ShapeError(f"features of shape {X.shape} do not match the model input "
                         f"dimension {model.n_features}")
    return X


def predict_batch(model, features, delta0):
    """Prediction-fed recursion for a batch of sequences in raw units."""
    if model.family not in FAMILIES:
        raise WrongEntryPointError(
            f"{model.family} predictions go through its dedicated fit/predict function")
    X = _stack_features(model, features)
    d0 = np.atleast_1d(np.asarray(delta0, dtype=float))
    if X.shape[1] == 0:
        return np.empty((X.shape[0], 0))
    s = model.standardizer
    Xs = standardize(s, X, "forward", "feature")
    y0 = standardize(s, d0, "forward", "response")
    out, _ = unroll(model.family, model.params, Xs, y0, RT)
    return standardize(s, out, "inverse", "response")


def predict_sequence(model, features, delta0):
    """Predicted responses over one sequence of (raw) feature vectors."""
    X = np.asarray(features, dtype=float)
    if X.ndim != 2:
        raise ShapeError("features must be a (T, d) array")
    return predict_batch(model, X[None], [delta0])[0]


def arx_raw_coefficients(model):
    """ARX coefficients mapped from standardized to raw units.

    Returns ``(w_x, w_prev, b)`` such that ``y = w_x . x + w_prev * prev + b``.
    """
    if model.family != "ARX":
        raise ConfigurationError("raw coefficients are defined for ARX models only")
    s = model.standardizer
    fm, fs = s.feature_mean, s.feature_std
    rm, rs = float(s.response_mean[0]), float(s.response_std[0])
    wx, wp, b = model.params["W_x"], float(model.params["W_prev"][0]), float(model.params["b"][0])
    w_raw = rs * wx / fs
    b_raw = rm * (1.0 - wp) - float(w_raw @ fm) + rs * b
    return w_raw, wp, b_raw


__all__ = ["RegressionModel", "check_mode", "unroll", "predict_batch", "predict_sequence",
           "arx_raw_coefficients", "NONRECURSIVE", "NRT", "RT"]
