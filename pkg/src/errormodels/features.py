"""Feature construction from parameters, time and surrogate residuals."""

from dataclasses import dataclass

import numpy as np

from .exceptions import (ConfigurationError, EmptyTrainingError,
                         MissingInputError, ShapeError)
from .reduction import ResidualPCA, gappy_reconstruct, pca_project

FEATURE_KINDS = (
    "params",
    "params+time",
    "resnorm",
    "params+resnorm",
    "params+resnorm+time",
    "params+residual",
    "params+residual+time",
    "params+res-PCA",
    "params+res-PCA+time",
    "params+gappy-PCA",
    "params+gappy-PCA+time",
    "params+sampled-res",
    "params+sampled-res+time",
)


def _parts(kind):
    if kind not in FEATURE_KINDS:
        raise ConfigurationError(f"unknown feature kind {kind!r}; choose from {list(FEATURE_KINDS)}")
    tokens = kind.split("+")
    return "params" in tokens, "time" in tokens, next(
        (t for t in tokens if t not in ("params", "time")), None)


def kind_uses_residual(kind):
    return _parts(kind)[2] is not None


def kind_needs_pca(kind):
    return _parts(kind)[2] in ("res-PCA", "gappy-PCA", "sampled-res")


def kind_is_sampled(kind):
    return _parts(kind)[2] in ("gappy-PCA", "sampled-res")


@dataclass(frozen=True)
class FeatureSpec:
    """A feature kind together with the attachments it needs.

    Attributes
    ----------
    kind : str
        One of :data:`FEATURE_KINDS`.
    n_params : int
        Number of model parameters.
    state_dim : int
        Residual length N (used by the full-residual kinds).
    pca : ResidualPCA or None
        Required by the PCA, gappy and sampled kinds.
    rows : ndarray of int or None
        Sampled residual indices; required by the gappy and sampled kinds.
    """

    kind: str
    n_params: int
    state_dim: int = 0
    pca: ResidualPCA = None
    rows: np.ndarray = None

    def __post_init__(self):
        _, _, block = _parts(self.kind)
        if block in ("res-PCA", "gappy-PCA") and self.pca is None:
            raise ConfigurationError(f"feature kind {self.kind!r} needs a residual PCA")
        if block in ("gappy-PCA", "sampled-res") and self.rows is None:
            raise ConfigurationError(f"feature kind {self.kind!r} needs sampled rows")
        if block == "residual" and self.state_dim < 1:
            raise ConfigurationError("full-residual features need the state dimension")

    @property
    def dim(self):
        """Feature dimension for this kind."""
        params, time, block = _parts(self.kind)
        n = self.n_params if params else 0
        n += int(time)
        if block == "resnorm":
            n += 1
        elif block == "residual":
            n += self.state_dim
        elif block in ("res-PCA", "gappy-PCA"):
            n += self.pca.n_r
        elif block == "sampled-res":
            n += len(self.rows)
        return n

    def residual_input(self, residual):
        """The part of a full residual vector this kind reads."""
        if not kind_uses_residual(self.kind):
            return None
        residual = np.asarray(residual, dtype=float)
        return residual[self.rows] if kind_is_sampled(self.kind) else residual

    def names(self):
        """Column names in assembly order."""
        params, time, block = _parts(self.kind)
        out = [f"mu{i + 1}" for i in range(self.n_params)] if params else []
        if block == "resnorm":
            out.append("resnorm")
        elif block is not None:
            out += [f"{block}{i + 1}" for i in range(self.dim - len(out) - int(time))]
        if time:
            out.append("time")
        return out


def extract_features(spec, mu, t, residual=None):
    """Assemble the feature vector ``[mu, residual block, t]`` for ``spec.kind``.

    For the gappy and sampled kinds ``residual`` holds only the sampled
    entries (length ``len(spec.rows)``); other residual kinds take the full
    residual vector.
    """
    params, time, block = _parts(spec.kind)
    mu = np.asarray(mu, dtype=float)
    if mu.shape != (spec.n_params,):
        raise ShapeError(f"expected {spec.n_params} parameters, got shape {mu.shape}")
    out = [mu] if params else []
    if block is not None:
        if residual is None:
            raise MissingInputError(f"feature kind {spec.kind!r} requires the residual")
        r = np.asarray(residual, dtype=float)
        if block in ("gappy-PCA", "sampled-res"):
            if r.shape != (len(spec.rows),):
                raise ShapeError(
                    f"expected {len(spec.rows)} sampled residual entries, got shape {r.shape}")
        elif block in ("resnorm", "residual") and spec.state_dim and r.shape != (spec.state_dim,):
            raise ShapeError(f"expected a residual of length {spec.state_dim}, got {r.shape}")
        if block == "resnorm":
            out.append([np.linalg.norm(r)])
        elif block == "residual":
            out.append(r)
        elif block == "res-PCA":
            out.append(pca_project(spec.pca, r))
        elif block == "gappy-PCA":
            out.append(gappy_reconstruct(spec.pca, spec.rows, r))
        else:
            out.append(r)
    if time:
        out.append([float(t)])
    return np.concatenate([np.atleast_1d(np.asarray(b, dtype=float)) for b in out])


@dataclass(frozen=True)
class Standardizer:
    """Per-component means and standard deviations for features and responses."""

    feature_mean: np.ndarray
    feature_std: np.ndarray
    response_mean: np.ndarray
    response_std: np.ndarray

    def to_dict(self):
        return {k: np.asarray(getattr(self, k)).tolist() for k in
                ("feature_mean", "feature_std", "response_mean", "response_std")}

    @classmethod
    def from_dict(cls, d):
        return cls(**{k: np.asarray(v, dtype=float) for k, v in d.items()})


def _stats(x):
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    scale = np.maximum(np.abs(mean), 1.0)
    std = np.where(std <= 1e-14 * scale, 1.0, std)
    return mean, std


def fit_standardizer(training_features, training_responses):
    """Population mean and standard deviation over all training records.

    Both inputs may be 2D arrays of records or lists of per-sequence arrays.
    Zero-variance components get a standard deviation of 1.
    """
    def stack(v):
        if isinstance(v, (list, tuple)):
            if len(v) == 0:
                return np.empty((0, 0))
            v = np.concatenate([np.asarray(a, dtype=float).reshape(len(a), -1) for a in v])
        v = np.asarray(v, dtype=float)
        return v.reshape(len(v), -1) if v.ndim < 2 else v

    F, R = stack(training_features), stack(training_responses)
    if F.shape[0] == 0 or R.shape[0] == 0:
        raise EmptyTrainingError("cannot fit a standardizer on an empty training set")
    fm, fs = _stats(F)
    rm, rs = _stats(R)
    return Standardizer(fm, fs, rm, rs)


def standardize(s, v, direction="forward", side="feature"):
    """Apply (``forward``) or undo (``inverse``) the standardization."""
    if side == "feature":
        mean, std = s.feature_mean, s.feature_std
    elif side == "response":
        mean, std = s.response_mean, s.response_std
    else:
        raise ValueError(f"side must be 'feature' or 'response', got {side!r}")
    v = np.asarray(v, dtype=float)
    if mean.size == 1:
        # scalar statistics broadcast over any array of that quantity
        mean, std = float(mean.ravel()[0]), float(std.ravel()[0])
    elif v.shape[-1:] != mean.shape:
        raise ShapeError(f"vector trailing shape {v.shape} does not match {mean.shape}")
    if direction == "forward":
        return (v - mean) / std
    if direction == "inverse":
        return v * std + mean
    raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")
