"""Stochastic models of the regression error and their diagnostics."""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .exceptions import EmptyTestError, EmptyTrainingError, UndefinedEstimateError

VARIANCE_FLOOR = 1e-30
NOISE_KINDS = ("gaussian", "laplacian", "ar1")


class DegenerateFitWarning(UserWarning):
    """A fitted scale vanished and was floored."""


@dataclass(frozen=True)
class NoiseModel:
    """Gaussian (``variance``), Laplacian (``scale``) or AR1 (``coef``, ``variance``)."""

    kind: str
    variance: float = float("nan")
    scale: float = float("nan")
    coef: float = 0.0

    def to_dict(self):
        d = {"kind": self.kind}
        if self.kind == "laplacian":
            d["scale"] = self.scale
        else:
            d["variance"] = self.variance
        if self.kind == "ar1":
            d["coef"] = self.coef
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(kind=d["kind"], variance=float(d.get("variance", float("nan"))),
                   scale=float(d.get("scale", float("nan"))), coef=float(d.get("coef", 0.0)))


def _flatten(errors):
    if isinstance(errors, (list, tuple)) and errors and np.ndim(errors[0]) > 0:
        return np.concatenate([np.ravel(e) for e in errors]).astype(float)
    return np.ravel(np.asarray(errors, dtype=float))


def _floor(value, name):
    if value < VARIANCE_FLOOR:
        warnings.warn(f"degenerate noise fit: {name} = {value:.3e} floored at {VARIANCE_FLOOR}",
                      DegenerateFitWarning, stacklevel=3)
        return VARIANCE_FLOOR
    return value


def fit_gaussian(errors):
    """Maximum-likelihood variance of zero-mean Gaussian noise."""
    e = _flatten(errors)
    if e.size == 0:
        raise EmptyTrainingError("no regression errors to fit")
    return NoiseModel("gaussian", variance=_floor(float(np.mean(e * e)), "variance"))


def fit_laplacian(errors):
    """Maximum-likelihood scale of zero-mean Laplacian noise."""
    e = _flatten(errors)
    if e.size == 0:
        raise EmptyTrainingError("no regression errors to fit")
    return NoiseModel("laplacian", scale=_floor(float(np.mean(np.abs(e))), "scale"))


def fit_ar1(sequences):
    """Conditional maximum-likelihood AR1 fit.

    Each sequence lists the errors at coarse indices 1..T; the error at index
    0 is taken as zero, so the first lag term of every sequence vanishes.
    """
    seqs = [np.ravel(np.asarray(s, dtype=float)) for s in sequences]
    seqs = [s for s in seqs if s.size]
    if not seqs:
        raise EmptyTrainingError("no regression error sequences to fit")
    lag = np.concatenate([np.concatenate([[0.0], s[:-1]]) for s in seqs])
    cur = np.concatenate(seqs)
    den = float(lag @ lag)
    if den == 0.0:
        raise UndefinedEstimateError("all lagged errors vanish; the AR1 coefficient is undefined")
    c = float(lag @ cur) / den
    var = float(np.mean((c * lag - cur) ** 2))
    if abs(c) >= 1.0:
        warnings.warn(f"AR1 coefficient {c:.4f} has magnitude >= 1; the variance grows "
                      "without bound", DegenerateFitWarning, stacklevel=2)
    return NoiseModel("ar1", variance=_floor(var, "variance"), coef=c)


def fit_noise(kind, sequences):
    if kind == "gaussian":
        return fit_gaussian(sequences)
    if kind == "laplacian":
        return fit_laplacian(sequences)
    if kind == "ar1":
        return fit_ar1(sequences)
    raise ValueError(f"unknown noise kind {kind!r}; choose from {NOISE_KINDS}")


def noise_scale_sequence(model, horizon):
    """Per-coarse-index scale (standard deviation, or Laplace ``b``)."""
    horizon = int(horizon)
    if horizon <= 0:
        return np.empty(0)
    if model.kind == "gaussian":
        return np.full(horizon, math.sqrt(model.variance))
    if model.kind == "laplacian":
        return np.full(horizon, model.scale)
    var = np.empty(horizon)
    var[0] = model.variance
    c2 = model.coef ** 2
    for n in range(1, horizon):
        var[n] = c2 * var[n - 1] + model.variance
    return np.sqrt(var)


def interval_halfwidth(model, C, horizon):
    """Half-width of the central probability-``C`` interval at each index."""
    scale = noise_scale_sequence(model, horizon)
    if model.kind == "laplacian":
        return scale * math.log(1.0 / (1.0 - C))
    return scale * stats.norm.ppf(0.5 * (1.0 + C))


def _as_matrix(errors):
    if isinstance(errors, (list, tuple)):
        if not errors:
            return np.empty((0, 0))
        return np.stack([np.ravel(np.asarray(e, dtype=float)) for e in errors])
    e = np.asarray(errors, dtype=float)
    return e.reshape(1, -1) if e.ndim == 1 else e


def validation_frequency(model, errors, C):
    """Fraction of errors inside the central ``C`` interval.

    ``errors`` holds equal-length sequences (rows) indexed by coarse time so
    that AR1 intervals can use the per-index scale.
    """
    if not 0.0 < C < 1.0:
        raise ValueError("coverage level must lie in (0, 1)")
    E = _as_matrix(errors)
    if E.size == 0:
        raise EmptyTestError("no test errors to evaluate")
    half = interval_halfwidth(model, C, E.shape[1])
    return float(np.mean(np.abs(E) <= half[None, :]))


def standardized_errors(model, errors):
    E = _as_matrix(errors)
    return (E / noise_scale_sequence(model, E.shape[1])[None, :]).ravel()


def ks_statistic(samples, reference="normal"):
    """Two-sided K-S distance between the sample and a standard reference CDF."""
    x = np.ravel(np.asarray(samples, dtype=float))
    if x.size == 0:
        raise EmptyTestError("no samples for the K-S statistic")
    if reference in ("normal", "gaussian", "ar1"):
        cdf = stats.norm.cdf
    elif reference in ("laplace", "laplacian"):
        cdf = stats.laplace.cdf
    else:
        raise ValueError(f"unknown reference distribution {reference!r}")
    return float(stats.kstest(x, cdf).statistic)


def histogram_data(model, errors, bins=30):
    """Histogram of standardized errors with the fitted reference density.

    Returns ``(edges, counts, density)`` where ``density`` is sampled at the
    bin centers and scaled to the count axis.
    """
    z = standardized_errors(model, errors)
    counts, edges = np.histogram(z, bins=bins)
    centers = 0.5 * (edges[1:] + edges[:-1])
    pdf = stats.laplace.pdf(centers) if model.kind == "laplacian" else stats.norm.pdf(centers)
    return edges, counts, pdf * z.size * np.diff(edges)
