"""k-nearest-neighbour and time-local Gaussian-process regressors."""

import numpy as np
import scipy.linalg as la

from ..exceptions import ConditioningError, EmptyTrainingError, ShapeError
from ..features import Standardizer, fit_standardizer, standardize
from .model import RegressionModel, predict_batch


def knn_predict(train_X, train_y, k, weighting, queries):
    """Weighted average of the ``k`` nearest training responses.

    ``weighting`` is ``"uniform"`` or ``"distance"`` (inverse distance,
    normalized). When a query coincides with training points, the responses
    at zero distance are averaged instead. Ties in distance keep the earlier
    training record.
    """
    X = np.asarray(train_X, dtype=float)
    y = np.asarray(train_y, dtype=float)
    if X.shape[0] == 0:
        raise EmptyTrainingError("kNN needs at least one training record")
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ShapeError("training features must be (n, d) with one response per record")
    if int(k) != k or not 1 <= k <= X.shape[0]:
        raise ValueError(f"k must lie in 1..{X.shape[0]}, got {k}")
    if weighting not in ("uniform", "distance"):
        raise ValueError(f"unknown weighting {weighting!r}")
    Q = np.atleast_2d(np.asarray(queries, dtype=float))
    if Q.shape[1] != X.shape[1]:
        raise ShapeError(f"queries have {Q.shape[1]} features, training data has {X.shape[1]}")
    d2 = (np.sum(Q * Q, axis=1)[:, None] - 2.0 * Q @ X.T + np.sum(X * X, axis=1)[None, :])
    dist = np.sqrt(np.maximum(d2, 0.0))
    idx = np.argsort(dist, axis=1, kind="stable")[:, :int(k)]
    nd = np.take_along_axis(dist, idx, axis=1)
    ny = y[idx]
    if weighting == "uniform":
        return ny.mean(axis=1)
    out = np.empty(len(Q))
    for i in range(len(Q)):
        zero = nd[i] == 0.0
        if zero.any():
            out[i] = ny[i, zero].mean()
        else:
            w = 1.0 / nd[i]
            out[i] = w @ ny[i] / w.sum()
    return out


def knn_fit_predict(train_X, train_y, k, weighting, query):
    """Single-query convenience wrapper around :func:`knn_predict`."""
    return float(knn_predict(train_X, train_y, k, weighting, np.atleast_2d(query))[0])


def _se_kernel(A, B):
    d2 = np.sum(A * A, axis=1)[:, None] - 2.0 * A @ B.T + np.sum(B * B, axis=1)[None, :]
    return np.exp(-0.5 * np.maximum(d2, 0.0))


def gp_fit_predict(train_mu, train_y, lam, query_mu):
    """Posterior mean and variance of a squared-exponential GP.

    Inputs are expected in standardized parameter coordinates (unit length
    scale). Responses are centered and scaled by their training mean and
    standard deviation; ``lam`` is added to the kernel diagonal.
    """
    A = np.atleast_2d(np.asarray(train_mu, dtype=float))
    y = np.asarray(train_y, dtype=float)
    Q = np.atleast_2d(np.asarray(query_mu, dtype=float))
    if A.shape[0] == 0:
        raise EmptyTrainingError("GP needs at least one training point")
    if y.shape != (A.shape[0],) or Q.shape[1] != A.shape[1]:
        raise ShapeError("inconsistent GP training/query shapes")
    if not lam > 0:
        raise ValueError("noise magnitude must be positive")
    m = y.mean()
    s = y.std()
    s = s if s > 1e-14 * max(1.0, abs(m)) else 1.0
    K = _se_kernel(A, A) + lam * np.eye(len(A))
    try:
        c = la.cho_factor(K, lower=True)
    except la.LinAlgError as exc:
        raise ConditioningError(f"GP kernel matrix is not positive definite: {exc}") from None
    ks = _se_kernel(Q, A)
    alpha = la.cho_solve(c, (y - m) / s)
    mean = m + s * (ks @ alpha)
    v = la.cho_solve(c, ks.T)
    var = s * s * np.maximum(1.0 - np.sum(ks * v.T, axis=1), 0.0)
    return mean, var


def _records(dataset, response):
    X = np.concatenate([s.features for s in dataset.sequences])
    y = np.concatenate([s.response(response) for s in dataset.sequences])
    return X, y


def fit_nonparametric(family, hyper, train, response="qoi"):
    """Store standardized training data for kNN or GP prediction."""
    if not train.sequences:
        raise EmptyTrainingError("training set is empty")
    if family == "kNN":
        X, y = _records(train, response)
        s = fit_standardizer(X, y)
        params = {"X": standardize(s, X, "forward", "feature"), "y": y}
        n_in = X.shape[1]
    else:
        mus = np.stack([s.mu for s in train.sequences])
        Y = np.stack([s.response(response) for s in train.sequences])
        mm, ms = mus.mean(axis=0), mus.std(axis=0)
        ms = np.where(ms > 0, ms, 1.0)
        s = Standardizer(mm, ms, np.array([Y.mean()]), np.array([1.0]))
        params = {"mu": (mus - mm) / ms, "Y": Y}
        n_in = train.sequences[0].features.shape[1]
    return RegressionModel(family=family, hyper=dict(hyper), params=params, standardizer=s,
                           mode="nonrecursive", feature_kind=train.kind, response=response,
                           n_features=n_in, train_size=len(train))


def predict_dataset(model, dataset):
    """Predictions ``(B, T)`` for every sequence of a dataset, raw units."""
    seqs = dataset.sequences
    if model.family == "kNN":
        s = model.standardizer
        out = []
        for q in seqs:
            Q = standardize(s, q.features, "forward", "feature")
            out.append(knn_predict(model.params["X"], model.params["y"], model.hyper["k"],
                                   model.hyper["weighting"], Q))
        return np.stack(out)
    if model.family == "GP":
        s = model.standardizer
        Q = (np.stack([q.mu for q in seqs]) - s.feature_mean) / s.feature_std
        Y = model.params["Y"]
        out = np.empty((len(seqs), Y.shape[1]))
        for t in range(Y.shape[1]):
            out[:, t], _ = gp_fit_predict(model.params["mu"], Y[:, t], model.hyper["lam"], Q)
        return out
    X = np.stack([q.features for q in seqs])
    d0 = np.array([q.initial_error(model.response) for q in seqs])
    return predict_batch(model, X, d0)
