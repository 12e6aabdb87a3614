"""Metrics, the residual-based error bound, and report tables."""

from collections import defaultdict
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .exceptions import DegenerateVarianceError, InadmissibleBoundError, ShapeError


def fvu(truth, predicted):
    """Fraction of variance unexplained, ``SS_res / SS_tot``."""
    y = np.ravel(np.asarray(truth, dtype=float))
    p = np.ravel(np.asarray(predicted, dtype=float))
    if y.shape != p.shape:
        raise ShapeError(f"truth has {y.size} entries, predictions {p.size}")
    if y.size < 2:
        raise ValueError("need at least two responses")
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        raise DegenerateVarianceError("responses have zero total variance")
    return float(np.sum((y - p) ** 2)) / ss_tot


def r_squared(truth, predicted):
    return 1.0 - fvu(truth, predicted)


@dataclass(frozen=True)
class BoundParams:
    """Constants of the residual-based state-error bound.

    ``h`` is ``|alpha_0| - |beta_0| kappa dt`` and ``gammas[j-1]`` is
    ``(|alpha_j| + |beta_j| kappa dt) / h``.
    """

    kappa: float
    scheme: object
    dt: float

    def __post_init__(self):
        if self.kappa < 0 or not self.dt > 0:
            raise ValueError("kappa must be nonnegative and dt positive")
        if not self.h > 0:
            raise InadmissibleBoundError(
                f"time step {self.dt} violates dt < |alpha_0| / (|beta_0| kappa) for "
                f"kappa = {self.kappa}")

    @property
    def h(self):
        return abs(self.scheme.alphas[0]) - abs(self.scheme.betas[0]) * self.kappa * self.dt

    @property
    def gammas(self):
        a, b = self.scheme.alphas, self.scheme.betas
        return np.array([(abs(a[j]) + abs(b[j]) * self.kappa * self.dt) / self.h
                         for j in range(1, len(a))])


def error_bound_sequence(residual_norms, initial_errors, p):
    """Upper bound on the state error at every fine index.

    Parameters
    ----------
    residual_norms : sequence
        ``||r^n||`` for ``n = 1 .. N_t``.
    initial_errors : sequence
        Exact errors at the first indices (at least the error at ``n = 0``).
    p : BoundParams

    Returns
    -------
    ndarray of length ``N_t + 1``, entry 0 being the initial error.
    """
    r = np.ravel(np.asarray(residual_norms, dtype=float))
    e0 = np.ravel(np.asarray(initial_errors, dtype=float))
    if e0.size < 1:
        raise ValueError("at least the initial error is required")
    g = p.gammas
    k = len(g)
    out = np.empty(r.size + 1)
    n_seed = min(e0.size, out.size)
    out[:n_seed] = e0[:n_seed]
    for n in range(n_seed, out.size):
        kn = min(n, k)
        out[n] = r[n - 1] / p.h + sum(g[j - 1] * out[n - j] for j in range(1, kn + 1))
    return out


def lipschitz_constant(matrix):
    """Spectral norm of a (linear) system matrix."""
    A = matrix.toarray() if sp.issparse(matrix) else np.asarray(matrix, dtype=float)
    return float(np.linalg.norm(A, 2))


def report_grid(results):
    """Summaries of FVU results keyed by ``(family, kind, train_size)``.

    Returns a dict with ``rows`` (one per entry), ``best_feature`` (lowest
    FVU kind per family and training size) and ``tally`` (percentage of
    (kind, train_size) cases where each family attains the lowest FVU, ties
    sharing credit equally).
    """
    if not results:
        raise ValueError("no results to report")
    rows = [{"family": f, "feature_kind": k, "train_size": int(n), "fvu": float(v)}
            for (f, k, n), v in sorted(results.items(), key=lambda kv: tuple(map(str, kv[0])))]
    families = sorted({r["family"] for r in rows})
    cases = defaultdict(dict)
    for r in rows:
        cases[(r["feature_kind"], r["train_size"])][r["family"]] = r["fvu"]
    credit = dict.fromkeys(families, 0.0)
    for vals in cases.values():
        finite = {f: v for f, v in vals.items() if np.isfinite(v)}
        if not finite:
            continue
        low = min(finite.values())
        winners = [f for f, v in finite.items() if v == low]
        for f in winners:
            credit[f] += 1.0 / len(winners)
    total = sum(credit.values())
    tally = {f: (100.0 * c / total if total else 0.0) for f, c in credit.items()}
    best = {}
    for r in rows:
        key = (r["family"], r["train_size"])
        if np.isfinite(r["fvu"]) and (key not in best or r["fvu"] < best[key]["fvu"]):
            best[key] = {"feature_kind": r["feature_kind"], "fvu": r["fvu"]}
    best_feature = [{"family": f, "train_size": n, **v} for (f, n), v in sorted(best.items())]
    return {"rows": rows, "best_feature": best_feature, "tally": tally}
