"""Central finite-difference oracle for regression-family gradients."""

import numpy as np

from errormodels.regress import compute_loss_and_gradients
from errormodels.regress.families import FAMILIES

SMALL_HYPER = {
    "ANN": lambda r: {"depth": int(r.integers(1, 3)), "width": int(r.integers(2, 7))},
    "ANN-I": lambda r: {"depth": int(r.integers(1, 3)), "width": int(r.integers(2, 7))},
    "ARX": lambda r: {},
    "LARX": lambda r: {"latent": int(r.integers(1, 7))},
    "RNN": lambda r: {"depth": int(r.integers(1, 3)), "width": int(r.integers(2, 7))},
    "LSTM": lambda r: {"depth": int(r.integers(1, 3)), "width": int(r.integers(2, 7))},
}

FAMILY_MODES = [(f, m) for f, fam in FAMILIES.items() for m in fam.modes]


def random_instance(family, rng):
    d, T, B = int(rng.integers(1, 9)), int(rng.integers(1, 7)), int(rng.integers(1, 4))
    P = FAMILIES[family].init(d, SMALL_HYPER[family](rng), rng)
    P = {k: v + 0.1 * rng.standard_normal(v.shape) for k, v in P.items()}
    X = rng.standard_normal((B, T, d))
    Y = rng.standard_normal((B, T))
    Y0 = rng.standard_normal(B)
    return P, X, Y, Y0


def fd_gradient(family, P, X, Y, Y0, mode, alpha, step=1e-6):
    G = {}
    for k, v in P.items():
        g = np.empty_like(v)
        for idx in np.ndindex(v.shape):
            plus = {**P, k: v.copy()}
            minus = {**P, k: v.copy()}
            plus[k][idx] += step
            minus[k][idx] -= step
            lp, _ = compute_loss_and_gradients(family, plus, X, Y, Y0, mode, alpha)
            lm, _ = compute_loss_and_gradients(family, minus, X, Y, Y0, mode, alpha)
            g[idx] = (lp - lm) / (2 * step)
        G[k] = g
    return G


def relative_gradient_error(family, P, X, Y, Y0, mode, alpha):
    _, G = compute_loss_and_gradients(family, P, X, Y, Y0, mode, alpha)
    F = fd_gradient(family, P, X, Y, Y0, mode, alpha)
    a = np.concatenate([G[k].ravel() for k in P])
    b = np.concatenate([F[k].ravel() for k in P])
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b), 1e-12))
