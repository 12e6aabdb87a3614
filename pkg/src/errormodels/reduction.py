"""POD bases, Galerkin reduction, residual principal components and gappy POD."""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .dynsys import SystemSpec
from .exceptions import (ConditioningError, DegenerateSpectrumError,
                         RankDeficiencyError, ShapeError, UnderSamplingError)

RANK_TOL = 1e-12
GAPPY_COND_TOL = 1e-10
XREF_RULES = ("initial-state", "zero")


@dataclass(frozen=True)
class PODBasis:
    """Orthonormal trial basis with an affine offset.

    Attributes
    ----------
    columns : (N, K) ndarray
        Orthonormal basis vectors.
    reference : (N,) ndarray or None
        Fixed reference state, or None when ``x_ref_rule`` makes it depend on
        the parameters (``"initial-state"``).
    x_ref_rule : str
        ``"initial-state"`` (x_ref = x0(mu)) or ``"zero"``.
    singular_values : ndarray
        Full singular spectrum of the snapshot matrix.
    """

    columns: np.ndarray
    x_ref_rule: str = "zero"
    reference: np.ndarray = None
    singular_values: np.ndarray = None

    @property
    def K(self):
        return self.columns.shape[1]

    @property
    def N(self):
        return self.columns.shape[0]

    def x_ref(self, system, mu):
        if self.x_ref_rule == "initial-state":
            return np.asarray(system.initial_condition(mu), dtype=float)
        if self.reference is not None:
            return self.reference
        return np.zeros(self.N)


def _reference(rule, traj_states, dim):
    if rule == "initial-state":
        return traj_states[0]
    if rule == "zero":
        return np.zeros(dim)
    raise ValueError(f"unknown x_ref rule {rule!r}; choose from {XREF_RULES}")


def snapshot_matrix(trajectories, x_ref_rule="initial-state", skip=1):
    """Columns ``x^{j skip} - x_ref`` for ``j = 0 .. floor(N_t / skip)``."""
    if int(skip) != skip or skip < 1:
        raise ValueError("skip must be a positive integer")
    blocks = []
    for traj in trajectories:
        states = np.asarray(traj.states if hasattr(traj, "states") else traj, dtype=float)
        ref = _reference(x_ref_rule, states, states.shape[1])
        blocks.append((states[::int(skip)] - ref).T)
    if not blocks:
        raise ValueError("no snapshot trajectories given")
    return np.hstack(blocks)


def pod_from_snapshots(snapshots, K, x_ref_rule="zero"):
    snapshots = np.asarray(snapshots, dtype=float)
    if snapshots.ndim != 2:
        raise ShapeError("snapshot matrix must be 2D")
    if int(K) != K or K < 1:
        raise ValueError("K must be a positive integer")
    if K > min(snapshots.shape):
        raise RankDeficiencyError(
            f"K={K} exceeds the snapshot matrix size {snapshots.shape}")
    u, s, _ = np.linalg.svd(snapshots, full_matrices=False)
    if s[0] == 0.0 or s[K - 1] / s[0] < RANK_TOL:
        raise RankDeficiencyError(
            f"K={K} exceeds the numerical rank of the snapshots "
            f"(sigma_K / sigma_1 = {s[K - 1] / s[0] if s[0] else 0.0:.3e})")
    return PODBasis(columns=u[:, :K].copy(), x_ref_rule=x_ref_rule, singular_values=s)


def compute_pod(snapshot_trajectories, x_ref_rule="initial-state", skip=1, K=1):
    """POD basis from the left singular vectors of the snapshot matrix.

    Snapshots are offset by ``x_ref`` but not mean-centered.
    """
    S = snapshot_matrix(snapshot_trajectories, x_ref_rule, skip)
    return pod_from_snapshots(S, K, x_ref_rule)


def galerkin_reduce(system, basis):
    """Galerkin projection of ``system`` onto ``x_ref + range(Phi)``."""
    if basis.N != system.dim:
        raise ShapeError(f"basis has {basis.N} rows, system dimension is {system.dim}")
    phi = basis.columns
    K = basis.K

    def lift(xh, mu):
        return basis.x_ref(system, mu) + phi @ xh

    def velocity(xh, t, mu):
        return phi.T @ system.velocity(lift(xh, mu), t, mu)

    # a linear system has a state-independent reduced Jacobian; keep the last one
    last = {}

    def jacobian(xh, t, mu):
        if system.linear:
            key = tuple(np.asarray(mu, dtype=float).tolist())
            hit = last.get("jac")
            if hit is not None and hit[0] == key:
                return hit[1]
        J = system.jacobian(lift(xh, mu), t, mu)
        red = phi.T @ (J @ phi)
        if system.linear:
            last["jac"] = (key, red)
        return red

    def initial_condition(mu):
        return phi.T @ (np.asarray(system.initial_condition(mu), dtype=float)
                        - basis.x_ref(system, mu))

    def qoi(xh, t, mu):
        return system.qoi(lift(xh, mu), t, mu)

    return SystemSpec(
        dim=K,
        velocity=velocity,
        jacobian=jacobian,
        initial_condition=initial_condition,
        qoi=qoi,
        domain=system.domain,
        bands=None,
        name=f"{system.name}-galerkin-{K}",
        linear=system.linear,
    )


def reconstruct(basis, system, reduced_states, mu):
    """Lift reduced states (rows) back to the full space."""
    reduced_states = np.asarray(reduced_states, dtype=float)
    return basis.x_ref(system, mu) + reduced_states @ basis.columns.T


def energy_truncate(singular_values, energy=0.99):
    """Smallest n whose leading squared singular values hold ``energy``."""
    s = np.asarray(singular_values, dtype=float)
    if s.ndim != 1 or s.size == 0:
        raise ShapeError("singular values must be a nonempty 1D sequence")
    if not 0.0 < energy <= 1.0:
        raise ValueError("energy must lie in (0, 1]")
    if np.any(s < 0) or np.any(np.diff(s) > 0):
        raise ValueError("singular values must be nonnegative and nonincreasing")
    e = s * s
    total = e.sum()
    if total == 0.0:
        raise DegenerateSpectrumError("all singular values are zero")
    frac = np.cumsum(e) / total
    # guard against round-off leaving the last entry a hair below 1
    frac[-1] = 1.0
    return int(np.searchsorted(frac, energy * (1.0 - 1e-14), side="left") + 1)


@dataclass(frozen=True)
class ResidualPCA:
    """Principal directions of mean-centered residual snapshots."""

    basis: np.ndarray
    mean: np.ndarray
    singular_values: np.ndarray

    @property
    def n_r(self):
        return self.basis.shape[1]

    @property
    def N(self):
        return self.basis.shape[0]


def fit_residual_pca(residuals, energy=0.99, n_r=None):
    """Fit PCA to residual snapshots stored row-wise in ``residuals``."""
    R = np.asarray(residuals, dtype=float)
    if R.ndim != 2 or R.shape[0] < 1:
        raise ShapeError("residual snapshots must be a nonempty 2D array")
    mean = R.mean(axis=0)
    u, s, _ = np.linalg.svd((R - mean).T, full_matrices=False)
    if n_r is None:
        n_r = energy_truncate(s, energy)
    elif n_r > s.size or (n_r > 0 and s[0] > 0 and s[n_r - 1] / s[0] < RANK_TOL):
        raise RankDeficiencyError(f"n_r={n_r} exceeds the rank of the centered residuals")
    return ResidualPCA(basis=u[:, :n_r].copy(), mean=mean, singular_values=s)


def qsample_select(pca, n_s):
    """Row indices (zero-based, pivot order) from column-pivoted QR of Phi_r^T."""
    phi = pca.basis if isinstance(pca, ResidualPCA) else np.asarray(pca, dtype=float)
    N, n_r = phi.shape
    if n_s < n_r:
        raise UnderSamplingError(f"n_s={n_s} is smaller than n_r={n_r}")
    if n_s > N:
        raise ValueError(f"n_s={n_s} exceeds the state dimension {N}")
    _, _, piv = la.qr(phi.T, mode="economic", pivoting=True)
    return np.asarray(piv[:n_s], dtype=int)


def pca_project(pca, r):
    r = np.asarray(r, dtype=float)
    if r.shape != (pca.N,):
        raise ShapeError(f"residual has shape {r.shape}, expected ({pca.N},)")
    return pca.basis.T @ (r - pca.mean)


def gappy_reconstruct(pca, rows, sampled, sampled_mean=None):
    """Least-squares coefficients ``[P Phi_r]^+ (sampled - sampled_mean)``."""
    rows = np.asarray(rows, dtype=int)
    sampled = np.asarray(sampled, dtype=float)
    if sampled.shape != rows.shape:
        raise ShapeError(f"got {sampled.size} sampled entries for {rows.size} rows")
    if sampled_mean is None:
        sampled_mean = pca.mean[rows]
    A = pca.basis[rows]
    if A.shape[0] < A.shape[1]:
        raise UnderSamplingError("fewer sampled rows than principal components")
    if A.shape[1] == 0:
        return np.zeros(0)
    q, r = la.qr(A, mode="economic")
    sv = np.linalg.svd(r, compute_uv=False)
    if not sv[-1] > GAPPY_COND_TOL * sv[0]:
        ratio = sv[-1] / sv[0] if sv[0] > 0 else 0.0
        raise ConditioningError(
            f"sampled basis is ill conditioned (sigma_min / sigma_max = {ratio:.3e})")
    return la.solve_triangular(r, q.T @ (sampled - sampled_mean))
