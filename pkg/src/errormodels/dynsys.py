"""Parameterized dynamical systems used as full-order and low-fidelity models.

Every system is described by a :class:`SystemSpec`: a velocity ``f(x, t, mu)``,
its Jacobian, a parameterized initial condition, a scalar quantity of interest
and a box-shaped parameter domain. Two benchmarks are provided:

* a 1D advection--diffusion finite-difference model (linear in the state), and
* a 1D inviscid Burgers finite-volume model with an upwind flux.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np
import scipy.sparse as sp

from .exceptions import DiscretizationError, ShapeError


@dataclass(frozen=True)
class SystemSpec:
    """A parameterized system of ODEs ``dx/dt = f(x, t; mu)``.

    Attributes
    ----------
    dim : int
        State dimension N.
    velocity : callable
        ``velocity(x, t, mu) -> (N,) ndarray``.
    jacobian : callable
        ``jacobian(x, t, mu) -> (N, N)`` sparse matrix or ndarray.
    initial_condition : callable
        ``initial_condition(mu) -> (N,) ndarray``.
    qoi : callable
        ``qoi(x, t, mu) -> float``.
    domain : (N_mu, 2) ndarray
        Lower and upper bounds of the parameter box.
    bands : (int, int) or None
        Lower/upper bandwidth of the Jacobian, when banded.
    name : str
        Identifier used in manifests.
    coords : ndarray or None
        Spatial coordinates of the state entries (1D benchmarks only).
    qoi_index : int or None
        Zero-based state index read by a coordinate QoI functional.
    linear : bool
        True when the velocity is affine in the state.
    banded_jacobian : callable or None
        ``banded_jacobian(x, t, mu)`` returning the Jacobian in the
        ``scipy.linalg.solve_banded`` layout for ``bands``.
    """

    dim: int
    velocity: Callable
    jacobian: Callable
    initial_condition: Callable
    qoi: Callable
    domain: np.ndarray
    bands: Optional[Tuple[int, int]] = None
    name: str = "system"
    coords: Optional[np.ndarray] = field(default=None, repr=False)
    qoi_index: Optional[int] = None
    linear: bool = False
    banded_jacobian: Optional[Callable] = field(default=None, repr=False)

    @property
    def n_params(self):
        return int(np.asarray(self.domain).shape[0])

    def check_params(self, mu):
        """Return ``mu`` as a float array after validating its length and range."""
        mu = np.asarray(mu, dtype=float)
        if mu.shape != (self.n_params,):
            raise ShapeError(f"expected {self.n_params} parameters, got shape {mu.shape}")
        lo, hi = self.domain[:, 0], self.domain[:, 1]
        if np.any(mu < lo) or np.any(mu > hi):
            raise ValueError(f"parameters {mu} outside the domain {self.domain.tolist()}")
        return mu


@dataclass(frozen=True)
class ProlongationOp:
    """Sparse linear map from a coarse state space into the fine one."""

    coarse_dim: int
    fine_dim: int
    weights: sp.csr_matrix

    def __post_init__(self):
        if self.weights.shape != (self.fine_dim, self.coarse_dim):
            raise ShapeError("prolongation weights have the wrong shape")
        if self.fine_dim < self.coarse_dim:
            raise ShapeError("fine dimension must be at least the coarse dimension")


def midpoint_index(n):
    """Zero-based index of the 1-based midpoint entry ceil((n + 1) / 2)."""
    return math.ceil((n + 1) / 2) - 1


def _coordinate_qoi(index):
    def qoi(x, t, mu):
        return float(x[index])
    return qoi


def build_advection_diffusion(n_cells=101):
    """Upwind/central finite-difference advection--diffusion system on [0, 2].

    The interior unknowns sit at ``x_k = 2 k / n_cells`` for ``k = 1..n_cells-1``
    with homogeneous Dirichlet values at both ends. ``mu = (wave speed,
    diffusivity)`` ranges over ``[-2, -0.1] x [0.1, 1]``; the forward difference
    used for advection is then the upwind one.
    """
    if int(n_cells) != n_cells or n_cells < 3:
        raise DiscretizationError(f"need at least 3 cells, got {n_cells}")
    n_cells = int(n_cells)
    n = n_cells - 1
    h = 2.0 / n_cells
    coords = h * np.arange(1, n + 1)
    x0 = coords * (2.0 - coords) * np.exp(2.0 * coords)
    x0.setflags(write=False)
    iq = midpoint_index(n)

    def diagonals(mu):
        adv, diff = mu[0], mu[1]
        main = adv / h - 2.0 * diff / h**2
        upper = -adv / h + diff / h**2
        lower = diff / h**2
        return lower, main, upper

    def velocity(x, t, mu):
        lower, main, upper = diagonals(mu)
        out = main * x
        out[:-1] += upper * x[1:]
        out[1:] += lower * x[:-1]
        return out

    def jacobian(x, t, mu):
        lower, main, upper = diagonals(mu)
        return sp.diags(
            [np.full(n - 1, lower), np.full(n, main), np.full(n - 1, upper)],
            [-1, 0, 1], format="csr")

    def banded(x, t, mu):
        lower, main, upper = diagonals(mu)
        ab = np.empty((3, n))
        ab[0], ab[1], ab[2] = upper, main, lower
        ab[0, 0] = ab[2, -1] = 0.0
        return ab

    return SystemSpec(
        dim=n,
        velocity=velocity,
        jacobian=jacobian,
        initial_condition=lambda mu: x0.copy(),
        qoi=_coordinate_qoi(iq),
        domain=np.array([[-2.0, -0.1], [0.1, 1.0]]),
        bands=(1, 1),
        name="advection-diffusion",
        coords=coords,
        qoi_index=iq,
        linear=True,
        banded_jacobian=banded,
    )


def burgers_cells(cell_width, length=100.0):
    """Number of cells of width ``cell_width`` that tile ``[0, length]``."""
    if cell_width <= 0:
        raise DiscretizationError(f"cell width must be positive, got {cell_width}")
    ratio = length / cell_width
    n = int(round(ratio))
    if n < 1 or abs(ratio - n) > 1e-9 * max(1.0, ratio):
        raise DiscretizationError(
            f"cell width {cell_width} does not divide the domain length {length}")
    return n


def build_burgers_fom(cell_width=0.1):
    """Finite-volume inviscid Burgers system on [0, 100] with an upwind flux.

    ``du_i/dt = -(F_{i+1/2} - F_{i-1/2}) / w + mu1 exp(mu2 x_i)`` with
    ``F_{i+1/2} = u_i^2 / 2``, inflow flux ``mu3^2 / 2`` at the left face and
    zero-gradient outflow. The initial state is uniformly ``mu4``.
    """
    n = burgers_cells(cell_width)
    w = 100.0 / n
    coords = w * (np.arange(n) + 0.5)
    iq = midpoint_index(n)

    def velocity(x, t, mu):
        flux = 0.5 * x * x
        out = np.empty(n)
        out[0] = 0.5 * mu[2] ** 2 - flux[0]
        out[1:] = flux[:-1] - flux[1:]
        out /= w
        out += mu[0] * np.exp(mu[1] * coords)
        return out

    def jacobian(x, t, mu):
        return sp.diags([x[:-1] / w, -x / w], [-1, 0], format="csr")

    def banded(x, t, mu):
        ab = np.empty((2, n))
        ab[0] = -x / w
        ab[1, :-1] = x[:-1] / w
        ab[1, -1] = 0.0
        return ab

    return SystemSpec(
        dim=n,
        velocity=velocity,
        jacobian=jacobian,
        initial_condition=lambda mu: np.full(n, float(mu[3])),
        qoi=_coordinate_qoi(iq),
        domain=np.array([[0.005, 0.05], [0.005, 0.05], [3.0, 5.0], [0.5, 2.5]]),
        bands=(1, 0),
        name="burgers",
        coords=coords,
        qoi_index=iq,
        linear=False,
        banded_jacobian=banded,
    )


def linear_interpolation(coarse_coords, fine_coords):
    """Prolongation by piecewise-linear interpolation between coarse nodes.

    Fine points outside the coarse node range use the nearest end segment
    (linear extrapolation) so affine data is reproduced exactly everywhere.
    """
    coarse_coords = np.asarray(coarse_coords, dtype=float)
    fine_coords = np.asarray(fine_coords, dtype=float)
    nc, nf = coarse_coords.size, fine_coords.size
    if nc == 1:
        weights = sp.csr_matrix(np.ones((nf, 1)))
        return ProlongationOp(1, nf, weights)
    left = np.clip(np.searchsorted(coarse_coords, fine_coords, side="right") - 1, 0, nc - 2)
    xl, xr = coarse_coords[left], coarse_coords[left + 1]
    theta = (fine_coords - xl) / (xr - xl)
    rows = np.repeat(np.arange(nf), 2)
    cols = np.column_stack([left, left + 1]).ravel()
    vals = np.column_stack([1.0 - theta, theta]).ravel()
    weights = sp.csr_matrix((vals, (rows, cols)), shape=(nf, nc))
    return ProlongationOp(nc, nf, weights)


def prolong(op, coarse_state, mu=None):
    """Map a coarse state into the fine space."""
    coarse_state = np.asarray(coarse_state, dtype=float)
    if coarse_state.shape[-1] != op.coarse_dim:
        raise ShapeError(
            f"coarse state has length {coarse_state.shape[-1]}, expected {op.coarse_dim}")
    if coarse_state.ndim == 1:
        return op.weights @ coarse_state
    return (op.weights @ coarse_state.T).T


def qoi_eval(system, state, t, mu):
    state = np.asarray(state, dtype=float)
    if state.shape != (system.dim,):
        raise ShapeError(f"state has shape {state.shape}, expected ({system.dim},)")
    return system.qoi(state, t, mu)
