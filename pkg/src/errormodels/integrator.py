"""Linear multistep time discretization with Newton solves."""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .exceptions import MissingHistoryError, ShapeError, SolverDivergenceError

NEWTON_TOL = 1e-10
NEWTON_MAX_ITER = 25


@dataclass(frozen=True)
class MultistepScheme:
    """Coefficients of ``sum_i alpha_i x^{n-i} = dt sum_i beta_i f(x^{n-i})``."""

    alphas: tuple
    betas: tuple
    name: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        if len(self.alphas) != len(self.betas) or len(self.alphas) < 2:
            raise ValueError("alphas and betas must both have length k + 1 >= 2")
        if self.alphas[0] == 0.0:
            raise ValueError("alpha_0 must be nonzero")

    @property
    def k(self):
        return len(self.alphas) - 1

    def width(self, n):
        """Stencil width k(n) = min(n, k) used at time index n."""
        return min(n, self.k)


def crank_nicolson():
    return MultistepScheme((1.0, -1.0), (0.5, 0.5), name="crank-nicolson")


def implicit_euler():
    return MultistepScheme((1.0, -1.0), (1.0, 0.0), name="implicit-euler")


def bdf2():
    return MultistepScheme((1.5, -2.0, 0.5), (1.0, 0.0, 0.0), name="bdf2")


SCHEMES = {"crank-nicolson": crank_nicolson, "implicit-euler": implicit_euler, "bdf2": bdf2}


def get_scheme(name):
    try:
        return SCHEMES[name]()
    except KeyError:
        raise ValueError(f"unknown scheme {name!r}; choose from {sorted(SCHEMES)}") from None


@dataclass(frozen=True)
class TimeGrid:
    dt: float
    n_steps: int

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ValueError("n_steps must be a positive integer")

    @property
    def times(self):
        return self.dt * np.arange(self.n_steps + 1)


@dataclass
class Trajectory:
    """States ``x^0 .. x^{N_t}`` stored row-wise in an ``(N_t + 1, N)`` array."""

    states: np.ndarray
    grid: TimeGrid
    mu: np.ndarray
    residual_norms: np.ndarray = None

    @property
    def times(self):
        return self.grid.times


def _history_term(system, scheme, history, n, mu, dt):
    """sum_{i=1..k(n)} alpha_i x^{n-i} - dt beta_i f(x^{n-i}, t^{n-i})."""
    kn = scheme.width(n)
    if kn > 0 and len(history) < kn:
        raise MissingHistoryError(
            f"time index {n} needs {kn} previous states, got {len(history)}")
    acc = 0.0
    for i in range(1, kn + 1):
        prev = np.asarray(history[i - 1], dtype=float)
        term = scheme.alphas[i] * prev
        if scheme.betas[i] != 0.0:
            term = term - dt * scheme.betas[i] * system.velocity(prev, (n - i) * dt, mu)
        acc = acc + term
    return acc


def discrete_residual(system, scheme, w, history, n, mu, dt):
    """Residual of the multistep equations at time index ``n``.

    ``history`` holds the previous states, most recent first:
    ``history[0] = x^{n-1}``, ``history[1] = x^{n-2}``, ...
    """
    w = np.asarray(w, dtype=float)
    if w.shape != (system.dim,):
        raise ShapeError(f"w has shape {w.shape}, expected ({system.dim},)")
    if n >= 1 and len(history) == 0:
        raise MissingHistoryError(f"time index {n} requires at least one previous state")
    res = scheme.alphas[0] * w - dt * scheme.betas[0] * system.velocity(w, n * dt, mu)
    return res + _history_term(system, scheme, history, n, mu, dt)


def _linear_solve(jac, rhs, bands):
    if sp.issparse(jac):
        if bands is not None:
            lower, upper = bands
            ab = np.zeros((lower + upper + 1, jac.shape[0]))
            dia = jac.todia()
            for offset, data in zip(dia.offsets, dia.data):
                if -lower <= offset <= upper:
                    ab[upper - offset] += data
            return la.solve_banded((lower, upper), ab, rhs)
        return spla.spsolve(jac.tocsc(), rhs)
    return la.solve(jac, rhs)


def _newton(system, scheme, history, n, mu, dt, tol, max_iter, guess=None):
    const = _history_term(system, scheme, history, n, mu, dt)
    a0, b0 = scheme.alphas[0], scheme.betas[0]
    t = n * dt
    w = np.array(history[0] if guess is None else guess, dtype=float)

    def residual(v):
        return a0 * v - dt * b0 * system.velocity(v, t, mu) + const

    res = residual(w)
    norm = float(np.linalg.norm(res))
    it = 0
    while not norm <= tol:
        if it >= max_iter or not np.isfinite(norm):
            raise SolverDivergenceError(
                f"Newton failed at time index {n} after {it} iterations "
                f"(residual norm {norm:.3e}, mu={np.asarray(mu).tolist()})",
                residual_norm=norm, mu=mu)
        if system.banded_jacobian is not None:
            ab = -(dt * b0) * system.banded_jacobian(w, t, mu)
            ab[system.bands[1]] += a0
            w = w - la.solve_banded(system.bands, ab, res)
            res = residual(w)
            norm = float(np.linalg.norm(res))
            it += 1
            continue
        jac = system.jacobian(w, t, mu)
        if sp.issparse(jac):
            jac = a0 * sp.identity(system.dim, format="csr") - (dt * b0) * jac
        else:
            jac = a0 * np.eye(system.dim) - (dt * b0) * np.asarray(jac)
        w = w - _linear_solve(jac, res, system.bands)
        res = residual(w)
        norm = float(np.linalg.norm(res))
        it += 1
    return w, it, norm


def newton_step_solve(system, scheme, history, n, mu, dt,
                      tol=NEWTON_TOL, max_iter=NEWTON_MAX_ITER):
    """Solve the multistep equations at index ``n`` for the new state.

    Starts from the previous state and stops once the residual 2-norm is at
    most ``tol``. Raises :class:`SolverDivergenceError` when ``max_iter``
    iterations do not suffice.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if len(history) == 0:
        raise MissingHistoryError("Newton solve needs at least the previous state")
    w, _, _ = _newton(system, scheme, history, n, mu, dt, tol, max_iter)
    return w


def integrate(system, scheme, grid, mu, tol=NEWTON_TOL, max_iter=NEWTON_MAX_ITER):
    """March the multistep scheme from ``x0(mu)`` over ``grid``."""
    mu = np.asarray(mu, dtype=float)
    states = np.empty((grid.n_steps + 1, system.dim))
    states[0] = system.initial_condition(mu)
    norms = np.zeros(grid.n_steps + 1)
    for n in range(1, grid.n_steps + 1):
        kn = scheme.width(n)
        history = [states[n - i] for i in range(1, kn + 1)]
        states[n], _, norms[n] = _newton(system, scheme, history, n, mu, grid.dt, tol, max_iter)
    return Trajectory(states=states, grid=grid, mu=mu, residual_norms=norms)


def residual_history(system, scheme, states, n):
    """Previous states of a stored trajectory, most recent first."""
    return [states[n - i] for i in range(1, scheme.width(n) + 1)]
