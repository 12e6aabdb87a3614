import numpy as np
import pytest

from errormodels.dynsys import SystemSpec


def scalar_linear_system(rate):
    """dx/dt = rate * x on a single state."""
    return SystemSpec(
        dim=1,
        velocity=lambda x, t, mu: rate * np.asarray(x, dtype=float),
        jacobian=lambda x, t, mu: np.array([[rate]]),
        initial_condition=lambda mu: np.array([1.0]),
        qoi=lambda x, t, mu: float(x[0]),
        domain=np.array([[0.0, 1.0]]),
        name="scalar",
        linear=True,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# small advection-diffusion campaign used by the command-line tests
TINY = """
seed = 5

[system]
name = "advection-diffusion"
n_cells = 21

[surrogate]
type = "pod-galerkin"
K = 3
pod_grid = [[-2.0, -0.1], [0.1, 1.0]]
skip = 4

[integrator]
scheme = "crank-nicolson"
dt = 1e-3
n_steps = 40

[coarse_grid]
stride = 4
count = 10

[features]
kinds = ["params", "params+resnorm"]

[split]
n_train = 8
n_val = 2
n_test = 10
n_noise_train = 4

[train]
response = "qoi"
max_epochs = 40
n_restarts = 2
lr = 0.01

[train.grids]
ARX = [{alpha = 1e-3}]
LSTM = [{depth = 1, width = 3, alpha = 1e-4}]
kNN = [{k = 2, weighting = "distance"}]
GP = [{lam = 1e-4}]
"""
