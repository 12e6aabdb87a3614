import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from errormodels.datagen import (CoarseTimeGrid, GalerkinSurrogate, SplitConfig, assemble_dataset,
                                 run_instance, sample_parameters, split_indices, sub_seed,
                                 training_prefix)
from errormodels.dynsys import SystemSpec, build_advection_diffusion
from errormodels.exceptions import CardinalityError, DomainError, ShapeError
from errormodels.features import FeatureSpec
from errormodels.integrator import (TimeGrid, Trajectory, crank_nicolson, discrete_residual,
                                    implicit_euler, integrate)
from errormodels.reduction import compute_pod, galerkin_reduce


def test_sampling_contract():
    same = sample_parameters(np.array([[0.3, 0.3], [2.0, 2.0]]), 5, 1)
    np.testing.assert_array_equal(same, [[0.3, 2.0]] * 5)
    dom = np.array([[0.0, 1.0]])
    np.testing.assert_array_equal(sample_parameters(dom, 7, 42), sample_parameters(dom, 7, 42))
    assert abs(sample_parameters(dom, 10_000, 3).mean() - 0.5) <= 0.02
    with pytest.raises(DomainError):
        sample_parameters(np.array([[1.0, 0.0]]), 3, 0)


def test_sub_seed_is_stable_and_distinct():
    assert sub_seed(7, "train", 1) == sub_seed(7, "train", 1)
    assert len({sub_seed(7, "train", r) for r in range(20)}) == 20
    assert sub_seed(7, "a") != sub_seed(8, "a")


def test_coarse_grid():
    g = CoarseTimeGrid.from_stride(20, 50)
    assert len(g) == 50 and g.tau[0] == 0 and g.tau[-1] == 1000
    assert np.all(np.diff(g.tau) > 0)
    with pytest.raises(ValueError):
        CoarseTimeGrid((3, 3))
    with pytest.raises(ShapeError):
        g.check(999)


def _toy_system():
    return SystemSpec(dim=2, velocity=lambda x, t, mu: np.zeros(2),
                      jacobian=lambda x, t, mu: np.zeros((2, 2)),
                      initial_condition=lambda mu: np.zeros(2), qoi=lambda x, t, mu: float(x[1]),
                      domain=np.array([[0.0, 1.0]]))


def test_hand_oracle_two_states():
    system = _toy_system()
    grid = TimeGrid(0.5, 2)
    fom = Trajectory(np.array([[0.0, 0.0], [3.0, 4.0], [1.0, 1.0]]), grid, np.array([0.5]))
    sur = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 2.0]])
    seq = assemble_dataset(fom, sur, system, implicit_euler(), FeatureSpec("params+resnorm", 1, 2),
                           CoarseTimeGrid((1, 2)))
    np.testing.assert_allclose(seq.delta_x, [5.0, 1.0])
    np.testing.assert_allclose(seq.delta_q, [4.0, -1.0])
    # zero velocity: residual is the state increment
    np.testing.assert_allclose(seq.features[:, 1], [0.0, np.sqrt(5.0)])
    assert seq.initial_errors == (0.0, 0.0)
    with pytest.raises(ShapeError):
        assemble_dataset(fom, sur[:2], system, implicit_euler(), FeatureSpec("params", 1),
                         CoarseTimeGrid((1,)))


def test_perfect_surrogate_gives_zero_responses():
    ad = build_advection_diffusion(41)
    fom = integrate(ad, crank_nicolson(), TimeGrid(1e-3, 40), np.array([-1.0, 0.3]))
    seq = assemble_dataset(fom, fom, ad, crank_nicolson(), FeatureSpec("params+resnorm", 2, 40),
                           CoarseTimeGrid.from_stride(4, 10))
    assert np.all(seq.delta_x == 0) and np.all(seq.delta_q == 0)
    assert np.all(seq.features[:, 2] <= 1e-10)


@pytest.fixture(scope="module")
def ad_instance():
    ad = build_advection_diffusion(101)
    scheme, grid = crank_nicolson(), TimeGrid(3e-4, 1000)
    trajs = [integrate(ad, scheme, grid, m)
             for m in itertools.product([-2.0, -1.05, -0.1], [0.1, 0.55, 1.0])]
    basis = compute_pod(trajs, "initial-state", skip=10, K=5)
    sur = GalerkinSurrogate(galerkin_reduce(ad, basis), basis, ad)
    coarse = CoarseTimeGrid.from_stride(20, 50)
    mu = np.array([-1.3, 0.42])
    raw = run_instance(ad, scheme, grid, coarse, sur, mu)
    return ad, scheme, grid, sur, mu, raw


def test_ad_instance_sequence_length_and_initial_error(ad_instance):
    ad, scheme, grid, sur, mu, raw = ad_instance
    assert len(raw.delta_x) == 50 and raw.residuals.shape == (50, 100)
    assert raw.initial_errors[0] <= 1e-12 and raw.initial_errors[1] == 0.0


def test_residual_norm_feature_recomputed(ad_instance):
    ad, scheme, grid, sur, mu, raw = ad_instance
    states = sur.solve(scheme, grid, mu)
    for j, n in enumerate(raw.fine_index):
        r = discrete_residual(ad, scheme, states[n], [states[n - 1]], n, mu, grid.dt)
        assert abs(np.linalg.norm(r) - np.linalg.norm(raw.residuals[j])) <= 1e-12


def test_split_paper_counts():
    ids = split_indices(100, SplitConfig(40, 10, 50, 20, seed=9))
    assert len(ids["noise_test"]) == 30 and len(ids["noise_train"]) == 20
    assert set(ids["noise_train"]) | set(ids["noise_test"]) == set(ids["test"])
    sets = [set(ids[k]) for k in ("train", "val", "test")]
    assert all(not (a & b) for a, b in itertools.combinations(sets, 2))
    assert ids == split_indices(100, SplitConfig(40, 10, 50, 20, seed=9))
    tr, va = training_prefix(ids, 8, 2)
    assert tr == ids["train"][:8] and va == ids["val"][:2]
    with pytest.raises(CardinalityError):
        split_indices(99, SplitConfig(40, 10, 50, 20))
    with pytest.raises(ValueError):
        SplitConfig(8, 3, 5, 1)


@settings(max_examples=40, deadline=None)
@given(n_val=st.integers(1, 10), n_test=st.integers(1, 30), frac=st.floats(0, 1),
       seed=st.integers(0, 2**32 - 1))
def test_split_partition_property(n_val, n_test, frac, seed):
    cfg = SplitConfig(4 * n_val, n_val, n_test, int(frac * n_test), seed)
    ids = split_indices(cfg.total, cfg)
    assert sorted(ids["train"] + ids["val"] + ids["test"]) == list(range(cfg.total))
    assert sorted(ids["noise_train"] + ids["noise_test"]) == ids["test"]
