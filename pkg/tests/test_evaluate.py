import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from errormodels.evaluate import (BoundParams, error_bound_sequence, fvu, lipschitz_constant,
                                  report_grid)
from errormodels.exceptions import DegenerateVarianceError, InadmissibleBoundError
from errormodels.integrator import MultistepScheme, implicit_euler


def test_fvu_examples():
    y = np.array([1.0, 2.0, 3.0])
    assert fvu(y, y) == 0.0
    assert fvu(y, np.full(3, 2.0)) == 1.0
    assert fvu(y, [1.0, 2.0, 4.0]) == 0.5
    with pytest.raises(DegenerateVarianceError):
        fvu([1.0, 1.0], [1.0, 2.0])


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), scale=st.floats(0.1, 10), shift=st.floats(-10, 10))
def test_fvu_affine_invariance(seed, scale, shift):
    rng = np.random.default_rng(seed)
    y, p = rng.standard_normal(10), rng.standard_normal(10)
    assert fvu(scale * y + shift, scale * p + shift) == pytest.approx(fvu(y, p), rel=1e-9)


def test_bound_constants_and_restriction():
    p = BoundParams(kappa=2.0, scheme=MultistepScheme((1.0, -1.0), (1.0, 1.0)), dt=0.4)
    assert p.h == pytest.approx(0.2)
    assert p.gammas[0] == pytest.approx(9.0)
    with pytest.raises(InadmissibleBoundError):
        BoundParams(kappa=2.0, scheme=implicit_euler(), dt=0.5)


def test_bound_telescopes_for_zero_kappa():
    p = BoundParams(kappa=0.0, scheme=implicit_euler(), dt=0.1)
    out = error_bound_sequence(np.full(6, 0.3), [0.0], p)
    np.testing.assert_allclose(out, 0.3 * np.arange(7), rtol=1e-14)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), idx=st.integers(0, 7), bump=st.floats(0, 5))
def test_bound_monotone_in_residuals(seed, idx, bump):
    rng = np.random.default_rng(seed)
    r = rng.random(8)
    p = BoundParams(kappa=1.5, scheme=MultistepScheme((1.5, -2.0, 0.5), (1.0, 0.0, 0.0)), dt=0.1)
    base = error_bound_sequence(r, [0.1], p)
    r2 = r.copy()
    r2[idx] += bump
    bumped = error_bound_sequence(r2, [0.1], p)
    assert np.all(bumped >= base)


def test_lipschitz_constant():
    A = np.array([[3.0, 0.0], [4.0, 0.0]])
    assert lipschitz_constant(A) == pytest.approx(5.0)


def test_report_grid_examples():
    one = report_grid({("LSTM", "params", 40): 0.1})
    assert len(one["rows"]) == 1 and one["tally"] == {"LSTM": 100.0}
    two = report_grid({("LSTM", "params", 40): 0.1, ("ARX", "params", 40): 0.2})
    assert two["tally"] == {"ARX": 0.0, "LSTM": 100.0}
    tie = report_grid({("LSTM", "params", 40): 0.1, ("ARX", "params", 40): 0.1,
                       ("LSTM", "params+time", 40): 0.3, ("ARX", "params+time", 40): 0.2})
    assert tie["tally"]["ARX"] == pytest.approx(75.0) and tie["tally"]["LSTM"] == pytest.approx(25.0)
    assert sum(tie["tally"].values()) == pytest.approx(100.0)
    best = {(b["family"], b["train_size"]): b["feature_kind"] for b in tie["best_feature"]}
    assert best == {("ARX", 40): "params", ("LSTM", 40): "params"}
