import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from signed_balance.core import (
    DimensionError,
    NonPositiveScale,
    ToleranceConfig,
    as_appraisal,
    find_gamma,
    is_nz_row,
    is_rs_symm_pos,
    is_s_symm_pos,
    max_norm,
    min_abs,
    scale,
    sign_pattern,
)


def test_as_appraisal_rejects_bad_shapes():
    with pytest.raises(DimensionError):
        as_appraisal(np.ones((2, 3)))
    with pytest.raises(DimensionError):
        as_appraisal(np.ones(3))
    with pytest.raises(ValueError):
        as_appraisal([[1.0, np.nan], [0.0, 1.0]])


def test_norms():
    X = [[1.0, -3.0], [0.5, 2.0]]
    assert max_norm(X) == 3.0
    assert min_abs(X) == 0.5


def test_sign_pattern_uses_relative_threshold():
    X = np.array([[1.0, 1e-12], [-1e-3, -2.0]])
    np.testing.assert_array_equal(sign_pattern(X), [[1, 0], [-1, -1]])
    # the same pattern survives rescaling
    np.testing.assert_array_equal(sign_pattern(1e6 * X), sign_pattern(X))


def test_tolerance_validation():
    with pytest.raises(ValueError):
        ToleranceConfig(zero_tol=-1.0)


def test_nz_row():
    assert is_nz_row(np.eye(3))
    X = np.eye(3)
    X[1] = 0.0
    assert not is_nz_row(X)
    assert not is_nz_row(np.zeros((2, 2)))


def test_s_symm_pos():
    assert is_s_symm_pos([[1.0, -2.0], [-0.1, 3.0]])
    assert not is_s_symm_pos([[1.0, -2.0], [0.1, 3.0]])
    assert not is_s_symm_pos([[-1.0, 2.0], [0.1, 3.0]])


def test_find_gamma_recovers_scaling(rng):
    S = rng.uniform(-1, 1, (5, 5))
    S = S + S.T
    np.fill_diagonal(S, 1.0)
    g = rng.uniform(0.1, 2.0, 5)
    X = g[:, None] * S
    gamma = find_gamma(X)
    assert gamma is not None and np.all(gamma > 0)
    G = gamma[:, None] * X
    np.testing.assert_allclose(G, G.T, rtol=1e-12, atol=1e-12)


def test_sign_symmetric_but_not_symmetrizable():
    # a 3-cycle whose ratio product differs from 1
    X = np.array([[1.0, 1.0, 2.0], [1.0, 1.0, 1.0], [1.0, 1.0, 1.0]])
    assert is_s_symm_pos(X)
    assert find_gamma(X) is None
    assert not is_rs_symm_pos(X)


def test_find_gamma_disconnected():
    X = np.diag([1.0, 2.0, 3.0])
    X[0, 1], X[1, 0] = 2.0, 1.0
    assert is_rs_symm_pos(X)


def test_scale():
    with pytest.raises(NonPositiveScale):
        scale(np.eye(2), 0.0)
    np.testing.assert_array_equal(scale(np.eye(2), 2.0), 2 * np.eye(2))


@settings(max_examples=200, deadline=None)
@given(
    X=arrays(np.float64, (4, 4), elements=st.floats(-10, 10, allow_nan=False)),
    c=st.floats(1e-3, 1e3),
)
def test_sign_pattern_scale_invariant(X, c):
    np.testing.assert_array_equal(sign_pattern(c * X), sign_pattern(X))
