import warnings

import numpy as np
import pytest
from conftest import naive_step
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from signed_balance.core import is_s_symm_pos
from signed_balance.dynamics import (
    HBM,
    IBM,
    DomainWarning,
    EpsilonOutOfRange,
    ModelKind,
    SimConfig,
    Variant,
    ZeroEntry,
    ZeroRowEncountered,
    batch_step,
    column_spread,
    contraction_rate_bound_hbm,
    contraction_rate_bound_ibm,
    hbm_memory_step,
    hbm_step,
    ibm_step,
    max_norm_monotone_check,
    simulate,
)


def test_hbm_step_known_value():
    out = hbm_step([[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_allclose(out, [[5 / 3, 11 / 3], [11 / 7, 25 / 7]], rtol=1e-15)


def test_ibm_step_known_value():
    out = ibm_step([[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_allclose(out, [[7 / 3, 10 / 3], [15 / 7, 22 / 7]], rtol=1e-15)


def test_zero_row_raises():
    with pytest.raises(ZeroRowEncountered) as info:
        hbm_step([[1.0, 1.0], [0.0, 0.0]])
    assert info.value.row == 1


def test_memory_variant():
    X = np.array([[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_allclose(hbm_memory_step(X, 1.0), hbm_step(X))
    np.testing.assert_allclose(hbm_memory_step(X, 0.25), 0.25 * hbm_step(X) + 0.75 * X)
    for bad in (0.0, 1.5, -0.1):
        with pytest.raises(EpsilonOutOfRange):
            hbm_memory_step(X, bad)


def test_memory_variant_fixes_rank_one_balanced():
    b = np.array([1.0, -1.0, 1.0])
    X = 0.7 * np.outer(b, b)
    np.testing.assert_allclose(hbm_memory_step(X, 0.3), X, rtol=1e-14)


def test_model_kind():
    assert ModelKind.parse("hbm") == HBM
    m = ModelKind.parse("hbm-memory", 0.5)
    assert m.variant is Variant.HBM_MEMORY and m.epsilon == 0.5
    with pytest.raises(ValueError):
        ModelKind(Variant.HBM, 0.5)
    with pytest.raises(EpsilonOutOfRange):
        ModelKind(Variant.HBM_MEMORY, 2.0)


def test_batch_step_matches_single(rng):
    X = rng.uniform(-1, 1, (6, 5, 5))
    for model in (HBM, IBM, ModelKind(Variant.HBM_MEMORY, 0.4)):
        out, failed = batch_step(X, model)
        assert not failed.any()
        from signed_balance.dynamics import step
        for k in range(len(X)):
            np.testing.assert_allclose(out[k], step(X[k], model), rtol=1e-14)


def test_batch_step_flags_failed_member():
    X = np.stack([np.eye(2), np.array([[1.0, 2.0], [0.0, 0.0]])])
    _, failed = batch_step(X, HBM)
    assert failed.tolist() == [False, True]


def test_simulate_converges_and_records(rng):
    X0 = rng.uniform(-1, 1, (5, 5))
    traj = simulate(X0, HBM, SimConfig(record_every=3))
    assert traj.stop_reason == "Converged"
    assert traj.state_times[-1] == traj.steps
    assert all(t % 3 == 0 for t in traj.state_times[:-1])
    assert len(traj.summaries) == traj.steps + 1
    assert max_norm_monotone_check(traj)
    assert traj.balance_time is not None


def test_simulate_budget():
    X0 = np.array([[1.0, 0.3], [0.2, 1.0]])
    traj = simulate(X0, HBM, SimConfig(max_steps=1, convergence_tol=0.0))
    assert traj.stop_reason == "BudgetExhausted"
    assert traj.steps == 1


def test_simulate_ibm_warns_outside_domain():
    X0 = np.array([[1.0, 2.0], [-0.5, -1.0]])
    with pytest.warns(DomainWarning):
        traj = simulate(X0, IBM)
    assert traj.domain_warning
    assert traj.stop_reason == "ZeroRowEncountered"
    assert traj.steps == 1


def test_simulate_ibm_inside_domain_no_warning():
    X0 = np.array([[1.0, 0.5], [0.25, 2.0]])
    with warnings.catch_warnings():
        warnings.simplefilter("error", DomainWarning)
        traj = simulate(X0, IBM)
    assert not traj.domain_warning


def test_contraction_bounds_known_values():
    X = np.array([[2.0, 1.0], [1.0, 2.0]])
    assert contraction_rate_bound_hbm(X) == pytest.approx(0.9375, rel=1e-15)
    assert contraction_rate_bound_ibm(X) == pytest.approx(0.75, rel=1e-15)
    with pytest.raises(ZeroEntry):
        contraction_rate_bound_hbm(np.eye(2))


def test_column_spread():
    np.testing.assert_array_equal(column_spread([[1.0, -3.0], [-2.0, 1.0]]), [1.0, 2.0])


entries = st.one_of(st.just(0.0), st.floats(1e-6, 1.0), st.floats(-1.0, -1e-6))
matrices = st.integers(2, 4).flatmap(lambda n: arrays(np.float64, (n, n), elements=entries))


@settings(max_examples=300, deadline=None)
@given(X=matrices)
def test_steps_match_naive_oracle(X):
    A = np.abs(X)
    if np.any(A.sum(axis=1) <= 1e-6 * A.max()):
        return
    for kind, fn in (("hbm", hbm_step), ("ibm", ibm_step)):
        ref = naive_step(X.tolist(), kind)
        got = fn(X)
        assert np.max(np.abs(got - ref)) <= 1e-12 * max(np.max(np.abs(ref)), np.max(A))


@settings(max_examples=300, deadline=None)
@given(X=matrices, c=st.floats(1e-3, 1e3))
def test_scale_equivariance(X, c):
    A = np.abs(X)
    if np.any(A.sum(axis=1) <= 1e-6 * A.max()):
        return
    for fn in (hbm_step, ibm_step):
        ref = c * fn(X)
        assert np.max(np.abs(fn(c * X) - ref)) <= 1e-12 * max(np.max(np.abs(ref)), c * A.max())


@settings(max_examples=300, deadline=None)
@given(X=matrices)
def test_hbm_output_sign_symmetric(X):
    A = np.abs(X)
    if np.any(A.sum(axis=1) <= 1e-3 * A.max()):
        return
    assert is_s_symm_pos(hbm_step(X))
