import math

import numpy as np
import pytest

from signed_balance.core import is_nz_row, is_rs_symm_pos
from signed_balance.dynamics import HBM, IBM
from signed_balance.experiments import (
    InitKind,
    McConfig,
    ParameterOutOfRange,
    SweepGrid,
    ally_competition_scenario,
    apply_single_link,
    build_block_balanced,
    chernoff_sample_size,
    faction_sweep,
    gen_rs_symm,
    gen_uniform_interval,
    gen_uniform_nzrow,
    mc_convergence_probability,
    non_vanishing_indicator,
    random_two_faction_base,
    trial_rng,
    trial_seed,
)


def test_chernoff_values():
    # ceil(ln(200) / 0.0002) and ceil(ln(4) / 0.5)
    assert chernoff_sample_size(0.01, 0.01) == math.ceil(math.log(200) / 2e-4) == 26492
    assert chernoff_sample_size(0.01, 0.01) <= 27000
    assert chernoff_sample_size(0.5, 0.5) == 3
    with pytest.raises(ParameterOutOfRange):
        chernoff_sample_size(0.0, 0.1)


def test_trial_seed_independent_of_order():
    a = [trial_seed(7, t) for t in range(5)]
    b = [trial_seed(7, t) for t in reversed(range(5))][::-1]
    assert a == b
    assert len(set(a)) == 5
    assert trial_seed(7, 0) != trial_seed(8, 0)
    x = trial_rng(7, 3).uniform(size=3)
    np.testing.assert_array_equal(x, trial_rng(7, 3).uniform(size=3))


def test_generators(rng):
    X = gen_uniform_nzrow(6, 2.0, rng)
    assert is_nz_row(X) and np.all(np.abs(X) <= 2.0)
    X, g = gen_rs_symm(6, rng, return_gamma=True)
    assert is_rs_symm_pos(X) and np.all(g > 0)
    np.testing.assert_allclose((X / g[:, None]), (X / g[:, None]).T)
    Y = gen_uniform_interval(4, 0.5, 1.5, rng)
    assert np.all((Y >= 0.5) & (Y <= 1.5))
    with pytest.raises(ParameterOutOfRange):
        InitKind("bogus")


def test_mc_small_run_deterministic():
    cfg = McConfig(n=4, model=HBM, trials=20, horizon_check_end=200, master_seed=3)
    r1 = mc_convergence_probability(cfg, keep_trials=True)
    r2 = mc_convergence_probability(cfg, keep_trials=True)
    assert r1.per_trial == r2.per_trial
    assert r1.p_hat == 1.0 and r1.std_err == 0.0
    assert [rec[0] for rec in r1.per_trial] == list(range(20))


def test_mc_batching_does_not_change_results():
    base = dict(n=4, model=IBM, trials=30, horizon_check_end=200, master_seed=5, init=InitKind("uniform-nzrow"))
    a = mc_convergence_probability(McConfig(**base, batch_size=7), keep_trials=True)
    b = mc_convergence_probability(McConfig(**base), keep_trials=True)
    assert a.per_trial == b.per_trial


def test_indicator_counterexamples():
    cfg = McConfig(horizon_check_end=200)
    # influence run that loses a row
    Z, bt = non_vanishing_indicator(np.array([[1.0, 2.0], [-0.5, -1.0]]), IBM, cfg)
    assert Z == 0 and bt is None
    # homophily collapse to the identity keeps zero off-diagonals
    Z, _ = non_vanishing_indicator(-np.ones((4, 4)) + 2 * np.eye(4), HBM, cfg)
    assert Z == 0
    Z, bt = non_vanishing_indicator(np.ones((3, 3)), HBM, cfg)
    assert Z == 1 and bt == 0


def test_build_block_and_links():
    X = build_block_balanced([([1, -1], 2.0), ([1], 1.0)])
    assert X.shape == (3, 3) and X[0, 1] == -2.0 and X[0, 2] == 0.0
    Y = apply_single_link(X, 0, 2, 0.3, bilateral=True)
    assert Y[0, 2] == Y[2, 0] == 0.3
    np.testing.assert_array_equal(apply_single_link(X, 0, 2, 0.0), X)
    with pytest.raises(IndexError):
        apply_single_link(X, 0, 3, 0.1)
    with pytest.raises(ParameterOutOfRange):
        apply_single_link(X, 1, 1, 0.1)
    with pytest.raises(ParameterOutOfRange):
        build_block_balanced([([1], 0.0)])


def test_two_faction_base(rng):
    for _ in range(20):
        X, groups = random_two_faction_base(rng, 12)
        assert X.shape[0] == sum(len(g) for g in groups) <= 12
        assert all(len(g) >= 1 for g in groups)


def test_ally_predictions():
    _, p, _ = ally_competition_scenario(3, 3, 3, 1.0, 1.0, 0.5, 0.2)
    assert p.v1_gains_ally and p.v1_allies_v3 and p.v3_gains_ally and not p.all_friendly
    _, p, _ = ally_competition_scenario(2, 2, 4, 0.5, 1.0, 1.0, 1.0)
    assert p.all_friendly and not p.v1_gains_ally and not p.v2_gains_ally
    with pytest.raises(ParameterOutOfRange):
        ally_competition_scenario(0, 1, 1, 1, 1, 1, 1)


def test_sweep_record_shape():
    recs = faction_sweep(SweepGrid(n_values=(4,), ave_values=(0.0, 1.0), samples_per_cell=4, horizon=50))
    assert [r["ave"] for r in recs] == [0.0, 1.0]
    for r in recs:
        assert r["one_faction"] + r["two_factions"] + r["indeterminate"] == 4
    assert recs[1]["classification"] == "AllOneFaction"
