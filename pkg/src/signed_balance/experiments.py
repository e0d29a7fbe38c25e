"""Monte Carlo and scenario experiments on the appraisal dynamics.

Randomness: every trial draws from its own ``numpy`` PCG64 generator seeded
by :func:`trial_seed`, a SeedSequence hash of ``(master_seed, trial index)``.
Trials are therefore independent of execution order and batch size.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .balance import faction_count, is_socially_balanced
from .core import DEFAULT_TOL, ToleranceConfig, as_appraisal
from .dynamics import HBM, ModelKind, SimConfig, batch_step, simulate

__all__ = [
    "ParameterOutOfRange",
    "trial_seed",
    "trial_rng",
    "chernoff_sample_size",
    "gen_uniform_nzrow",
    "gen_rs_symm",
    "gen_uniform_interval",
    "InitKind",
    "McConfig",
    "McResult",
    "non_vanishing_indicator",
    "mc_convergence_probability",
    "build_block_balanced",
    "apply_single_link",
    "random_two_faction_base",
    "single_link_trial",
    "AllyPredictions",
    "ally_competition_scenario",
    "ally_outcome",
    "SweepGrid",
    "faction_sweep",
]


class ParameterOutOfRange(ValueError):
    pass


def trial_seed(master_seed: int, trial: int) -> int:
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(trial),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def trial_rng(master_seed: int, trial: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(trial_seed(master_seed, trial)))


def chernoff_sample_size(epsilon: float, xi: float) -> int:
    """Least N with ``N >= log(2 / xi) / (2 epsilon^2)``."""
    if not (0 < epsilon < 1 and 0 < xi < 1):
        raise ParameterOutOfRange("epsilon and xi must lie in (0, 1)")
    return math.ceil(math.log(2.0 / xi) / (2.0 * epsilon**2))


# ---------------------------------------------------------------- generators


def _has_zero_row(X, tol):
    A = np.abs(X)
    return bool(np.any(np.all(A <= tol.zero_tol * A.max(), axis=1))) or A.max() == 0


def gen_uniform_nzrow(n: int, a: float, rng: np.random.Generator, tol: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    if n < 1 or not a > 0:
        raise ParameterOutOfRange("need n >= 1 and a > 0")
    while True:
        X = rng.uniform(-a, a, size=(n, n))
        if not _has_zero_row(X, tol):
            return X


def gen_rs_symm(n: int, rng: np.random.Generator, tol: ToleranceConfig = DEFAULT_TOL, return_gamma: bool = False):
    """``diag(gamma) @ Xs`` with ``Xs`` symmetric uniform on [-1, 1] and gamma uniform on [0, 1].

    Diagonal entries of ``Xs`` are redrawn until positive, and gamma components
    until above ``zero_tol``, so the result has a positive diagonal.
    """
    if n < 1:
        raise ParameterOutOfRange("need n >= 1")
    upper = rng.uniform(-1.0, 1.0, size=(n, n))
    Xs = np.triu(upper) + np.triu(upper, 1).T
    diag = np.diag(Xs).copy()
    while np.any(diag <= 0):
        bad = diag <= 0
        diag[bad] = rng.uniform(-1.0, 1.0, size=int(bad.sum()))
    np.fill_diagonal(Xs, diag)
    gamma = rng.uniform(0.0, 1.0, size=n)
    while np.any(gamma <= tol.zero_tol):
        bad = gamma <= tol.zero_tol
        gamma[bad] = rng.uniform(0.0, 1.0, size=int(bad.sum()))
    X = gamma[:, None] * Xs
    return (X, gamma) if return_gamma else X


def gen_uniform_interval(n: int, x_min: float, x_max: float, rng: np.random.Generator) -> np.ndarray:
    if n < 1 or not x_min < x_max:
        raise ParameterOutOfRange("need n >= 1 and x_min < x_max")
    return rng.uniform(x_min, x_max, size=(n, n))


# --------------------------------------------------------------- Monte Carlo


@dataclass(frozen=True)
class InitKind:
    """Initial-condition family: ``uniform-nzrow`` (with ``a``), ``rs-symm`` or ``interval``."""

    kind: str = "uniform-nzrow"
    a: float = 1.0
    x_min: float = -1.0
    x_max: float = 1.0

    def __post_init__(self):
        if self.kind not in ("uniform-nzrow", "rs-symm", "interval"):
            raise ParameterOutOfRange(f"unknown init kind {self.kind!r}")

    def draw(self, n, rng, tol=DEFAULT_TOL):
        if self.kind == "uniform-nzrow":
            return gen_uniform_nzrow(n, self.a, rng, tol)
        if self.kind == "rs-symm":
            return gen_rs_symm(n, rng, tol)
        return gen_uniform_interval(n, self.x_min, self.x_max, rng)


@dataclass(frozen=True)
class McConfig:
    n: int = 8
    model: ModelKind = HBM
    trials: int = 1000
    horizon_check_start: int = 100
    horizon_check_end: int = 1000
    floor: float = 0.001
    master_seed: int = 0
    init: InitKind = InitKind()
    batch_size: int = 4096

    def __post_init__(self):
        if self.n < 1 or self.trials < 1:
            raise ParameterOutOfRange("need n >= 1 and trials >= 1")
        if not 0 <= self.horizon_check_start < self.horizon_check_end:
            raise ParameterOutOfRange("need 0 <= horizon_check_start < horizon_check_end")
        if not self.floor > 0:
            raise ParameterOutOfRange("floor must be positive")
        if not 0 <= self.master_seed < 2**64:
            raise ParameterOutOfRange("master_seed must be a 64-bit unsigned integer")

    def to_record(self) -> dict:
        rec = asdict(self)
        rec["model"] = str(self.model)
        return rec


@dataclass
class McResult:
    p_hat: float
    std_err: float
    trials: int
    successes: int
    per_trial: list | None = field(default=None, repr=False)
    config: dict | None = None

    @classmethod
    def from_indicators(cls, Z, per_trial=None, config=None):
        Z = np.asarray(Z, dtype=np.int64)
        trials, successes = int(Z.size), int(Z.sum())
        p = successes / trials
        return cls(p, math.sqrt(p * (1 - p) / trials), trials, successes, per_trial, config)


def _run_indicator_batch(X0: np.ndarray, model: ModelKind, cfg: McConfig, tol: ToleranceConfig):
    """Iterate a stack of initial states to ``horizon_check_end``.

    Returns ``(Z, balance_time)`` arrays; ``balance_time`` is -1 when the last
    state is not balanced or the run failed.
    """
    X = np.array(X0, dtype=np.float64, copy=True)
    m, n = X.shape[0], X.shape[1]
    alive = np.ones(m, dtype=bool)
    window_min = np.full(m, np.inf)
    last_unbalanced = np.full(m, -1)
    diag = np.arange(n)

    def observe(t):
        A = np.abs(X)
        if t >= cfg.horizon_check_start:
            np.minimum(window_min, A.min(axis=(1, 2)), out=window_min)
        S = np.sign(X)
        agree = S * S[:, :1, :]
        rows_ok = np.all(agree == 1, axis=2) | np.all(agree == -1, axis=2)
        nonzero = np.all(A > tol.zero_tol * A.max(axis=(1, 2))[:, None, None], axis=(1, 2))
        balanced = nonzero & np.all(X[:, diag, diag] > 0, axis=1) & np.all(rows_ok, axis=1)
        last_unbalanced[~balanced] = t

    observe(0)
    for t in range(1, cfg.horizon_check_end + 1):
        X_next, failed = batch_step(X, model, tol)
        newly = failed & alive
        alive &= ~failed
        if newly.any():
            # freeze failed members on a harmless state; they are scored Z=0
            X_next[newly] = np.eye(n)
        X_next[~alive] = np.eye(n)
        X = X_next
        observe(t)
    Z = alive & (window_min >= cfg.floor)
    balance_time = np.where(alive & (last_unbalanced < cfg.horizon_check_end), last_unbalanced + 1, -1)
    return Z.astype(np.int64), balance_time


def non_vanishing_indicator(X0, model: ModelKind, cfg: McConfig, tol: ToleranceConfig = DEFAULT_TOL):
    """``(Z, balance_time)`` for one initial condition.

    ``Z = 1`` iff ``min_abs(X(t)) >= floor`` for every t in the check window;
    a vanished row before the window ends gives ``Z = 0``.
    """
    X0 = as_appraisal(X0)
    Z, bt = _run_indicator_batch(X0[None], model, cfg, tol)
    return int(Z[0]), (None if bt[0] < 0 else int(bt[0]))


def mc_convergence_probability(cfg: McConfig, tol: ToleranceConfig = DEFAULT_TOL, keep_trials: bool = False) -> McResult:
    Z_all, records = [], []
    for start in range(0, cfg.trials, cfg.batch_size):
        idx = range(start, min(cfg.trials, start + cfg.batch_size))
        seeds = [trial_seed(cfg.master_seed, i) for i in idx]
        X0 = np.stack([cfg.init.draw(cfg.n, np.random.Generator(np.random.PCG64(s)), tol) for s in seeds])
        Z, bt = _run_indicator_batch(X0, cfg.model, cfg, tol)
        Z_all.append(Z)
        if keep_trials:
            records += [(i, s, int(z), None if b < 0 else int(b)) for i, s, z, b in zip(idx, seeds, Z, bt)]
    return McResult.from_indicators(np.concatenate(Z_all), records if keep_trials else None, cfg.to_record())


# ---------------------------------------------------------------- scenarios


def build_block_balanced(blocks) -> np.ndarray:
    """Block-diagonal matrix with blocks ``alpha * b b^T`` from ``[(b, alpha), ...]``."""
    mats = []
    for b, alpha in blocks:
        b = np.asarray(b, dtype=np.float64).ravel()
        if b.size < 1:
            raise ParameterOutOfRange("blocks must have at least one node")
        if not alpha > 0:
            raise ParameterOutOfRange("block magnitude must be positive")
        mats.append(alpha * np.outer(np.sign(b), np.sign(b)))
    n = sum(m.shape[0] for m in mats)
    X = np.zeros((n, n))
    k = 0
    for m in mats:
        s = m.shape[0]
        X[k:k + s, k:k + s] = m
        k += s
    return X


def apply_single_link(X, i: int, j: int, eta: float, bilateral: bool = False) -> np.ndarray:
    X = as_appraisal(X).copy()
    n = X.shape[0]
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"link ({i}, {j}) outside a {n}-node network")
    if i == j:
        raise ParameterOutOfRange("a link needs two distinct nodes")
    if eta == 0:
        return X
    X[i, j] = eta
    if bilateral:
        X[j, i] = eta
    return X


def random_two_faction_base(rng: np.random.Generator, max_n: int = 12, alpha_range=(0.5, 2.0)):
    """Two isolated balanced subgraphs, each split into two hostile factions.

    Returns ``(X, groups)`` where ``groups`` lists the index arrays of V1..V4
    (V1, V2 in subgraph 1; V3, V4 in subgraph 2).
    """
    if max_n < 4:
        raise ParameterOutOfRange("need at least 4 nodes")
    while True:
        sizes = rng.integers(1, max_n - 2, size=4)
        if sizes.sum() <= max_n:
            break
    n1, n2, n3, n4 = (int(s) for s in sizes)
    a1, a2 = rng.uniform(*alpha_range, size=2)
    b1 = np.r_[np.ones(n1), -np.ones(n2)]
    b2 = np.r_[np.ones(n3), -np.ones(n4)]
    X = build_block_balanced([(b1, a1), (b2, a2)])
    edges = np.cumsum([0, n1, n2, n3, n4])
    groups = [np.arange(edges[k], edges[k + 1]) for k in range(4)]
    return X, groups


def single_link_trial(rng: np.random.Generator, sign: int, max_n: int = 12,
                      cfg: SimConfig = SimConfig(max_steps=20_000), tol: ToleranceConfig = DEFAULT_TOL) -> dict:
    """Add one link of random magnitude in [0.01, 1] from V1 to V3 and simulate.

    Reports whether the final network is a single balanced clique whose two
    factions are the predicted unions.
    """
    X, groups = random_two_faction_base(rng, max_n)
    V1, V2, V3, V4 = groups
    i, j = int(rng.choice(V1)), int(rng.choice(V3))
    eta = sign * rng.uniform(0.01, 1.0)
    traj = simulate(apply_single_link(X, i, j, eta), HBM, cfg, tol)
    final = traj.final
    report = is_socially_balanced(final, tol)
    if eta > 0:
        expected = (np.r_[V1, V3], np.r_[V2, V4])
    else:
        expected = (np.r_[V1, V4], np.r_[V2, V3])
    ok = False
    if report.balanced:
        f = report.factions.faction_of
        a, b = expected
        ok = len(set(f[a])) == 1 and len(set(f[b])) == 1 and f[a[0]] != f[b[0]]
    return {
        "sizes": [len(g) for g in groups],
        "link": (i, j),
        "eta": float(eta),
        "balanced": report.balanced,
        "matches_prediction": bool(ok),
        "steps": traj.steps,
        "stop_reason": traj.stop_reason,
    }


@dataclass(frozen=True)
class AllyPredictions:
    v1_gains_ally: bool
    v2_gains_ally: bool
    v1_allies_v3: bool
    v2_allies_v3: bool
    v3_gains_ally: bool
    all_friendly: bool


def ally_competition_scenario(n1: int, n2: int, n3: int, alpha: float, alpha_hat: float, eps1: float, eps2: float):
    """Build the two-subgraph ally-competition network and evaluate the inequality predictions.

    Subgraph 1 holds hostile factions V1, V2 with strength ``alpha``; subgraph
    2 is one faction V3 with strength ``alpha_hat``; every V1-V3 pair gets a
    bilateral link ``eps1`` and every V2-V3 pair a link ``eps2``.
    """
    if min(n1, n2, n3) < 1:
        raise ParameterOutOfRange("group sizes must be positive")
    if min(alpha, alpha_hat, eps1, eps2) <= 0:
        raise ParameterOutOfRange("alpha, alpha_hat, eps1, eps2 must be positive")
    n = n1 + n2 + n3
    b = np.r_[np.ones(n1), -np.ones(n2)]
    X = np.zeros((n, n))
    X[: n1 + n2, : n1 + n2] = alpha * np.outer(b, b)
    X[n1 + n2:, n1 + n2:] = alpha_hat
    X[:n1, n1 + n2:] = eps1
    X[n1 + n2:, :n1] = eps1
    X[n1:n1 + n2, n1 + n2:] = eps2
    X[n1 + n2:, n1:n1 + n2] = eps2

    e1, e2 = eps1 * n1, eps2 * n2
    mediation = eps1 * eps2 * n3
    conflict = alpha**2 * (n1 + n2)
    v1_allies = e1 - e2 >= alpha_hat * eps2 * n3 / alpha and mediation <= conflict
    v2_allies = e2 - e1 >= alpha_hat * eps1 * n3 / alpha and mediation <= conflict
    all_friendly = mediation >= conflict and (
        math.isclose(e1, e2, rel_tol=1e-12)
        or 0 < e1 - e2 <= eps2 * alpha_hat * n3
        or 0 < e2 - e1 <= eps1 * alpha_hat * n3
    )
    preds = AllyPredictions(
        v1_gains_ally=e1 > e2,
        v2_gains_ally=e2 > e1,
        v1_allies_v3=bool(v1_allies),
        v2_allies_v3=bool(v2_allies),
        v3_gains_ally=mediation <= conflict,
        all_friendly=bool(all_friendly),
    )
    groups = (np.arange(n1), np.arange(n1, n1 + n2), np.arange(n1 + n2, n))
    return X, preds, groups


def ally_outcome(final, groups, tol: ToleranceConfig = DEFAULT_TOL) -> dict:
    """Summarize group relations in a final state by the sign of representative appraisals."""
    final = as_appraisal(final)
    V1, V2, V3 = groups
    thr = tol.zero_tol * np.max(np.abs(final))

    def friendly(a, b):
        return bool(np.all(final[np.ix_(a, b)] > thr) and np.all(final[np.ix_(b, a)] > thr))

    return {
        "balanced": is_socially_balanced(final, tol).balanced,
        "v1_v3_friendly": friendly(V1, V3),
        "v2_v3_friendly": friendly(V2, V3),
        "v1_v2_friendly": friendly(V1, V2),
        "no_negative": bool(np.all(final >= -thr)),
        "min_entry": float(final.min()),
    }


# -------------------------------------------------------------- faction sweep


@dataclass(frozen=True)
class SweepGrid:
    n_values: tuple = (4, 8, 16, 32)
    ave_values: tuple = (0.0, 0.25, 0.5, 0.75, 1.0)
    samples_per_cell: int = 30
    horizon: int = 500
    width: float = 2.0
    master_seed: int = 0

    def __post_init__(self):
        if any(a < 0 for a in self.ave_values):
            raise ParameterOutOfRange("ave values must be non-negative")
        if self.samples_per_cell < 1 or self.horizon < 1:
            raise ParameterOutOfRange("samples_per_cell and horizon must be positive")
        if not self.width > 0:
            raise ParameterOutOfRange("interval width must be positive")


def faction_sweep(grid: SweepGrid, tol: ToleranceConfig = DEFAULT_TOL) -> list:
    """Count factions at ``t = horizon`` of homophily runs from uniform initial appraisals.

    One record per (n, ave) cell.  ``classification`` is ``AllTwoFactions``,
    ``AllOneFaction`` or ``Mixed``; samples not balanced at the horizon are
    counted under ``indeterminate``.
    """
    records = []
    cell = 0
    for n in grid.n_values:
        for ave in grid.ave_values:
            x_min, x_max = ave - grid.width / 2, ave + grid.width / 2
            X0 = np.stack([
                gen_uniform_interval(n, x_min, x_max, trial_rng(grid.master_seed, cell * grid.samples_per_cell + s))
                for s in range(grid.samples_per_cell)
            ])
            X = X0
            failed_any = np.zeros(len(X0), dtype=bool)
            for _ in range(grid.horizon):
                X, failed = batch_step(X, HBM, tol)
                failed_any |= failed
            counts = {"one": 0, "two": 0, "indeterminate": 0}
            for k in range(len(X)):
                c = None if failed_any[k] else faction_count(X[k], tol)
                if c == [1]:
                    counts["one"] += 1
                elif c == [2]:
                    counts["two"] += 1
                else:
                    counts["indeterminate"] += 1
            total = grid.samples_per_cell
            if counts["two"] == total:
                label = "AllTwoFactions"
            elif counts["one"] == total:
                label = "AllOneFaction"
            else:
                label = "Mixed"
            records.append({
                "n": int(n), "ave": float(ave), "x_min": float(x_min), "x_max": float(x_max),
                "samples": total, "one_faction": counts["one"], "two_factions": counts["two"],
                "indeterminate": counts["indeterminate"], "two_faction_fraction": counts["two"] / total,
                "classification": label,
            })
            cell += 1
    return records

