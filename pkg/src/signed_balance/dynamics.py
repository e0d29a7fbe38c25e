"""Discrete-time appraisal dynamics.

Three update maps share the same row normalization ``diag(|X| 1)^-1``:

* homophily (``hbm``): ``X+ = diag(|X| 1)^-1 X X^T``
* influence (``ibm``): ``X+ = diag(|X| 1)^-1 X X``
* homophily with memory: ``X+ = eps * hbm(X) + (1 - eps) * X``

The maps are undefined when a row of ``X`` vanishes.  Numerically a row is
treated as vanished when its 1-norm is at most ``zero_tol * max_norm(X)``.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .core import DEFAULT_TOL, ToleranceConfig, as_appraisal, is_rs_symm_pos

logger = logging.getLogger(__name__)

__all__ = [
    "Variant",
    "ModelKind",
    "HBM",
    "IBM",
    "ZeroRowEncountered",
    "EpsilonOutOfRange",
    "ZeroEntry",
    "DomainWarning",
    "hbm_step",
    "ibm_step",
    "hbm_memory_step",
    "step",
    "batch_step",
    "SimConfig",
    "StepSummary",
    "Trajectory",
    "simulate",
    "max_norm_monotone_check",
    "contraction_rate_bound_hbm",
    "contraction_rate_bound_ibm",
    "column_spread",
]


class Variant(str, Enum):
    HBM = "hbm"
    IBM = "ibm"
    HBM_MEMORY = "hbm-memory"


class ZeroRowEncountered(ArithmeticError):
    """The update map is undefined because row ``row`` of the state vanished."""

    def __init__(self, row: int, t: int | None = None):
        self.row = int(row)
        self.t = t
        where = "" if t is None else f" at t={t}"
        super().__init__(f"row {self.row} vanished{where}; update map undefined")


class EpsilonOutOfRange(ValueError):
    pass


class ZeroEntry(ValueError):
    pass


class DomainWarning(UserWarning):
    """Influence dynamics run from outside their invariant domain."""


@dataclass(frozen=True)
class ModelKind:
    variant: Variant
    epsilon: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if self.variant is Variant.HBM_MEMORY:
            if self.epsilon is None or not (0 < self.epsilon <= 1):
                raise EpsilonOutOfRange(f"epsilon must lie in (0, 1], got {self.epsilon!r}")
        elif self.epsilon is not None:
            raise ValueError("epsilon is only meaningful for the memory variant")

    @classmethod
    def parse(cls, name: str, epsilon: float | None = None) -> "ModelKind":
        name = name.lower()
        if name in ("hbm-memory", "memory", "hbm_memory"):
            return cls(Variant.HBM_MEMORY, 1.0 if epsilon is None else epsilon)
        return cls(Variant(name))

    def __str__(self):
        if self.variant is Variant.HBM_MEMORY:
            return f"{self.variant.value}({self.epsilon:g})"
        return self.variant.value


HBM = ModelKind(Variant.HBM)
IBM = ModelKind(Variant.IBM)


def _raw_step(X: np.ndarray, variant: Variant, zero_tol: float):
    """Apply a map to a stack of matrices ``(..., n, n)``.

    Returns the next stack and a boolean mask ``(..., n)`` of vanished rows.
    Rows flagged as vanished are left as zeros in the output.
    """
    Xt = np.swapaxes(X, -1, -2)
    product = X @ Xt if variant is not Variant.IBM else X @ X
    row_l1 = np.abs(X).sum(axis=-1)
    scale = np.abs(X).max(axis=(-1, -2))
    vanished = (row_l1 <= zero_tol * scale[..., None]) | (scale[..., None] == 0)
    safe = np.where(vanished, 1.0, row_l1)
    out = product / safe[..., None]
    out[vanished] = 0.0
    return out, vanished


def batch_step(X: np.ndarray, model: ModelKind, tol: ToleranceConfig = DEFAULT_TOL):
    """Vectorized step over a stack ``(m, n, n)``.

    Returns ``(next, failed)`` where ``failed`` marks stack members that had a
    vanished row; their ``next`` entries are meaningless.
    """
    out, vanished = _raw_step(X, model.variant, tol.zero_tol)
    if model.variant is Variant.HBM_MEMORY:
        out = model.epsilon * out + (1.0 - model.epsilon) * X
    return out, vanished.any(axis=-1)


def _single(X, variant: Variant, tol: ToleranceConfig) -> np.ndarray:
    X = as_appraisal(X)
    out, vanished = _raw_step(X, variant, tol.zero_tol)
    if vanished.any():
        raise ZeroRowEncountered(int(np.flatnonzero(vanished)[0]))
    return out


def hbm_step(X, tol: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    """One homophily update; raises ZeroRowEncountered on a vanished row."""
    return _single(X, Variant.HBM, tol)


def ibm_step(X, tol: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    """One influence update; raises ZeroRowEncountered on a vanished row."""
    return _single(X, Variant.IBM, tol)


def hbm_memory_step(X, epsilon: float, tol: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    if not (0 < epsilon <= 1):
        raise EpsilonOutOfRange(f"epsilon must lie in (0, 1], got {epsilon!r}")
    X = as_appraisal(X)
    return epsilon * hbm_step(X, tol) + (1.0 - epsilon) * X


def step(X, model: ModelKind, tol: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    if model.variant is Variant.HBM:
        return hbm_step(X, tol)
    if model.variant is Variant.IBM:
        return ibm_step(X, tol)
    return hbm_memory_step(X, model.epsilon, tol)


@dataclass(frozen=True)
class SimConfig:
    max_steps: int = 10_000
    convergence_tol: float = 1e-12
    record_every: int = 1
    balance_check: bool = True

    def __post_init__(self):
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        if self.convergence_tol < 0:
            raise ValueError("convergence_tol must be non-negative")


@dataclass(frozen=True)
class StepSummary:
    t: int
    max_norm: float
    min_abs: float
    balanced: bool
    sign_changed: bool


@dataclass
class Trajectory:
    """Record of one simulation.

    ``states`` holds every ``record_every``-th state plus the last one, with
    their times in ``state_times``; ``summaries`` has one entry per step.
    """

    model: ModelKind
    states: list = field(default_factory=list)
    state_times: list = field(default_factory=list)
    summaries: list = field(default_factory=list)
    stop_reason: str = "BudgetExhausted"
    balance_time: int | None = None
    failed_row: int | None = None
    domain_warning: bool = False

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    @property
    def steps(self) -> int:
        return self.summaries[-1].t

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(s, name) for s in self.summaries])


def _balanced_fast(X: np.ndarray, tol: ToleranceConfig) -> bool:
    # all entries nonzero, positive diagonal, every row sign pattern = +/- row 0
    thr = tol.zero_tol * np.max(np.abs(X))
    if np.any(np.abs(X) <= thr) or np.any(np.diag(X) <= 0):
        return False
    S = np.sign(X)
    agree = S * S[0]
    return bool(np.all(np.all(agree == 1, axis=1) | np.all(agree == -1, axis=1)))


def simulate(
    X0,
    model: ModelKind = HBM,
    cfg: SimConfig = SimConfig(),
    tol: ToleranceConfig = DEFAULT_TOL,
) -> Trajectory:
    """Iterate ``model`` from ``X0`` until convergence, failure or budget.

    Convergence means ``max_norm(X(t+1) - X(t)) <= convergence_tol * max_norm(X0)``.
    """
    X = as_appraisal(X0).copy()
    traj = Trajectory(model=model)
    if model.variant is Variant.IBM and not is_rs_symm_pos(X, tol):
        traj.domain_warning = True
        warnings.warn("influence dynamics started outside the rs-symmetric domain", DomainWarning, stacklevel=2)
    ref = cfg.convergence_tol * float(np.max(np.abs(X)))

    def summarize(t, X, prev_signs):
        absX = np.abs(X)
        signs = np.where(absX <= tol.zero_tol * absX.max(), 0, np.sign(X))
        changed = prev_signs is not None and not np.array_equal(signs, prev_signs)
        balanced = _balanced_fast(X, tol) if cfg.balance_check else False
        traj.summaries.append(StepSummary(t, float(absX.max()), float(absX.min()), balanced, changed))
        return signs

    signs = summarize(0, X, None)
    traj.states.append(X.copy())
    traj.state_times.append(0)
    for t in range(1, cfg.max_steps + 1):
        try:
            X_next = step(X, model, tol)
        except ZeroRowEncountered as exc:
            traj.stop_reason = "ZeroRowEncountered"
            traj.failed_row = exc.row
            logger.debug("zero row %d while stepping from t=%d", exc.row, t - 1)
            break
        diff = float(np.max(np.abs(X_next - X)))
        X = X_next
        signs = summarize(t, X, signs)
        if t % cfg.record_every == 0:
            traj.states.append(X.copy())
            traj.state_times.append(t)
        if diff <= ref:
            traj.stop_reason = "Converged"
            break
    if traj.state_times[-1] != traj.summaries[-1].t:
        traj.states.append(X.copy())
        traj.state_times.append(traj.summaries[-1].t)
    if cfg.balance_check:
        traj.balance_time = _final_balanced_run_start(traj.summaries)
    return traj


def _final_balanced_run_start(summaries) -> int | None:
    if not summaries or not summaries[-1].balanced:
        return None
    t0 = summaries[-1].t
    for s in reversed(summaries):
        if not s.balanced:
            break
        t0 = s.t
    return t0


def max_norm_monotone_check(traj: Trajectory, tol: ToleranceConfig = DEFAULT_TOL) -> bool:
    m = traj.column("max_norm")
    if m.size < 2:
        return True
    return bool(np.all(m[1:] <= m[:-1] * (1 + tol.rel_tol) + tol.abs_tol))


def _bound_inputs(X):
    X = as_appraisal(X)
    lo, hi = float(np.min(np.abs(X))), float(np.max(np.abs(X)))
    if lo == 0:
        raise ZeroEntry("contraction bound needs every entry nonzero")
    return X.shape[0], lo, hi


def contraction_rate_bound_hbm(X) -> float:
    """Two-step factor bounding the decay of ``max_norm - min_abs`` once balanced."""
    n, lo, hi = _bound_inputs(X)
    return 1.0 - lo**2 / (n**2 * hi**2)


def contraction_rate_bound_ibm(X) -> float:
    """One-step factor bounding the decay of every column's magnitude spread once balanced."""
    n, lo, hi = _bound_inputs(X)
    return 1.0 - lo / (n * hi)


def column_spread(X) -> np.ndarray:
    """``max_l |X_lj| - min_l |X_lj|`` for each column j."""
    A = np.abs(as_appraisal(X))
    return A.max(axis=0) - A.min(axis=0)
