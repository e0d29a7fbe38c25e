"""Appraisal matrices: norms, sign patterns and domain membership tests.

An appraisal matrix is a dense ``n x n`` float64 array; ``X[i, j]`` is agent
i's signed appraisal of agent j.  Functions here accept anything
``np.asarray`` understands and validate it with :func:`as_appraisal`.

Zero classification is scale-free: an entry counts as zero when
``|X_ij| <= zero_tol * max_norm(X)``.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DimensionError",
    "NonPositiveScale",
    "ToleranceConfig",
    "DEFAULT_TOL",
    "as_appraisal",
    "max_norm",
    "min_abs",
    "zero_threshold",
    "sign_pattern",
    "is_nz_row",
    "is_s_symm_pos",
    "find_gamma",
    "is_rs_symm_pos",
    "scale",
]


class DimensionError(ValueError):
    """Raised when an appraisal matrix is not a non-empty square array."""


class NonPositiveScale(ValueError):
    pass


@dataclass(frozen=True)
class ToleranceConfig:
    """Numerical tolerances shared by every module.

    zero_tol is relative to ``max_norm(X)``; rel_tol bounds magnitude
    equality and residual tests; abs_tol is an absolute floor for residuals.
    """

    zero_tol: float = 1e-9
    rel_tol: float = 1e-6
    abs_tol: float = 1e-12

    def __post_init__(self):
        for name in ("zero_tol", "rel_tol", "abs_tol"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be a finite non-negative number, got {value!r}")


DEFAULT_TOL = ToleranceConfig()


def as_appraisal(X) -> np.ndarray:
    """Return ``X`` as a validated float64 square matrix."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != X.shape[1] or X.shape[0] < 1:
        raise DimensionError(f"appraisal matrix must be square with n >= 1, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("appraisal matrix contains NaN or infinite entries")
    return X


def max_norm(X) -> float:
    return float(np.max(np.abs(as_appraisal(X))))


def min_abs(X) -> float:
    return float(np.min(np.abs(as_appraisal(X))))


def zero_threshold(X, tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """Absolute magnitude at or below which entries of ``X`` count as zero."""
    return tol.zero_tol * float(np.max(np.abs(X)))


def sign_pattern(X, tol: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    """Entrywise sign in {-1, 0, +1} as an int8 array, with near-zeros mapped to 0."""
    X = as_appraisal(X)
    signs = np.sign(X).astype(np.int8)
    signs[np.abs(X) <= zero_threshold(X, tol)] = 0
    return signs


def is_nz_row(X, tol: ToleranceConfig = DEFAULT_TOL) -> bool:
    X = as_appraisal(X)
    nonzero = np.abs(X) > zero_threshold(X, tol)
    return bool(np.all(nonzero.any(axis=1)))


def is_s_symm_pos(X, tol: ToleranceConfig = DEFAULT_TOL) -> bool:
    """Sign-symmetric with a strictly positive diagonal."""
    S = sign_pattern(X, tol)
    return bool(np.array_equal(S, S.T) and np.all(np.diag(S) > 0))


def find_gamma(X, tol: ToleranceConfig = DEFAULT_TOL) -> np.ndarray | None:
    """Find a positive vector ``g`` with ``diag(g) X`` symmetric, or None.

    Ratios ``g_j / g_i = X_ij / X_ji`` are propagated along a BFS spanning
    forest of the graph whose edges are the index pairs with both entries
    nonzero; every non-tree edge is then checked.  Each connected component is
    normalized so its smallest index gets ``g = 1`` (so ``g[0] == 1``).
    """
    X = as_appraisal(X)
    S = sign_pattern(X, tol)
    if not np.array_equal(S, S.T):
        return None
    n = X.shape[0]
    nonzero = S != 0
    gamma = np.zeros(n)
    for root in range(n):
        if gamma[root] > 0:
            continue
        gamma[root] = 1.0
        queue = deque([root])
        while queue:
            i = queue.popleft()
            for j in np.flatnonzero(nonzero[i]):
                if gamma[j] == 0:
                    ratio = X[i, j] / X[j, i]
                    gamma[j] = gamma[i] * ratio
                    queue.append(j)
    if not np.all(np.isfinite(gamma)) or np.any(gamma <= 0):
        return None
    scaled = gamma[:, None] * X
    mismatch = float(np.max(np.abs(scaled - scaled.T)))
    if mismatch > tol.rel_tol * float(np.max(np.abs(scaled))) + tol.abs_tol:
        return None
    return gamma


def is_rs_symm_pos(X, tol: ToleranceConfig = DEFAULT_TOL) -> bool:
    return is_s_symm_pos(X, tol) and find_gamma(X, tol) is not None


def scale(X, c: float) -> np.ndarray:
    if not c > 0:
        raise NonPositiveScale(f"scale factor must be positive, got {c!r}")
    return c * as_appraisal(X)
