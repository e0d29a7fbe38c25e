"""Structural balance checks, isolated components and fixed-point classification."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import connected_components

from .core import DEFAULT_TOL, ToleranceConfig, as_appraisal, zero_threshold

__all__ = [
    "BalanceReport",
    "FactionPartition",
    "FixedPointClass",
    "is_socially_balanced",
    "isolated_components",
    "is_balanced_multi",
    "classify_q_hbm",
    "classify_q_ibm",
    "faction_count",
    "sufficient_condition_nonvanishing",
]

TRIAD = "TriadS1S2"
ROW_SIGN = "RowSignS1S3"


@dataclass
class FactionPartition:
    """Component ids per node and, when known, a faction label (0 or 1) within each component.

    Faction 0 is the faction of the lowest-indexed node of the component.
    """

    component_of: np.ndarray
    faction_of: np.ndarray | None = None

    @property
    def n_components(self) -> int:
        return int(self.component_of.max()) + 1 if self.component_of.size else 0

    def members(self, component: int) -> np.ndarray:
        return np.flatnonzero(self.component_of == component)

    def same_faction(self, i: int, j: int) -> bool:
        if self.faction_of is None:
            raise ValueError("faction labels unavailable")
        return bool(self.component_of[i] == self.component_of[j] and self.faction_of[i] == self.faction_of[j])


@dataclass
class BalanceReport:
    balanced: bool
    method: str
    violations: list = field(default_factory=list)
    factions: FactionPartition | None = None

    def to_record(self) -> dict:
        rec = {
            "balanced": self.balanced,
            "method": self.method,
            "n_violations": len(self.violations),
            "violations": [list(v) for v in self.violations[:20]],
        }
        if self.factions is not None:
            rec["component_of"] = self.factions.component_of.tolist()
            if self.factions.faction_of is not None:
                rec["faction_of"] = self.factions.faction_of.tolist()
        return rec


@dataclass
class FixedPointClass:
    """Result of matching a matrix against a block fixed-point family.

    ``params`` holds one dict per block: ``{"alpha", "b"}`` for the homophily
    family, ``{"w"}`` for the influence family.
    """

    member: bool
    blocks: list
    params: list
    residual: float
    rank_one: bool

    def to_record(self) -> dict:
        def clean(p):
            return {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in p.items()}

        return {
            "member": self.member,
            "n_blocks": len(self.blocks),
            "blocks": [b.tolist() for b in self.blocks],
            "params": [clean(p) for p in self.params],
            "residual": self.residual,
            "rank_one": self.rank_one,
        }


def _labels_from_reference(S: np.ndarray) -> np.ndarray:
    # faction 0 = nodes appraised positively by node 0 of the block
    return np.where(S[0] > 0, 0, 1).astype(np.int64)


def is_socially_balanced(X, tol: ToleranceConfig = DEFAULT_TOL, method: str = ROW_SIGN) -> BalanceReport:
    """Check balance of a complete signed network.

    Zero entries are reported as ``("zero", i, j)`` violations.  The row
    method reports ``("diag", i)`` and ``("row", 0, j)``; the triad method
    reports ``("diag", i)`` and ``("triad", i, j, k)`` with sorted indices.
    """
    X = as_appraisal(X)
    n = X.shape[0]
    thr = zero_threshold(X, tol)
    S = np.where(np.abs(X) <= thr, 0, np.sign(X)).astype(np.int8)
    violations: list = [("zero", int(i), int(j)) for i, j in zip(*np.nonzero(S == 0))]
    violations += [("diag", int(i)) for i in np.flatnonzero(np.diag(S) <= 0)]

    if method == ROW_SIGN:
        agree = S * S[0]
        ok = np.all(agree == 1, axis=1) | np.all(agree == -1, axis=1)
        violations += [("row", 0, int(j)) for j in np.flatnonzero(~ok)]
    elif method == TRIAD:
        prod = np.einsum("ij,jk,ki->ijk", S, S, S)
        seen = set()
        for i, j, k in zip(*np.nonzero(prod != 1)):
            key = tuple(sorted((int(i), int(j), int(k))))
            if key not in seen:
                seen.add(key)
                violations.append(("triad",) + key)
    else:
        raise ValueError(f"unknown balance method {method!r}")

    balanced = not violations
    factions = None
    if balanced:
        factions = FactionPartition(np.zeros(n, dtype=np.int64), _labels_from_reference(S))
    return BalanceReport(balanced, method, violations, factions)


def isolated_components(X, tol: ToleranceConfig = DEFAULT_TOL) -> FactionPartition:
    """Connected components of the undirected graph of nonzero appraisals."""
    X = as_appraisal(X)
    adj = np.abs(X) > zero_threshold(X, tol)
    _, labels = connected_components(adj | adj.T, directed=False)
    # relabel so component ids follow first appearance
    _, first = np.unique(labels, return_index=True)
    order = np.argsort(first)
    remap = np.empty_like(order)
    remap[order] = np.arange(order.size)
    return FactionPartition(remap[labels].astype(np.int64))


def is_balanced_multi(X, tol: ToleranceConfig = DEFAULT_TOL) -> BalanceReport:
    """Balance of a network made of isolated subgraphs, each of which must be complete and balanced.

    Violation indices refer to the full matrix and are prefixed by the component id.
    """
    X = as_appraisal(X)
    part = isolated_components(X, tol)
    faction_of = np.zeros(X.shape[0], dtype=np.int64)
    violations = []
    # the zero rule is applied against the whole matrix's scale
    thr_scale = zero_threshold(X, tol)
    for c in range(part.n_components):
        idx = part.members(c)
        block = X[np.ix_(idx, idx)]
        sub = np.where(np.abs(block) <= thr_scale, 0.0, block)
        report = is_socially_balanced(sub, ToleranceConfig(0.0, tol.rel_tol, tol.abs_tol))
        if report.balanced:
            faction_of[idx] = report.factions.faction_of
        for v in report.violations:
            violations.append((c, v[0]) + tuple(int(idx[k]) for k in v[1:]))
    balanced = not violations
    return BalanceReport(balanced, ROW_SIGN, violations, FactionPartition(part.component_of, faction_of if balanced else None))


def _classify(X, tol, fit_block):
    X = as_appraisal(X)
    part = isolated_components(X, tol)
    recon = np.zeros_like(X)
    blocks, params = [], []
    valid = True
    for c in range(part.n_components):
        idx = part.members(c)
        block = X[np.ix_(idx, idx)]
        model, p, ok = fit_block(block)
        recon[np.ix_(idx, idx)] = model
        blocks.append(idx)
        params.append(p)
        valid &= ok
    residual = float(np.max(np.abs(X - recon)))
    scale = float(np.max(np.abs(X)))
    member = bool(valid and np.all(np.diag(X) > 0) and residual <= tol.rel_tol * scale + tol.abs_tol)
    return FixedPointClass(member, blocks, params, residual, len(blocks) == 1)


def _fit_hbm_block(block):
    b = np.where(block[0] >= 0, 1.0, -1.0)
    alpha = float(np.mean(np.abs(block)))
    return alpha * np.outer(b, b), {"alpha": alpha, "b": b.astype(np.int64)}, alpha > 0


def _fit_ibm_block(block):
    signs = np.where(block[0] >= 0, 1.0, -1.0)
    w = signs * np.mean(np.abs(block), axis=0)
    return np.outer(np.sign(w), w), {"w": w}, bool(np.all(np.abs(w) > 0))


def classify_q_hbm(X, tol: ToleranceConfig = DEFAULT_TOL) -> FixedPointClass:
    """Match ``X`` against permuted block-diagonal matrices with blocks ``alpha * b b^T``.

    Blocks are the isolated components; each is fitted with alpha equal to the
    mean magnitude and ``b`` the sign of the block's first row, and membership
    is decided by the max-norm residual to the reconstruction.
    """
    return _classify(X, tol, _fit_hbm_block)


def classify_q_ibm(X, tol: ToleranceConfig = DEFAULT_TOL) -> FixedPointClass:
    """Match ``X`` against permuted block-diagonal matrices with blocks ``sign(w) w^T``.

    ``|w_k|`` is the mean magnitude of column k within the block and its sign
    comes from the block's first row (whose diagonal entry is positive).
    """
    return _classify(X, tol, _fit_ibm_block)


def faction_count(X, tol: ToleranceConfig = DEFAULT_TOL) -> list:
    """Faction count (1 or 2) per isolated component, or None where the component is unbalanced."""
    X = as_appraisal(X)
    part = isolated_components(X, tol)
    thr = zero_threshold(X, tol)
    counts = []
    for c in range(part.n_components):
        idx = part.members(c)
        block = X[np.ix_(idx, idx)]
        sub = np.where(np.abs(block) <= thr, 0.0, block)
        report = is_socially_balanced(sub, ToleranceConfig(0.0, tol.rel_tol, tol.abs_tol))
        if not report.balanced:
            counts.append(None)
        else:
            counts.append(1 if np.all(sub > 0) else 2)
    return counts


def sufficient_condition_nonvanishing(X, order: int = 1) -> bool:
    """Sufficient test for the appraisals to stay bounded away from zero.

    With ``G = X X^T`` (order 1) or ``G = (X X^T)^2`` (order 2), checks
    ``G_i1 * G_1j * G_ij > 0`` for every pair; order 1 says that one homophily
    step produces a balanced network, order 2 says two steps do.
    """
    X = as_appraisal(X)
    G = X @ X.T
    if order == 2:
        G = G @ G
    elif order != 1:
        raise ValueError("order must be 1 or 2")
    prod = G[:, [0]] * G[[0], :] * G
    return bool(np.all(prod > 0))
