"""Column-average variance estimates forming the diagonal correction.

Two estimators are provided: the family-based one (column averages of the
per-observation transform v(.)) and a residual-variance estimator for Normal
data with unknown per-row variances, which fills the diagonal with a single
pooled value.  ``dk_error`` is the max-abs diagnostic against a known truth.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateTailError,
    InvalidParameterError,
    LengthMismatchError,
    SupportViolationError,
)
from .matrix_core import as_values, sym_eigen
from .nef_qvf import Family, data_support_mask, v_value

_MAX_REPORTED_VIOLATIONS = 20


@dataclass(frozen=True)
class VarianceEstimate:
    """The n diagonal entries of the correction plus the producing method.

    ``negative_flag`` records whether any raw entry came out negative, which
    cannot happen for in-support data and signals a modeling error upstream.
    """

    deltas: np.ndarray
    method: str
    negative_flag: bool = False

    def __post_init__(self):
        arr = np.asarray(self.deltas, dtype=float).reshape(-1)
        if arr.size == 0 or not np.isfinite(arr).all():
            raise InvalidParameterError("deltas must be a finite nonempty vector")
        object.__setattr__(self, "deltas", arr)

    @property
    def n(self) -> int:
        return self.deltas.shape[0]


def known_unit(n: int) -> VarianceEstimate:
    """All-ones diagonal for unit-variance Normal data."""
    return VarianceEstimate(np.ones(int(n)), method="known-unit")


def explicit(deltas) -> VarianceEstimate:
    """Wrap user-supplied diagonal entries."""
    return VarianceEstimate(np.asarray(deltas, dtype=float), method="explicit")


def estimate_dk_qvf(y, f: Family) -> VarianceEstimate:
    """Column averages of v(y), one per sample column.

    Raises SupportViolationError (listing offending positions) if any entry
    is outside the family support; no silent clamping is done because a
    negative variance estimate always indicates a wrong family choice.

    Column sums are accumulated over sorted values, so the result is exactly
    invariant under row permutations of the input.
    """
    arr = as_values(y)
    ok = data_support_mask(f, arr)
    if not ok.all():
        bad = np.argwhere(~ok)
        locs = [tuple(int(v) for v in row) for row in bad[:_MAX_REPORTED_VIOLATIONS]]
        raise SupportViolationError(
            f"{bad.shape[0]} entries outside the {f.kind} support, "
            f"first at (row, col) {locs[0]}",
            locations=locs,
        )
    k = arr.shape[0]
    vals = v_value(f, arr)
    deltas = np.sort(vals, axis=0).sum(axis=0) / float(k)
    return VarianceEstimate(
        deltas,
        method=f"qvf:{f.kind}",
        negative_flag=bool((deltas < 0).any()),
    )


def estimate_dk_leek(y, t: int) -> VarianceEstimate:
    """Pooled residual-variance estimate for Normal data, unknown row variances.

    With singular values a_1 >= ... >= a_n of Y, the pooled estimate is
    sigma^2 = (sum of a_j^2 for j = t..n) / (k * (n - t)), and every diagonal
    entry is set to it.  Meaningful use needs t larger than the true rank.
    """
    arr = as_values(y)
    k, n = arr.shape
    t = int(t)
    if t < 1 or t > n:
        raise InvalidParameterError(f"t must be in [1, n={n}], got {t}")
    if t == n:
        raise DegenerateTailError("t = n leaves an empty residual sum")
    gram = arr.T @ arr
    gram = np.triu(gram) + np.triu(gram, 1).T
    eig = sym_eigen(gram)
    sq = np.clip(eig.eigenvalues, 0.0, None)
    sigma2 = float(np.sum(sq[t - 1:])) / (k * (n - t))
    return VarianceEstimate(
        np.full(n, sigma2), method=f"leek:t={t}"
    )


def dk_error(est: VarianceEstimate, truth) -> float:
    """Max absolute componentwise gap between estimate and truth."""
    tr = np.asarray(truth, dtype=float).reshape(-1)
    if tr.shape[0] != est.n:
        raise LengthMismatchError(
            f"length mismatch: estimate {est.n}, truth {tr.shape[0]}"
        )
    return float(np.max(np.abs(est.deltas - tr)))
