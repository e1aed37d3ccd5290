"""Dense real matrix primitives used by the whole pipeline.

Provides the Frobenius norm, the scaled gram matrix of a data matrix, and a
deterministic symmetric eigendecomposition (cyclic Jacobi rotations).  All
computation is in 64-bit floating point and everything downstream reduces to
n x n problems, so no large decompositions are ever needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    InvalidParameterError,
    NoConvergenceError,
    NotSymmetricError,
)

DEFAULT_EIGEN_TOL = 1e-10
MAX_JACOBI_SWEEPS = 100
MAX_EIGEN_DIM = 512


def _as_2d_float(a, name="matrix"):
    """Coerce to a C-ordered float64 2-D array with finite entries."""
    arr = np.ascontiguousarray(np.asarray(a, dtype=float))
    if arr.ndim != 2:
        raise InvalidParameterError(f"{name} must be 2-D, got ndim={arr.ndim}")
    if arr.size and not np.isfinite(arr).all():
        raise InvalidParameterError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class DataMatrix:
    """A k x n observation matrix: rows are variables, columns are samples.

    Invariants: at least one row, at least two columns, all entries finite.
    """

    values: np.ndarray

    def __post_init__(self):
        arr = _as_2d_float(self.values, "data matrix")
        if arr.shape[0] < 1 or arr.shape[1] < 2:
            raise InvalidParameterError(
                f"data matrix must be at least 1 x 2, got {arr.shape}"
            )
        object.__setattr__(self, "values", arr)

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    def entry(self, i: int, j: int) -> float:
        return float(self.values[i, j])

    @classmethod
    def from_array(cls, a) -> "DataMatrix":
        return cls(np.asarray(a, dtype=float))


def as_values(y) -> np.ndarray:
    """Accept a DataMatrix or array-like and return the validated ndarray."""
    if isinstance(y, DataMatrix):
        return y.values
    return DataMatrix.from_array(y).values


def frobenius_norm(a) -> float:
    """Square root of the sum of squared entries.

    Total on any finite array (vector or matrix); no shape restrictions
    beyond finiteness.
    """
    arr = np.asarray(a, dtype=float)
    if arr.size and not np.isfinite(arr).all():
        raise InvalidParameterError("norm input contains non-finite entries")
    return float(np.sqrt(np.sum(arr * arr)))


def gram_scaled(y) -> np.ndarray:
    """Return the n x n matrix (Y^T Y) / k for a k x n data matrix Y.

    The upper triangle is computed and mirrored so the result is exactly
    symmetric bit-for-bit.  The single division by k happens after
    accumulation to keep intermediate sums well-scaled.
    """
    arr = as_values(y)
    k = arr.shape[0]
    g = arr.T @ arr
    g = np.triu(g) + np.triu(g, 1).T
    return g / float(k)


@dataclass(frozen=True)
class SymmetricEigen:
    """Full eigendecomposition of a symmetric matrix.

    ``eigenvalues`` are sorted descending; column i of ``eigenvectors`` pairs
    with ``eigenvalues[i]``.  Each eigenvector is sign-fixed so its entry of
    largest magnitude (lowest index on ties) is nonnegative; exactly equal
    eigenvalues are ordered by the sign-fixed vectors lexicographically.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]


def _fix_sign(v: np.ndarray) -> np.ndarray:
    i = int(np.argmax(np.abs(v)))
    if v[i] < 0.0:
        return -v
    return v


def sym_eigen(a, tol: float = DEFAULT_EIGEN_TOL,
              max_sweeps: int = MAX_JACOBI_SWEEPS) -> SymmetricEigen:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Parameters
    ----------
    a : (n, n) array_like
        Symmetric matrix, n <= 512.  Symmetry is checked relative to the
        Frobenius norm: max |A_ij - A_ji| <= tol * ||A||_F.
    tol : float
        Relative convergence tolerance on the off-diagonal norm.
    max_sweeps : int
        Cap on full (p, q) sweeps.

    Returns
    -------
    SymmetricEigen
        Deterministic: identical input bits give identical output bits.

    Raises
    ------
    NotSymmetricError
        If the symmetry check fails.
    NoConvergenceError
        If the sweep cap is exceeded.
    """
    A = _as_2d_float(a, "matrix").copy()
    n = A.shape[0]
    if A.shape[1] != n:
        raise InvalidParameterError(f"matrix must be square, got {A.shape}")
    if n > MAX_EIGEN_DIM:
        raise InvalidParameterError(
            f"dimension {n} exceeds the configured cap {MAX_EIGEN_DIM}"
        )

    fro = frobenius_norm(A)
    if n > 1:
        asym = float(np.max(np.abs(A - A.T)))
        if asym > tol * max(fro, np.finfo(float).tiny):
            raise NotSymmetricError(
                f"max asymmetry {asym:.3e} exceeds {tol:.1e} * ||A||_F"
            )
    A = (A + A.T) / 2.0

    V = np.eye(n)
    if fro > 0.0 and n > 1:
        # Skipping rotations below this leaves the off-norm within tolerance.
        skip = tol * fro / (n * math.sqrt(2.0))
        converged = False
        for _ in range(max_sweeps):
            # Sum squared off-diagonals directly; the sum(A^2) - sum(diag^2)
            # form cancels catastrophically once off << fro.
            od = A.copy()
            np.fill_diagonal(od, 0.0)
            off2 = float(np.sum(od * od))
            if off2 <= (tol * fro) ** 2:
                converged = True
                break
            for p in range(n - 1):
                for q in range(p + 1, n):
                    apq = A[p, q]
                    if abs(apq) <= skip:
                        continue
                    theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                    t = math.copysign(
                        1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0)),
                        theta if theta != 0.0 else 1.0,
                    )
                    c = 1.0 / math.sqrt(t * t + 1.0)
                    s = t * c
                    app, aqq = A[p, p], A[q, q]
                    col_p = A[:, p].copy()
                    col_q = A[:, q].copy()
                    A[:, p] = c * col_p - s * col_q
                    A[:, q] = s * col_p + c * col_q
                    row_p = A[p, :].copy()
                    row_q = A[q, :].copy()
                    A[p, :] = c * row_p - s * row_q
                    A[q, :] = s * row_p + c * row_q
                    A[p, p] = app - t * apq
                    A[q, q] = aqq + t * apq
                    A[p, q] = 0.0
                    A[q, p] = 0.0
                    v_p = V[:, p].copy()
                    v_q = V[:, q].copy()
                    V[:, p] = c * v_p - s * v_q
                    V[:, q] = s * v_p + c * v_q
        if not converged:
            od = A.copy()
            np.fill_diagonal(od, 0.0)
            off2 = float(np.sum(od * od))
            if off2 > (tol * fro) ** 2:
                raise NoConvergenceError(
                    f"no convergence in {max_sweeps} sweeps "
                    f"(off-norm {math.sqrt(off2):.3e})"
                )

    vals = np.diag(A).copy()
    cols = [_fix_sign(V[:, i].copy()) for i in range(n)]
    order = sorted(range(n), key=lambda i: (-vals[i], tuple(-cols[i])))
    eigenvalues = vals[order]
    eigenvectors = np.column_stack([cols[i] for i in order]) if n else V
    return SymmetricEigen(eigenvalues=eigenvalues, eigenvectors=eigenvectors)
