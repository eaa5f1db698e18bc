"""Minimal symmetric sparse linear algebra used by the verification code.

Operators are stored in compressed-row form (scipy CSR with sorted, coalesced
indices); the sparse product runs row-major in ascending column order, so
results are deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import MeshMismatchError, ParameterError


@dataclass(frozen=True)
class SparseOperator:
    """Square sparse operator in compressed-row semantics."""

    dimension: int
    csr: sp.csr_matrix
    symmetric: bool = False

    def __post_init__(self):
        if self.csr.shape != (self.dimension, self.dimension):
            raise ParameterError("operator matrix shape does not match dimension")
        if self.symmetric:
            diff = abs(self.csr - self.csr.T)
            scale = max(abs(self.csr).max(), 1e-300)
            if diff.nnz and diff.max() > 1e-12 * scale:
                raise ParameterError("operator flagged symmetric is not (1e-12 relative)")

    @property
    def row_offsets(self) -> np.ndarray:
        return self.csr.indptr

    @property
    def col_indices(self) -> np.ndarray:
        return self.csr.indices

    @property
    def entry_values(self) -> np.ndarray:
        return self.csr.data

    @classmethod
    def from_coo(cls, dimension, rows, cols, values, symmetric=False) -> "SparseOperator":
        m = sp.coo_matrix(
            (np.asarray(values, dtype=np.float64), (rows, cols)),
            shape=(dimension, dimension),
        ).tocsr()
        m.sum_duplicates()
        m.sort_indices()
        return cls(dimension, m, symmetric)

    @classmethod
    def from_dense(cls, array, symmetric=False) -> "SparseOperator":
        a = np.asarray(array, dtype=np.float64)
        m = sp.csr_matrix(a)
        m.sort_indices()
        return cls(a.shape[0], m, symmetric)

    def diagonal(self) -> np.ndarray:
        return self.csr.diagonal()


def matvec(A: SparseOperator, x: np.ndarray) -> np.ndarray:
    """Sparse product A @ x with deterministic per-row summation."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (A.dimension,):
        raise MeshMismatchError(
            f"vector length {x.shape} does not match operator dimension {A.dimension}"
        )
    return A.csr @ x


@dataclass(frozen=True)
class CgResult:
    """Conjugate-gradient outcome; ``converged`` is judged on the true residual."""

    x: np.ndarray
    converged: bool
    residual: float  # |A x - b|_2 / |b|_2
    iterations: int


def conjugate_gradient(A: SparseOperator, b, tol: float = 1e-10, max_iter: int = 10000) -> CgResult:
    """Solve A x = b for symmetric positive-semidefinite A.

    For singular A the right-hand side must lie in the range (for the
    stiffness operator of a closed surface: be orthogonal to constants).
    Non-convergence is reported in the result, not raised.
    """
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (A.dimension,):
        raise MeshMismatchError("right-hand side length does not match operator dimension")
    if tol <= 0:
        raise ParameterError("tol must be positive")
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return CgResult(np.zeros_like(b), True, 0.0, 0)

    x = np.zeros_like(b)
    r = b.copy()
    p = r.copy()
    rs = float(r @ r)
    it = 0
    for it in range(1, max_iter + 1):
        Ap = A.csr @ p
        denom = float(p @ Ap)
        if denom <= 0.0:
            break  # hit the kernel (or loss of positivity): stop with current iterate
        alpha = rs / denom
        x += alpha * p
        r -= alpha * Ap
        rs_new = float(r @ r)
        if np.sqrt(rs_new) <= tol * bnorm:
            break
        p = r + (rs_new / rs) * p
        rs = rs_new

    true_res = float(np.linalg.norm(A.csr @ x - b)) / bnorm
    return CgResult(x, true_res <= tol, true_res, it)
