"""Sample covariance, factor-count selection, and principal-component removal."""

from __future__ import annotations

import numpy as np

from .errors import DataError
from .linalg import sym_eigen
from .types import ReturnPanel, SymMatrix

__all__ = [
    "sample_covariance",
    "eigenvalue_ratio",
    "factor_adjust",
    "default_k_max",
]


def sample_covariance(panel: ReturnPanel | np.ndarray) -> SymMatrix:
    """Column-demeaned cross-product divided by T (1/T convention)."""
    values = panel.values if isinstance(panel, ReturnPanel) else np.asarray(panel, float)
    if values.ndim != 2 or values.shape[0] < 2:
        raise DataError("sample covariance requires a panel with T >= 2")
    if not np.all(np.isfinite(values)):
        raise DataError("panel contains non-finite entries")
    centered = values - values.mean(axis=0, keepdims=True)
    cov = centered.T @ centered / values.shape[0]
    return SymMatrix((cov + cov.T) / 2.0, role="covariance")


def default_k_max(p: int, T: int) -> int:
    """Cap for the eigenvalue-ratio scan: floor(min(p, T)/3), at most 10."""
    return max(1, min(10, min(p, T) // 3))


def eigenvalue_ratio(eigs: np.ndarray, k_max: int) -> int:
    """Factor count k in [1, k_max] maximizing eigs[k-1]/eigs[k].

    Ties break toward the smaller k.  Requires at least k_max + 1
    strictly positive eigenvalues, already sorted descending.
    """
    eigs = np.asarray(eigs, dtype=np.float64)
    if k_max < 1:
        raise DataError("k_max must be >= 1")
    if eigs.size < k_max + 1:
        raise DataError(f"need at least {k_max + 1} eigenvalues, got {eigs.size}")
    head = eigs[:k_max + 1]
    if np.any(head <= 0.0):
        raise DataError("eigenvalue_ratio requires strictly positive eigenvalues")
    ratios = head[:-1] / head[1:]
    return int(np.argmax(ratios)) + 1


def factor_adjust(cov: SymMatrix | np.ndarray,
                  r: int) -> tuple[SymMatrix, np.ndarray, np.ndarray]:
    """Remove the top r principal components from a covariance matrix.

    Returns the adjusted matrix together with the removed eigenvalues
    (length r, descending) and eigenvectors (p x r), which the
    low-rank reconstruction downstream needs back.
    """
    cov = SymMatrix.ensure(cov, role="covariance")
    if not 0 <= r < cov.dim:
        raise DataError(f"factor count r={r} must satisfy 0 <= r < p={cov.dim}")
    if r == 0:
        return cov, np.empty(0), np.empty((cov.dim, 0))
    eig = sym_eigen(cov, role="covariance")
    top_values = eig.values[:r].copy()
    top_vectors = eig.vectors[:, :r].copy()
    adjusted = cov.values - (top_vectors * top_values) @ top_vectors.T
    return SymMatrix((adjusted + adjusted.T) / 2.0, role="covariance"), top_values, top_vectors
