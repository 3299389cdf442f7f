"""Dense symmetric linear algebra used throughout the pipeline.

Thin deterministic wrappers over LAPACK (via numpy/scipy) that pin down
eigenvalue ordering, eigenvector signs, and error reporting so that
downstream outputs are byte-reproducible on a given platform.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.linalg.lapack import dpotrf

from .errors import DataError, NotPositiveDefiniteError, NumericalError
from .types import EigenDecomposition, SymMatrix

__all__ = [
    "sym_eigen",
    "spd_inverse",
    "matrix_norms",
    "cholesky_lower",
    "is_spd",
]


def cholesky_lower(m: SymMatrix | np.ndarray, role: str = "generic") -> np.ndarray:
    """Lower Cholesky factor of an SPD matrix.

    Raises :class:`NotPositiveDefiniteError` carrying the 1-based index
    of the failing pivot when the matrix is not positive definite.
    """
    m = SymMatrix.ensure(m, role)
    c, info = dpotrf(m.values, lower=1, clean=1, overwrite_a=0)
    if info > 0:
        raise NotPositiveDefiniteError(
            f"{m.role} matrix of dim {m.dim} is not positive definite "
            f"(Cholesky pivot {info} failed)", pivot=int(info))
    if info < 0:
        raise NumericalError(f"illegal value in Cholesky argument {-info}")
    return c


def is_spd(m: SymMatrix | np.ndarray) -> bool:
    """True when Cholesky succeeds."""
    try:
        cholesky_lower(m)
        return True
    except NotPositiveDefiniteError:
        return False


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip eigenvector signs so each column's largest-|.| entry is positive.

    np.argmax returns the first maximizer, which settles ties toward
    the smaller index.
    """
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0.0] = 1.0
    return vectors * signs


def sym_eigen(m: SymMatrix | np.ndarray, role: str = "generic") -> EigenDecomposition:
    """Full spectral decomposition with deterministic ordering and signs.

    Eigenvalues are sorted descending; eigenvectors are column-orthonormal
    with the largest-magnitude component of each column made positive.
    """
    m = SymMatrix.ensure(m, role)
    try:
        values, vectors = np.linalg.eigh(m.values)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"eigendecomposition of {m.role} matrix (dim {m.dim}) "
            f"did not converge: {exc}") from exc
    order = np.argsort(values, kind="stable")[::-1]
    values = values[order]
    vectors = _fix_signs(np.ascontiguousarray(vectors[:, order]))
    return EigenDecomposition(values=values, vectors=vectors)


def spd_inverse(m: SymMatrix | np.ndarray) -> SymMatrix:
    """Inverse of an SPD matrix via Cholesky, symmetrized exactly."""
    m = SymMatrix.ensure(m)
    c = cholesky_lower(m, role=m.role)
    inv = cho_solve((c, True), np.eye(m.dim))
    inv = (inv + inv.T) / 2.0
    role = {"covariance": "precision", "precision": "covariance"}.get(m.role, m.role)
    return SymMatrix(inv, role)


def matrix_norms(est: SymMatrix | np.ndarray,
                 truth: SymMatrix | np.ndarray) -> dict[str, float]:
    """Max, Frobenius, and relative Frobenius error of ``est`` vs ``truth``.

    The relative norm is p**-0.5 * ||T^-1/2 (E) T^-1/2 - I||_F, computed
    via Cholesky whitening (orthogonally equivalent to the symmetric
    square root, hence the same Frobenius value).
    """
    est = SymMatrix.ensure(est)
    truth = SymMatrix.ensure(truth)
    if est.dim != truth.dim:
        raise DataError(f"dimension mismatch: {est.dim} vs {truth.dim}")
    diff = est.values - truth.values
    max_norm = float(np.abs(diff).max())
    frob = float(np.linalg.norm(diff, "fro"))
    if max_norm == 0.0:
        cholesky_lower(truth, role="covariance")  # contract: truth must be SPD
        return {"max": 0.0, "frobenius": 0.0, "relative_frobenius": 0.0}
    c = cholesky_lower(truth, role="covariance")
    half = solve_triangular(c, est.values, lower=True)
    whitened = solve_triangular(c, half.T, lower=True)
    rel = float(np.linalg.norm(whitened - np.eye(est.dim), "fro") / np.sqrt(est.dim))
    return {"max": max_norm, "frobenius": frob, "relative_frobenius": rel}
