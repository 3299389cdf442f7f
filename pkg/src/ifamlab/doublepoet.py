"""Double-POET large covariance estimation.

Three steps: global PCA on the sample covariance, per-group PCA on the
group blocks of what remains, and a thresholded idiosyncratic
remainder.  Group labels decide which block each asset's local factors
are estimated from, which is why label quality drives accuracy.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_solve

from .errors import DataError, NumericalError
from .factors import default_k_max, eigenvalue_ratio, factor_adjust, sample_covariance
from .linalg import cholesky_lower, sym_eigen
from .types import GroupLabels, ReturnPanel, SymMatrix

__all__ = [
    "double_poet_estimate",
    "double_poet_components",
    "hard_threshold_min_pd",
    "sector_threshold",
]

_PD_MARGIN = 1e-10
_BISECT_WIDTH = 1e-4


def hard_threshold_min_pd(residual: SymMatrix | np.ndarray) -> SymMatrix:
    """Adaptive-correlation hard thresholding at the smallest PD level.

    Off-diagonal entries are kept iff |r_ij| >= C*sqrt(r_ii*r_jj); C is
    found by bisection (width 1e-4) as the smallest value making the
    smallest eigenvalue exceed 1e-10*trace/p.  The diagonal always
    stays.  A PD input comes back unchanged (C = 0).
    """
    residual = SymMatrix.ensure(residual)
    r = residual.values
    d = np.diag(r)
    if np.any(d <= 0.0):
        raise DataError("residual diagonal must be strictly positive")
    p = r.shape[0]
    floor = _PD_MARGIN * float(np.trace(r)) / p

    corr = np.abs(r) / np.sqrt(np.outer(d, d))
    off = ~np.eye(p, dtype=bool)

    def thresholded(c: float) -> np.ndarray:
        keep = corr >= c
        out = np.where(keep, r, 0.0)
        out[~off] = r[~off]
        return out

    def is_pd(m: np.ndarray) -> bool:
        return float(np.linalg.eigvalsh(m)[0]) > floor

    if is_pd(thresholded(0.0)):
        return SymMatrix(r, role="covariance")

    max_corr = float(corr[off].max()) if p > 1 else 0.0
    hi = max_corr + 1e-12 * max(1.0, max_corr)  # strictly above: diagonal matrix
    if not is_pd(thresholded(hi)):
        raise NumericalError(
            "diagonal of the residual is not positive definite; "
            "positive diagonal entries should make this impossible")
    lo = 0.0
    while hi - lo > _BISECT_WIDTH:
        mid = (lo + hi) / 2.0
        if is_pd(thresholded(mid)):
            hi = mid
        else:
            lo = mid
    return SymMatrix(thresholded(hi), role="covariance")


def sector_threshold(residual: SymMatrix | np.ndarray,
                     sector_labels) -> SymMatrix:
    """Zero out off-diagonals across sectors; keep within-sector blocks."""
    residual = SymMatrix.ensure(residual)
    sectors = np.asarray(sector_labels)
    if sectors.shape != (residual.dim,):
        raise DataError(
            f"{sectors.shape[0] if sectors.ndim == 1 else '?'} sector labels "
            f"for {residual.dim} assets")
    same = sectors[:, None] == sectors[None, :]
    out = np.where(same, residual.values, 0.0)
    np.fill_diagonal(out, np.diag(residual.values))
    return SymMatrix(out, role="covariance")


def _local_factor_count(block_eigs: np.ndarray, group_size: int) -> int:
    """Eigenvalue-ratio count on one group block, capped at min(5, |G|-1)."""
    positive = block_eigs[block_eigs > 1e-12 * max(1.0, block_eigs[0])]
    k_max = min(5, group_size - 1, positive.size - 1)
    if k_max < 1:
        return 0
    return eigenvalue_ratio(positive, k_max)


def double_poet_components(panel: ReturnPanel, labels: GroupLabels,
                           r_c: int | str = "auto",
                           r_local: dict[int, int] | int | str = "auto",
                           ) -> tuple[np.ndarray, np.ndarray, np.ndarray, dict]:
    """Global, local, and residual components of the decomposition.

    The three arrays sum exactly to the sample covariance.  ``info``
    records the factor counts used.
    """
    if labels.p != panel.p:
        raise DataError(f"labels cover {labels.p} assets, panel has {panel.p}")
    cov = sample_covariance(panel)
    if r_c == "auto":
        eigs = sym_eigen(cov, role="covariance").values
        k_max = default_k_max(panel.p, panel.T)
        positive = eigs[eigs > 1e-12 * max(1.0, eigs[0])]
        r_c = eigenvalue_ratio(positive, min(k_max, positive.size - 1))
    r_c = int(r_c)
    remainder, top_values, top_vectors = factor_adjust(cov, r_c)
    global_part = (top_vectors * top_values) @ top_vectors.T

    local_part = np.zeros_like(global_part)
    local_counts: dict[int, int] = {}
    for g in range(1, labels.num_groups + 1):
        members = labels.members(g)
        block = remainder.values[np.ix_(members, members)]
        if isinstance(r_local, dict):
            r_g = int(r_local[g])
        elif r_local == "auto":
            block_eigs = sym_eigen(SymMatrix(block), role="covariance").values
            r_g = _local_factor_count(block_eigs, members.size)
        else:
            r_g = int(r_local)
        if r_g >= members.size and r_g > 0:
            raise DataError(
                f"group {g} of size {members.size} cannot host {r_g} local factors")
        local_counts[g] = r_g
        if r_g == 0:
            continue
        sub_adj, sub_vals, sub_vecs = factor_adjust(SymMatrix(block), r_g)
        local_part[np.ix_(members, members)] = (sub_vecs * sub_vals) @ sub_vecs.T
    residual = cov.values - global_part - local_part
    info = {"r_c": r_c, "r_local": local_counts}
    return global_part, local_part, residual, info


def double_poet_estimate(panel: ReturnPanel, labels: GroupLabels,
                         r_c: int | str = "auto",
                         r_local: dict[int, int] | int | str = "auto",
                         threshold: str = "min_pd",
                         sector_labels=None) -> SymMatrix:
    """Structured covariance estimate from a panel plus group labels.

    ``threshold`` is applied to the idiosyncratic remainder: ``min_pd``
    (adaptive hard thresholding to positive definiteness), ``sector``
    (keep within-sector entries only; requires ``sector_labels``), or
    ``none`` (keep the full remainder, reassembling the sample
    covariance exactly).
    """
    global_part, local_part, residual, _ = double_poet_components(
        panel, labels, r_c=r_c, r_local=r_local)
    res = SymMatrix((residual + residual.T) / 2.0)
    if threshold == "min_pd":
        idio = hard_threshold_min_pd(res).values
    elif threshold == "sector":
        if sector_labels is None:
            raise DataError("sector thresholding requires sector_labels")
        idio = sector_threshold(res, sector_labels).values
    elif threshold == "none":
        idio = res.values
    else:
        raise DataError(f"unknown threshold mode {threshold!r}")
    total = global_part + local_part + idio
    return SymMatrix((total + total.T) / 2.0, role="covariance")


def gaussian_loss(test_cov: SymMatrix | np.ndarray,
                  fitted: SymMatrix | np.ndarray) -> float:
    """tr(S O) - log det O with O the inverse of the fitted matrix.

    Raises :class:`NotPositiveDefiniteError` when the fit cannot be
    inverted, which cross-validation treats as a disqualified candidate.
    """
    test_cov = SymMatrix.ensure(test_cov)
    fitted = SymMatrix.ensure(fitted)
    c = cholesky_lower(fitted, role="covariance")
    logdet_fit = 2.0 * float(np.log(np.diag(c)).sum())
    inv_times = cho_solve((c, True), test_cov.values)
    return float(np.trace(inv_times)) + logdet_fit
