"""Adjacency construction, normalization, thresholding, and edge densities.

The headline matrix keeps the sign-flipped negative entries of a
precision matrix; positive partial covariances are discarded because
within-group pairs show up as negative precision entries under the
multi-level factor structure.  Two benchmarks are provided: absolute
factor-adjusted covariances (``cov``) and the signed negated GLASSO
off-diagonals (``glasso_signed``).
"""

from __future__ import annotations

import numpy as np

from .errors import DataError
from .factors import factor_adjust
from .types import GroupLabels, SymMatrix, WeightedAdjacency

__all__ = [
    "build_ifam",
    "normalize_adjacency",
    "build_benchmark_adjacency",
    "threshold_binary",
    "edge_densities",
    "summarize_densities",
]


def build_ifam(precision: SymMatrix | np.ndarray) -> WeightedAdjacency:
    """Adjacency A_ij = -O_ij where O_ij < 0, else 0."""
    precision = SymMatrix.ensure(precision, role="precision")
    omega = precision.values
    if np.any(np.diag(omega) <= 0.0):
        raise DataError("precision diagonal must be strictly positive")
    a = np.where(omega < 0.0, -omega, 0.0)
    np.fill_diagonal(a, 0.0)
    return WeightedAdjacency(a, source="ifam", signed=False)


def normalize_adjacency(a: WeightedAdjacency,
                        precision_diag: np.ndarray) -> WeightedAdjacency:
    """Scale to A_ij / sqrt(d_i d_j) with d the precision diagonal."""
    d = np.asarray(precision_diag, dtype=np.float64).ravel()
    if d.shape != (a.dim,):
        raise DataError(f"diagonal length {d.shape} != adjacency dim {a.dim}")
    if np.any(d <= 0.0):
        raise DataError("normalization diagonal must be strictly positive")
    root = np.sqrt(d)
    values = a.values / np.outer(root, root)
    return WeightedAdjacency(values, source=a.source, signed=a.signed)


def build_benchmark_adjacency(kind: str, matrix: SymMatrix | np.ndarray,
                              r_c: int | None = None) -> WeightedAdjacency:
    """Normalized benchmark adjacency.

    ``cov``: remove the top ``r_c`` principal components of the
    covariance, take absolute off-diagonals, and normalize by the
    adjusted matrix's own diagonal.  ``glasso_signed``: negate the
    off-diagonals of a precision estimate, keep both signs, and
    normalize by the precision diagonal.
    """
    if kind == "cov":
        if r_c is None:
            raise DataError("cov benchmark requires r_c")
        adjusted, _, _ = factor_adjust(SymMatrix.ensure(matrix, role="covariance"), r_c)
        values = np.abs(adjusted.values)
        np.fill_diagonal(values, 0.0)
        raw = WeightedAdjacency(values, source="cov", signed=False)
        return normalize_adjacency(raw, np.diag(adjusted.values))
    if kind == "glasso_signed":
        precision = SymMatrix.ensure(matrix, role="precision")
        if np.any(np.diag(precision.values) <= 0.0):
            raise DataError("precision diagonal must be strictly positive")
        values = -precision.values.copy()
        np.fill_diagonal(values, 0.0)
        raw = WeightedAdjacency(values, source="glasso_signed", signed=True)
        return normalize_adjacency(raw, np.diag(precision.values))
    raise DataError(f"unknown benchmark kind {kind!r}")


def threshold_binary(a: WeightedAdjacency, tau: float) -> np.ndarray:
    """Binary matrix 1(A_ij > tau), strict inequality, int8."""
    if not 0.0 <= tau <= 1.0:
        raise DataError("tau must lie in [0, 1]")
    return (a.values > tau).astype(np.int8)


def edge_densities(binary: np.ndarray,
                   labels: GroupLabels) -> list[dict[str, float]]:
    """Within / between edge density for each group.

    Denominators are the full Cartesian products |G|^2 and |G|(p-|G|),
    diagonal pairs included (their numerator contribution is always 0).
    """
    b = np.asarray(binary)
    p = b.shape[0]
    if labels.p != p:
        raise DataError(f"labels cover {labels.p} assets, matrix has {p}")
    out = []
    for g in range(1, labels.num_groups + 1):
        members = labels.assignments == g
        n = int(members.sum())
        if n == 0:
            raise DataError(f"group {g} is empty")
        within = float(b[np.ix_(members, members)].sum()) / (n * n)
        if p == n:
            between = 0.0
        else:
            between = float(b[np.ix_(members, ~members)].sum()) / (n * (p - n))
        out.append({"group": g, "within": within, "between": between})
    return out


def summarize_densities(per_replication: list[list[dict[str, float]]]) -> dict[str, float]:
    """Mean over replications of the worst-case group densities.

    ``within``: mean of the per-replication minimum within-group
    density; ``between``: mean of the per-replication maximum
    between-group density.  These are the two curves that matter for
    recovering memberships: the weakest group must stay connected while
    the strongest spurious cross-group link fades.
    """
    if not per_replication:
        raise DataError("need at least one replication")
    mins = [min(r["within"] for r in rep) for rep in per_replication]
    maxs = [max(r["between"] for r in rep) for rep in per_replication]
    return {
        "within_mean_of_min": float(np.mean(mins)),
        "between_mean_of_max": float(np.mean(maxs)),
    }
