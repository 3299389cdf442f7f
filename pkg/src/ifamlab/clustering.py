"""Group detection: regularized spectral clustering and its evaluation.

The spectral step scales the adjacency by regularized absolute-degree,
takes the top-K eigenvectors, drops the first (it carries the overall
connectivity level, not the split), row-normalizes the rest, and runs
seeded k-means.  Cluster count selection refits Double-POET per
candidate labeling under time-blocked cross-validation and keeps the
count with the smallest Gaussian loss.
"""

from __future__ import annotations

import logging

import numpy as np

from .doublepoet import double_poet_estimate, gaussian_loss
from .errors import DataError, NotPositiveDefiniteError, NumericalError
from .factors import sample_covariance
from .linalg import sym_eigen
from .types import GroupLabels, ReturnPanel, WeightedAdjacency

__all__ = [
    "rsc_cluster",
    "select_num_clusters",
    "adjusted_rand_index",
]

logger = logging.getLogger(__name__)

_KMEANS_RESTARTS = 10
_KMEANS_MAX_ITER = 300


def _kmeans_pp_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: spread initial centers by squared distance."""
    n = x.shape[0]
    centers = np.empty((k, x.shape[1]))
    centers[0] = x[rng.integers(0, n)]
    d2 = np.sum((x - centers[0]) ** 2, axis=1)
    for i in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            centers[i] = x[rng.integers(0, n)]
        else:
            centers[i] = x[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, np.sum((x - centers[i]) ** 2, axis=1))
    return centers


def _lloyd(x: np.ndarray, centers: np.ndarray) -> tuple[np.ndarray, float]:
    """Standard k-means iterations; empty clusters grab the farthest point."""
    k = centers.shape[0]
    assign = np.full(x.shape[0], -1)
    for _ in range(_KMEANS_MAX_ITER):
        d2 = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_assign = np.argmin(d2, axis=1)
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign
        for c in range(k):
            mask = assign == c
            if mask.any():
                centers[c] = x[mask].mean(axis=0)
            else:
                far = int(np.argmax(d2[np.arange(x.shape[0]), assign]))
                centers[c] = x[far]
                assign[far] = c
    inertia = float(((x - centers[assign]) ** 2).sum())
    return assign, inertia


def _kmeans(x: np.ndarray, k: int, seed: int) -> np.ndarray:
    """Best of 10 seeded k-means++ restarts; ties keep the earlier restart."""
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x6B6D]))
    best_assign, best_inertia = None, np.inf
    for _restart in range(_KMEANS_RESTARTS):
        centers = _kmeans_pp_init(x, k, rng)
        assign, inertia = _lloyd(x, centers.copy())
        if inertia < best_inertia:
            best_assign, best_inertia = assign, inertia
    return best_assign


def rsc_cluster(a: WeightedAdjacency, k: int, seed: int = 0) -> GroupLabels:
    """Regularized spectral clustering into k groups.

    Degrees use absolute weights so signed benchmark matrices are
    accepted; the mean degree is added to every node before scaling,
    which keeps weakly connected vertices from dominating the spectrum.
    """
    if k < 2:
        raise DataError("rsc_cluster requires K >= 2")
    if k > a.dim:
        raise DataError(f"K={k} exceeds the number of assets {a.dim}")
    degrees = np.abs(a.values).sum(axis=1)
    reg = float(degrees.mean())
    if reg <= 0.0:
        raise DataError("adjacency is identically zero; scaling is undefined")
    scale = 1.0 / np.sqrt(degrees + reg)
    laplacian = a.values * np.outer(scale, scale)
    eig = sym_eigen(laplacian, role="adjacency")
    features = eig.vectors[:, 1:k].copy()
    norms = np.linalg.norm(features, axis=1, keepdims=True)
    nonzero = norms[:, 0] > 0.0
    features[nonzero] /= norms[nonzero]
    assign = _kmeans(features, k, seed)
    # relabel deterministically by first appearance
    remap = {}
    out = np.empty(a.dim, dtype=np.int64)
    for i, c in enumerate(assign):
        if c not in remap:
            remap[c] = len(remap) + 1
        out[i] = remap[c]
    return GroupLabels(out, k)


def select_num_clusters(panel: ReturnPanel,
                        labelings: dict[int, GroupLabels],
                        folds: int = 2,
                        threshold: str = "min_pd") -> tuple[int, GroupLabels]:
    """Pick the cluster count by cross-validated Double-POET likelihood.

    Folds are contiguous time blocks.  For each fold, the estimator is
    fit on the complement and scored against the fold's own sample
    covariance with the Gaussian loss; candidates whose fit cannot be
    inverted on some fold are disqualified.  Ties go to the smaller K.
    """
    if folds < 2:
        raise DataError("cross-validation requires at least 2 folds")
    if not labelings:
        raise DataError("no candidate labelings supplied")
    if panel.T < 2 * folds:
        raise DataError(f"T={panel.T} too short for {folds} folds")
    blocks = np.array_split(np.arange(panel.T), folds)

    losses: dict[int, float] = {}
    for k in sorted(labelings):
        labels = labelings[k]
        total = 0.0
        try:
            for block in blocks:
                train = np.setdiff1d(np.arange(panel.T), block)
                fit = double_poet_estimate(
                    ReturnPanel(panel.values[train], panel.asset_ids),
                    labels, threshold=threshold)
                test_cov = sample_covariance(panel.values[block])
                total += gaussian_loss(test_cov, fit)
        except (NotPositiveDefiniteError, NumericalError, DataError) as exc:
            logger.info("candidate K=%d disqualified: %s", k, exc)
            continue
        losses[k] = total / folds
    if not losses:
        raise NumericalError("every candidate cluster count was disqualified")
    best_k = min(sorted(losses), key=lambda k: losses[k])
    return best_k, labelings[best_k]


def adjusted_rand_index(a: GroupLabels, b: GroupLabels) -> float:
    """Chance-corrected partition agreement in [-1, 1]."""
    if a.p != b.p:
        raise DataError(f"labelings differ in length: {a.p} vs {b.p}")
    n = a.p
    contingency = np.zeros((a.num_groups, b.num_groups), dtype=np.int64)
    np.add.at(contingency, (a.assignments - 1, b.assignments - 1), 1)

    def comb2(x):
        return x * (x - 1) // 2

    sum_ij = int(comb2(contingency).sum())
    sum_a = int(comb2(contingency.sum(axis=1)).sum())
    sum_b = int(comb2(contingency.sum(axis=0)).sum())
    total = comb2(n)
    expected = sum_a * sum_b / total
    max_index = (sum_a + sum_b) / 2.0
    if max_index == expected:
        return 1.0 if sum_ij == max_index else 0.0
    return float((sum_ij - expected) / (max_index - expected))
