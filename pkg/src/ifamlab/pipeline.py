"""End-to-end building blocks shared by the CLI, the experiment
drivers, and the backtester: covariance -> adjacency -> labels.

GLASSO tolerances here are scaled to the data: convergence is declared
at 5e-3 relative to the typical precision magnitude (the reciprocal
median diagonal of the solver input), which keeps solve times bounded
without affecting the normalized adjacency at the accuracy thresholds
use.
"""

from __future__ import annotations

import numpy as np

from .adjacency import build_benchmark_adjacency, build_ifam, normalize_adjacency
from .clustering import rsc_cluster, select_num_clusters
from .errors import DataError
from .factors import default_k_max, eigenvalue_ratio, factor_adjust, sample_covariance
from .linalg import sym_eigen
from .precision import bic_select_rho, smw_reconstruct
from .types import GroupLabels, ReturnPanel, SymMatrix, WeightedAdjacency

__all__ = [
    "METHODS",
    "glasso_tolerance",
    "choose_global_factors",
    "ifam_adjacency",
    "cov_adjacency",
    "glasso_adjacency",
    "adjacency_for_method",
    "detect_groups",
]

METHODS = ("ifam", "cov", "glasso")

_TOL_RELATIVE = 5e-3
_MAX_SWEEPS = 200


def glasso_tolerance(matrix: SymMatrix | np.ndarray) -> float:
    """Scale-aware elementwise convergence tolerance for one input."""
    d = np.diag(SymMatrix.ensure(matrix).values)
    return _TOL_RELATIVE / float(np.median(d))


def choose_global_factors(cov: SymMatrix, T: int, r_c: int | str = "auto") -> int:
    if r_c != "auto":
        return int(r_c)
    eigs = sym_eigen(cov, role="covariance").values
    positive = eigs[eigs > 1e-12 * max(1.0, eigs[0])]
    k_max = min(default_k_max(cov.dim, T), positive.size - 1)
    return eigenvalue_ratio(positive, k_max)


def ifam_adjacency(cov: SymMatrix, T: int, r_c: int | str = "auto",
                   rho_grid: np.ndarray | None = None,
                   ) -> tuple[WeightedAdjacency, dict]:
    """Normalized adjacency from the factor-adjusted precision estimate."""
    r = choose_global_factors(cov, T, r_c)
    adjusted, top_values, top_vectors = factor_adjust(cov, r)
    selection = bic_select_rho(adjusted, T, rho_grid,
                               tol=glasso_tolerance(adjusted),
                               max_sweeps=_MAX_SWEEPS)
    omega = smw_reconstruct(selection.precision, top_values, top_vectors)
    adjacency = normalize_adjacency(build_ifam(omega), np.diag(omega.values))
    info = {"r_c": r, "rho": selection.rho, "bic_table": selection.table}
    return adjacency, info


def cov_adjacency(cov: SymMatrix, T: int, r_c: int | str = "auto",
                  ) -> tuple[WeightedAdjacency, dict]:
    """Normalized absolute factor-adjusted covariance benchmark."""
    r = choose_global_factors(cov, T, r_c)
    return build_benchmark_adjacency("cov", cov, r_c=r), {"r_c": r}


def glasso_adjacency(cov: SymMatrix, T: int,
                     rho_grid: np.ndarray | None = None,
                     ) -> tuple[WeightedAdjacency, dict]:
    """Signed benchmark: negated off-diagonals of plain BIC-tuned GLASSO."""
    selection = bic_select_rho(cov, T, rho_grid,
                               tol=glasso_tolerance(cov),
                               max_sweeps=_MAX_SWEEPS)
    adjacency = build_benchmark_adjacency("glasso_signed", selection.precision)
    info = {"rho": selection.rho, "bic_table": selection.table}
    return adjacency, info


def adjacency_for_method(method: str, cov: SymMatrix, T: int,
                         r_c: int | str = "auto",
                         rho_grid: np.ndarray | None = None,
                         ) -> tuple[WeightedAdjacency, dict]:
    if method == "ifam":
        return ifam_adjacency(cov, T, r_c=r_c, rho_grid=rho_grid)
    if method == "cov":
        return cov_adjacency(cov, T, r_c=r_c)
    if method == "glasso":
        return glasso_adjacency(cov, T, rho_grid=rho_grid)
    raise DataError(f"unknown method {method!r}; expected one of {METHODS}")


def detect_groups(panel: ReturnPanel, method: str = "ifam",
                  num_groups: int | None = None,
                  k_candidates=None,
                  r_c: int | str = "auto",
                  rho_grid=None, seed: int = 0,
                  return_info: bool = False):
    """Cluster a panel into latent groups.

    With ``num_groups`` fixed, runs spectral clustering at that count;
    otherwise scans ``k_candidates`` (default 2..min(40, p//4)) and
    keeps the count minimizing the cross-validated Double-POET loss.
    """
    cov = sample_covariance(panel)
    grid = np.asarray(rho_grid, float) if rho_grid is not None else None
    adjacency, info = adjacency_for_method(method, cov, panel.T, r_c=r_c, rho_grid=grid)
    if num_groups is not None:
        labels = GroupLabels(
            rsc_cluster(adjacency, int(num_groups), seed=seed).assignments,
            int(num_groups))
        info["K"] = int(num_groups)
    else:
        if k_candidates is None:
            k_candidates = range(2, max(3, min(40, panel.p // 4)) + 1)
        candidates = {int(k): rsc_cluster(adjacency, int(k), seed=seed)
                      for k in k_candidates}
        k_hat, labels = select_num_clusters(panel, candidates)
        info["K"] = k_hat
    if return_info:
        info["adjacency"] = adjacency
        return labels, info
    return labels
