"""Monte Carlo experiment drivers.

Each driver simulates replicated panels, runs the configured adjacency
methods through group detection and downstream estimators, and returns
long-format tables with one row per replication so every aggregate can
be recomputed from the output.  Replications run in parallel across
processes; worker count defaults to the CPU count and is capped by the
IFAM_THREADS environment variable.  Results are deterministic for a
fixed seed regardless of worker count.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from functools import partial

import numpy as np
import pandas as pd

from .adjacency import edge_densities, summarize_densities, threshold_binary
from .clustering import adjusted_rand_index, rsc_cluster, select_num_clusters
from .dgp import DgpConfig, generate_panel
from .doublepoet import double_poet_estimate
from .errors import IfamError
from .factors import sample_covariance
from .linalg import matrix_norms
from .pipeline import adjacency_for_method
from .portfolio import expected_risk, min_variance_weights
from .types import GroupLabels

__all__ = [
    "worker_count",
    "default_tau_grid",
    "run_density_experiment",
    "run_ari_experiment",
    "run_norms_experiment",
    "run_risk_experiment",
]

logger = logging.getLogger(__name__)


def worker_count() -> int:
    cap = os.environ.get("IFAM_THREADS")
    n = os.cpu_count() or 1
    if cap is not None:
        n = min(n, max(1, int(cap)))
    return n


def default_tau_grid(num: int = 101) -> np.ndarray:
    return np.linspace(0.0, 1.0, num)


def _safe_call(fn, task):
    try:
        return fn(task)
    except IfamError as exc:
        return exc


def _map_replications(fn, tasks: list, max_failures: float = 0.1) -> list:
    """Run per-replication tasks, tolerating isolated failures.

    Failed replications are logged with their task tuple (which carries
    the seed) and skipped; the run aborts only when more than
    ``max_failures`` of them fail.
    """
    results = []
    failures = []
    worker = partial(_safe_call, fn)
    n_workers = min(worker_count(), len(tasks))
    if n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            outcomes = list(pool.map(worker, tasks))
    else:
        outcomes = [worker(t) for t in tasks]
    for task, outcome in zip(tasks, outcomes):
        if isinstance(outcome, Exception):
            failures.append((task, outcome))
            logger.warning("replication %s failed: %s", task, outcome)
        else:
            results.append(outcome)
    if len(failures) > max_failures * len(tasks):
        raise IfamError(
            f"{len(failures)} of {len(tasks)} replications failed; "
            f"first failure: {failures[0][1]}")
    return results


# ----------------------------------------------------------------- density

def _density_task(task):
    (seed, rep, num_groups, group_size, T, methods, cov_r_values, tau_grid,
     rho_grid) = task
    cfg = DgpConfig(num_groups=num_groups, group_size=group_size, T=T, seed=seed)
    panel, truth = generate_panel(cfg, replication=rep)
    cov = sample_covariance(panel)
    variants = []
    for method in methods:
        if method == "cov" and cov_r_values is not None:
            for r in cov_r_values:
                adj, _ = adjacency_for_method("cov", cov, T, r_c=int(r))
                variants.append((f"cov_r{r}", adj))
        else:
            adj, _ = adjacency_for_method(method, cov, T, rho_grid=rho_grid)
            variants.append((method, adj))
    rows = []
    for name, adj in variants:
        for tau in tau_grid:
            binary = threshold_binary(adj, float(tau))
            for d in edge_densities(binary, truth.labels):
                rows.append({"replication": rep, "method": name,
                             "tau": float(tau), "group": d["group"],
                             "within": d["within"], "between": d["between"]})
    return rows


def run_density_experiment(num_groups: int, group_size: int, T: int,
                           replications: int, seed: int,
                           methods=("ifam", "cov"),
                           cov_r_values=None,
                           tau_grid: np.ndarray | None = None,
                           rho_grid=None) -> tuple[pd.DataFrame, pd.DataFrame]:
    """Edge densities of thresholded adjacencies against true groups.

    Returns (rows, summary): per-replication per-group densities for
    every method and threshold, and the mean-of-min within /
    mean-of-max between aggregation per method and threshold.
    """
    tau_grid = default_tau_grid() if tau_grid is None else np.asarray(tau_grid, float)
    tasks = [(seed, rep, num_groups, group_size, T, tuple(methods),
              tuple(cov_r_values) if cov_r_values is not None else None,
              tuple(float(t) for t in tau_grid),
              tuple(float(r) for r in rho_grid) if rho_grid is not None else None)
             for rep in range(replications)]
    rows = [r for chunk in _map_replications(_density_task, tasks)
            for r in chunk]
    df = pd.DataFrame(rows)
    summary_rows = []
    for (method, tau), chunk in df.groupby(["method", "tau"], sort=True):
        per_rep = [list(rep_chunk.to_dict("records"))
                   for _, rep_chunk in chunk.groupby("replication", sort=True)]
        agg = summarize_densities(per_rep)
        summary_rows.append({"method": method, "tau": tau, **agg})
    return df, pd.DataFrame(summary_rows)


# --------------------------------------------------------------------- ari

def _ari_task(task):
    (seed, rep, num_groups, group_size, T, methods, k_candidates, rho_grid) = task
    cfg = DgpConfig(num_groups=num_groups, group_size=group_size, T=T, seed=seed)
    panel, truth = generate_panel(cfg, replication=rep)
    cov = sample_covariance(panel)
    rows = []
    for method in methods:
        adj, _ = adjacency_for_method(method, cov, T, rho_grid=rho_grid)
        if k_candidates is None:
            labels = rsc_cluster(adj, num_groups, seed=seed + rep)
            k_hat = num_groups
        else:
            candidates = {int(k): rsc_cluster(adj, int(k), seed=seed + rep)
                          for k in k_candidates}
            k_hat, labels = select_num_clusters(panel, candidates)
        rows.append({"T": T, "num_groups": num_groups, "group_size": group_size,
                     "method": method, "replication": rep, "K_hat": int(k_hat),
                     "ari": adjusted_rand_index(labels, truth.labels)})
    return rows


def run_ari_experiment(settings: list[tuple[int, int, int]], replications: int,
                       seed: int, methods=("ifam", "cov", "glasso"),
                       k_candidates=None, rho_grid=None) -> pd.DataFrame:
    """Clustering accuracy per (T, num_groups, group_size) setting.

    ``k_candidates`` of None clusters at the true count; otherwise the
    count is selected per replication by cross-validation.
    """
    tasks = []
    for (T, num_groups, group_size) in settings:
        for rep in range(replications):
            tasks.append((seed, rep, num_groups, group_size, T, tuple(methods),
                          tuple(k_candidates) if k_candidates is not None else None,
                          tuple(float(r) for r in rho_grid) if rho_grid is not None else None))
    rows = [r for chunk in _map_replications(_ari_task, tasks)
            for r in chunk]
    return pd.DataFrame(rows)


# ------------------------------------------------------------------- norms

def _labels_for_source(source, panel, truth, cov, k_candidates, seed, rep):
    if source == "truth":
        return truth.labels
    if source == "permuted":
        base = _labels_for_source("ifam", panel, truth, cov, k_candidates, seed, rep)
        rng = np.random.default_rng(np.random.SeedSequence([seed, rep, 0x9E37]))
        return GroupLabels(rng.permutation(base.assignments), base.num_groups)
    adj, _ = adjacency_for_method(source, cov, panel.T)
    if k_candidates is None:
        return rsc_cluster(adj, truth.labels.num_groups, seed=seed + rep)
    candidates = {int(k): rsc_cluster(adj, int(k), seed=seed + rep)
                  for k in k_candidates}
    _, labels = select_num_clusters(panel, candidates)
    return labels


def _norms_task(task):
    (seed, rep, num_groups, group_size, T, sources, k_candidates) = task
    cfg = DgpConfig(num_groups=num_groups, group_size=group_size, T=T, seed=seed)
    panel, truth = generate_panel(cfg, replication=rep)
    cov = sample_covariance(panel)
    rows = []
    cache: dict[str, GroupLabels] = {}
    for source in sources:
        if source not in cache:
            cache[source] = _labels_for_source(
                source, panel, truth, cov, k_candidates, seed, rep)
        fit = double_poet_estimate(panel, cache[source])
        norms = matrix_norms(fit, truth.sigma_true)
        rows.append({"T": T, "source": source, "replication": rep, **norms})
    return rows


def run_norms_experiment(T_values, num_groups: int, group_size: int,
                         replications: int, seed: int,
                         sources=("ifam", "cov", "glasso"),
                         k_candidates=None) -> pd.DataFrame:
    """Double-POET estimation error against the true covariance.

    ``sources`` picks where the group labels come from: any adjacency
    method, ``truth``, or ``permuted`` (the IFAM labels shuffled, an
    ablation for how much label quality matters).
    """
    tasks = [(seed, rep, num_groups, group_size, int(T), tuple(sources),
              tuple(k_candidates) if k_candidates is not None else None)
             for T in T_values for rep in range(replications)]
    rows = [r for chunk in _map_replications(_norms_task, tasks)
            for r in chunk]
    return pd.DataFrame(rows)


# -------------------------------------------------------------------- risk

def _risk_task(task):
    (seed, rep, num_groups, group_size, T, sources, c0_grid, k_candidates) = task
    cfg = DgpConfig(num_groups=num_groups, group_size=group_size, T=T, seed=seed)
    panel, truth = generate_panel(cfg, replication=rep)
    cov = sample_covariance(panel)
    rows = []
    for source in sources:
        labels = _labels_for_source(source, panel, truth, cov, k_candidates, seed, rep)
        fit = double_poet_estimate(panel, labels)
        for c0 in c0_grid:
            w = min_variance_weights(fit, float(c0))
            rows.append({"T": T, "method": source, "c0": float(c0),
                         "replication": rep,
                         "expected_risk": expected_risk(w, truth.sigma_true),
                         "l1": float(np.abs(w.weights).sum())})
    return rows


def run_risk_experiment(T_values, num_groups: int, group_size: int,
                        replications: int, seed: int, c0_grid,
                        sources=("ifam", "cov", "glasso"),
                        k_candidates=None) -> pd.DataFrame:
    """Expected out-of-sample portfolio risk w' Sigma_true w by method and c0."""
    tasks = [(seed, rep, num_groups, group_size, int(T), tuple(sources),
              tuple(float(c) for c in c0_grid),
              tuple(k_candidates) if k_candidates is not None else None)
             for T in T_values for rep in range(replications)]
    rows = [r for chunk in _map_replications(_risk_task, tasks)
            for r in chunk]
    return pd.DataFrame(rows)
