"""Synthetic multi-level factor panels with full ground truth.

Returns follow a five-global / two-local factor structure on top of a
sparse idiosyncratic covariance.  Every random draw comes from a
counter-style stream keyed by (seed, replication, purpose), so Monte
Carlo replications are independent and can run in parallel without any
shared RNG state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .linalg import cholesky_lower, spd_inverse
from .types import GroupLabels, ReturnPanel, SymMatrix

__all__ = [
    "DgpConfig",
    "GroundTruth",
    "GLOBAL_FACTOR_COV",
    "LOCAL_FACTOR_COV",
    "purpose_stream",
    "sample_loadings",
    "sample_idiosyncratic_covariance",
    "contiguous_labels",
    "generate_panel",
]

# Population factor covariances; both are deliberately near-singular so
# the common components do not drown the local structure.
GLOBAL_FACTOR_COV = np.array([
    [4.01, -1.0, -1.0, -1.0, -1.0],
    [-1.0, 1.0, 0.0, 0.0, 0.0],
    [-1.0, 0.0, 1.0, 0.0, 0.0],
    [-1.0, 0.0, 0.0, 1.0, 0.0],
    [-1.0, 0.0, 0.0, 0.0, 1.0],
])
LOCAL_FACTOR_COV = np.array([[0.26, -0.25], [-0.25, 0.25]])

IDIO_SCALE = 0.03

# Stable stream identifiers; changing these renumbers every stream.
_PURPOSES = {
    "loadings": 1,
    "local_scales": 2,
    "idio": 3,
    "factors_global": 4,
    "factors_local": 5,
    "errors": 6,
}


@dataclass(frozen=True)
class DgpConfig:
    """Panel dimensions, factor counts, and the master seed."""

    num_groups: int
    group_size: int
    T: int
    r_c: int = 5
    r_g: int = 2
    seed: int = 0

    def __post_init__(self):
        for name in ("num_groups", "group_size", "T", "r_c", "r_g"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"DgpConfig.{name} must be >= 1")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")

    @property
    def p(self) -> int:
        return self.num_groups * self.group_size


@dataclass(frozen=True)
class GroundTruth:
    """Everything the evaluation layer needs about a simulated panel."""

    labels: GroupLabels
    loadings_global: np.ndarray
    loadings_local: np.ndarray
    sigma_c: SymMatrix
    sigma_g_scales: np.ndarray
    sigma_u: SymMatrix
    sigma_true: SymMatrix


def purpose_stream(seed: int, replication: int, purpose: str) -> np.random.Generator:
    """Independent generator keyed by (seed, replication, purpose)."""
    try:
        tag = _PURPOSES[purpose]
    except KeyError:
        raise ConfigError(f"unknown stream purpose {purpose!r}") from None
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(replication), tag]))


def contiguous_labels(cfg: DgpConfig) -> GroupLabels:
    """Assets 1..|G| in group 1, the next |G| in group 2, and so on."""
    a = np.repeat(np.arange(1, cfg.num_groups + 1), cfg.group_size)
    return GroupLabels(a, cfg.num_groups)


def sample_loadings(cfg: DgpConfig,
                    rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Draw global (p x r_c) and local (p x r_g) factor loadings.

    First columns are Uniform(0.2, 1.8) and Uniform(0.5, 1.5); later
    columns perturb the first by Uniform(+-0.16) and Uniform(+-0.3).
    """
    p = cfg.p
    b_c = np.empty((p, cfg.r_c))
    b_c[:, 0] = rng.uniform(0.2, 1.8, size=p)
    if cfg.r_c > 1:
        b_c[:, 1:] = b_c[:, :1] + rng.uniform(-0.16, 0.16, size=(p, cfg.r_c - 1))
    b_g = np.empty((p, cfg.r_g))
    b_g[:, 0] = rng.uniform(0.5, 1.5, size=p)
    if cfg.r_g > 1:
        b_g[:, 1:] = b_g[:, :1] + rng.uniform(-0.3, 0.3, size=(p, cfg.r_g - 1))
    return b_c, b_g


def sample_idiosyncratic_covariance(cfg: DgpConfig, labels: GroupLabels,
                                    rng: np.random.Generator) -> SymMatrix:
    """Sparse SPD idiosyncratic covariance.

    Builds an inverse as Gamma(50,50) diagonal precision plus, for each
    unordered group pair selected with probability
    1/(J*sqrt(log J)), a rank-one coupling (d1+d2)(d1+d2)^T where each d
    has a single N(0, 1/4) entry at a uniform position inside its group.
    The covariance is 0.03**2 times the inverse of that sum.
    """
    if cfg.num_groups < 2:
        raise ConfigError("idiosyncratic covariance requires num_groups >= 2")
    p = cfg.p
    precision = np.diag(rng.gamma(shape=50.0, scale=1.0 / 50.0, size=p))
    rate = 1.0 / (cfg.num_groups * np.sqrt(np.log(cfg.num_groups)))
    for j1 in range(1, cfg.num_groups + 1):
        for j2 in range(j1 + 1, cfg.num_groups + 1):
            if rng.random() >= rate:
                continue
            d = np.zeros(p)
            for g in (j1, j2):
                members = labels.members(g)
                idx = members[rng.integers(0, members.size)]
                d[idx] = rng.normal(0.0, 0.5)
            precision += np.outer(d, d)
    inv = spd_inverse(SymMatrix(precision, role="precision"))
    return SymMatrix(IDIO_SCALE ** 2 * inv.values, role="covariance")


def _embed_local(block: np.ndarray, members: np.ndarray, p: int) -> np.ndarray:
    out = np.zeros((p, p))
    out[np.ix_(members, members)] = block
    return out


def _assemble_sigma_true(b_c, b_g, labels, sigma_g2, sigma_u) -> SymMatrix:
    p = b_c.shape[0]
    sigma = b_c @ GLOBAL_FACTOR_COV @ b_c.T
    for g in range(1, labels.num_groups + 1):
        members = labels.members(g)
        bg = b_g[members]
        block = sigma_g2[g - 1] * (bg @ LOCAL_FACTOR_COV @ bg.T)
        sigma += _embed_local(block, members, p)
    sigma += sigma_u.values
    return SymMatrix((sigma + sigma.T) / 2.0, role="covariance")


def generate_panel(cfg: DgpConfig,
                   replication: int = 0) -> tuple[ReturnPanel, GroundTruth]:
    """Simulate one panel and its ground truth.

    ``replication`` selects an independent stream family under the same
    seed; fixed (seed, replication) reproduces the panel bit for bit.
    """
    if cfg.r_c != GLOBAL_FACTOR_COV.shape[0] or cfg.r_g != LOCAL_FACTOR_COV.shape[0]:
        raise ConfigError(
            f"factor counts ({cfg.r_c}, {cfg.r_g}) must match the population "
            f"factor covariances ({GLOBAL_FACTOR_COV.shape[0]}, {LOCAL_FACTOR_COV.shape[0]})")
    labels = contiguous_labels(cfg)
    p = cfg.p

    b_c, b_g = sample_loadings(cfg, purpose_stream(cfg.seed, replication, "loadings"))
    sigma_g = purpose_stream(cfg.seed, replication, "local_scales").gamma(
        shape=5.0, scale=1.0 / 5.0, size=cfg.num_groups)
    sigma_g2 = sigma_g ** 2
    sigma_u = sample_idiosyncratic_covariance(
        cfg, labels, purpose_stream(cfg.seed, replication, "idio"))

    f_c = purpose_stream(cfg.seed, replication, "factors_global").standard_normal(
        (cfg.T, cfg.r_c)) @ cholesky_lower(GLOBAL_FACTOR_COV).T
    values = f_c @ b_c.T

    chol_g = cholesky_lower(LOCAL_FACTOR_COV).T
    rng_local = purpose_stream(cfg.seed, replication, "factors_local")
    for g in range(1, cfg.num_groups + 1):
        members = labels.members(g)
        f_g = sigma_g[g - 1] * (rng_local.standard_normal((cfg.T, cfg.r_g)) @ chol_g)
        values[:, members] += f_g @ b_g[members].T

    chol_u = cholesky_lower(sigma_u, role="covariance")
    values += purpose_stream(cfg.seed, replication, "errors").standard_normal(
        (cfg.T, p)) @ chol_u.T

    truth = GroundTruth(
        labels=labels,
        loadings_global=b_c,
        loadings_local=b_g,
        sigma_c=SymMatrix(GLOBAL_FACTOR_COV, role="covariance"),
        sigma_g_scales=sigma_g2,
        sigma_u=sigma_u,
        sigma_true=_assemble_sigma_true(b_c, b_g, labels, sigma_g2, sigma_u),
    )
    return ReturnPanel.from_values(values), truth
