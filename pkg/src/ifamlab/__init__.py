"""Latent local-group detection in return panels via precision-matrix
adjacency, with structured large-covariance estimation and
minimum-variance allocation on top."""

__version__ = "0.1.0"

from .adjacency import (build_benchmark_adjacency, build_ifam, edge_densities,
                        normalize_adjacency, summarize_densities,
                        threshold_binary)
from .clustering import adjusted_rand_index, rsc_cluster, select_num_clusters
from .dgp import DgpConfig, GroundTruth, generate_panel
from .doublepoet import (double_poet_estimate, hard_threshold_min_pd,
                         sector_threshold)
from .errors import (ConfigError, ConvergenceError, DataError, IfamError,
                     InfeasibleError, NotPositiveDefiniteError, NumericalError)
from .factors import eigenvalue_ratio, factor_adjust, sample_covariance
from .linalg import matrix_norms, spd_inverse, sym_eigen
from .pipeline import adjacency_for_method, detect_groups
from .portfolio import (BacktestConfig, expected_risk, gmv_weights,
                        min_variance_weights, realized_annualized_risk,
                        rolling_backtest)
from .precision import (GlassoSettings, bic_select_rho,
                        factor_adjusted_precision, glasso_solve,
                        simplified_inverse_oracle, smw_reconstruct)
from .types import (BacktestLedger, EigenDecomposition, GroupLabels,
                    PortfolioWeights, ReturnPanel, SymMatrix,
                    WeightedAdjacency)

__all__ = [
    "DgpConfig", "GroundTruth", "generate_panel",
    "SymMatrix", "EigenDecomposition", "ReturnPanel", "GroupLabels",
    "WeightedAdjacency", "PortfolioWeights", "BacktestLedger",
    "sym_eigen", "spd_inverse", "matrix_norms",
    "sample_covariance", "eigenvalue_ratio", "factor_adjust",
    "GlassoSettings", "glasso_solve", "bic_select_rho",
    "factor_adjusted_precision", "smw_reconstruct", "simplified_inverse_oracle",
    "build_ifam", "normalize_adjacency", "build_benchmark_adjacency",
    "threshold_binary", "edge_densities", "summarize_densities",
    "rsc_cluster", "select_num_clusters", "adjusted_rand_index",
    "double_poet_estimate", "hard_threshold_min_pd", "sector_threshold",
    "gmv_weights", "min_variance_weights", "expected_risk",
    "realized_annualized_risk", "BacktestConfig", "rolling_backtest",
    "adjacency_for_method", "detect_groups",
    "IfamError", "ConfigError", "DataError", "NumericalError",
    "NotPositiveDefiniteError", "ConvergenceError", "InfeasibleError",
]
