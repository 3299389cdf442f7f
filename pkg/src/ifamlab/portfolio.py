"""Minimum-variance allocation under a gross-exposure bound, plus
rolling-backtest risk accounting.

The allocation problem is min w'Sw subject to sum(w) = 1 and
||w||_1 <= c0.  When the unconstrained minimum-variance weights already
satisfy the exposure bound they are returned in closed form; otherwise
the problem is solved as a QP on the split w = w+ - w-.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, InfeasibleError, NumericalError
from .linalg import cholesky_lower
from .types import (BacktestLedger, GroupLabels, LedgerRecord, PortfolioWeights,
                    ReturnPanel, SymMatrix)

__all__ = [
    "gmv_weights",
    "min_variance_weights",
    "min_variance_kkt_violation",
    "expected_risk",
    "realized_annualized_risk",
    "BacktestConfig",
    "rolling_backtest",
]

_QP_OPTIONS = {
    "show_progress": False,
    "abstol": 1e-10,
    "reltol": 1e-10,
    "feastol": 1e-10,
    "maxiters": 200,
}


def gmv_weights(cov: SymMatrix | np.ndarray) -> np.ndarray:
    """Closed-form global minimum-variance weights S^-1 1 / (1' S^-1 1)."""
    cov = SymMatrix.ensure(cov, role="covariance")
    from scipy.linalg import cho_solve
    c = cholesky_lower(cov, role="covariance")
    x = cho_solve((c, True), np.ones(cov.dim))
    return x / x.sum()


def _solve_qp(sigma: np.ndarray, c0: float) -> np.ndarray:
    from cvxopt import matrix, solvers
    p = sigma.shape[0]
    big = np.block([[sigma, -sigma], [-sigma, sigma]])
    q = np.zeros(2 * p)
    g = np.vstack([-np.eye(2 * p), np.ones((1, 2 * p))])
    h = np.concatenate([np.zeros(2 * p), [c0]])
    a = np.concatenate([np.ones(p), -np.ones(p)])[None, :]
    b = np.array([1.0])
    sol = solvers.qp(matrix(big), matrix(q), matrix(g), matrix(h),
                     matrix(a), matrix(b), options=_QP_OPTIONS)
    if sol["status"] != "optimal":
        raise NumericalError(f"QP solver returned status {sol['status']!r}")
    x = np.asarray(sol["x"]).ravel()
    return x[:p] - x[p:]


def min_variance_weights(cov: SymMatrix | np.ndarray, c0: float) -> PortfolioWeights:
    """Minimum-variance weights under sum(w)=1 and ||w||_1 <= c0.

    c0 must be at least 1: the budget constraint forces ||w||_1 >= 1.
    """
    if c0 < 1.0:
        raise InfeasibleError(f"c0={c0} < 1 leaves no feasible portfolio")
    cov = SymMatrix.ensure(cov, role="covariance")
    gmv = gmv_weights(cov)
    if np.abs(gmv).sum() <= c0:
        return PortfolioWeights(gmv, c0)
    w = _solve_qp(cov.values, c0)
    # interior-point splits can overshoot feasibility by solver tolerance;
    # rescale the strictly dominant side back onto the budget hyperplane
    total = w.sum()
    if abs(total - 1.0) > 1e-12:
        w = w / total
    return PortfolioWeights(w, c0)


def min_variance_kkt_violation(cov: SymMatrix | np.ndarray,
                               w: PortfolioWeights) -> float:
    """Stationarity residual of a solve.

    At the optimum, 2*S*w + lam*1 + mu*g = 0 with g in the L1-norm
    subgradient, mu >= 0, and mu = 0 when the exposure constraint is
    slack.  Returns the max-norm residual after concentrating lam and
    mu out analytically.
    """
    cov = SymMatrix.ensure(cov).values
    weights = w.weights
    grad = 2.0 * cov @ weights
    slack = w.c0 - np.abs(weights).sum()
    active = slack <= 1e-7
    nz = np.abs(weights) > 1e-9
    if not active:
        # grad must be constant across assets (pure budget multiplier)
        return float(grad.max() - grad.min()) / 2.0
    s = np.sign(weights)
    if np.unique(s[nz]).size == 1:
        # single-sign actives: only lam + mu*s is identified; actives need a
        # flat gradient and zero weights a gradient on the right side of it
        sign = float(s[nz][0])
        resid = float(grad[nz].max() - grad[nz].min())
        if (~nz).any():
            level = float(grad[nz].mean())
            gap = (level - grad[~nz]) if sign > 0 else (grad[~nz] - level)
            resid = max(resid, float(max(gap.max(), 0.0)))
        return resid / 2.0
    # lam + mu*s_i = -grad_i on non-zeros: fit (lam, mu) by least squares
    design = np.column_stack([np.ones(int(nz.sum())), s[nz]])
    coef, *_ = np.linalg.lstsq(design, -grad[nz], rcond=None)
    lam, mu = float(coef[0]), float(coef[1])
    resid = float(np.abs(grad[nz] + lam + mu * s[nz]).max())
    if mu < -1e-7:
        resid = max(resid, -mu)
    # zero weights need |grad_i + lam| <= mu
    if (~nz).any():
        resid = max(resid, float((np.abs(grad[~nz] + lam) - abs(mu)).max()))
    return resid / 2.0


def expected_risk(w: PortfolioWeights, sigma_true: SymMatrix | np.ndarray) -> float:
    """Quadratic form w' S w against a reference covariance."""
    sigma = SymMatrix.ensure(sigma_true).values
    if sigma.shape[0] != w.weights.shape[0]:
        raise DataError(
            f"dimension mismatch: {w.weights.shape[0]} weights, "
            f"{sigma.shape[0]}x{sigma.shape[0]} covariance")
    return float(w.weights @ sigma @ w.weights)


def realized_annualized_risk(ledger: BacktestLedger) -> float:
    """sqrt((52/m) * sum of squared realized weekly returns)."""
    if len(ledger) == 0:
        raise DataError("ledger is empty")
    r = ledger.realized_returns()
    return float(np.sqrt(52.0 / r.size * np.sum(r ** 2)))


@dataclass(frozen=True)
class BacktestConfig:
    """Rolling-window protocol parameters.

    Labels are re-estimated every ``label_refit_every`` steps on the
    trailing ``ifam_window`` rows; the covariance refits every step on
    the trailing ``poet_window`` rows.  ``num_groups`` fixes the cluster
    count; when None it is selected by cross-validation over
    ``k_candidates`` at each label refit.
    """

    ifam_window: int = 500
    poet_window: int = 50
    c0: float = 2.0
    method: str = "ifam"
    num_groups: int | None = None
    k_candidates: tuple[int, ...] = (2, 3, 4, 5, 6, 7, 8, 9, 10)
    label_refit_every: int = 1
    threshold: str = "min_pd"
    sector_labels: tuple[str, ...] | None = None
    r_c: int | str = "auto"
    rho_grid: tuple[float, ...] | None = None
    seed: int = 0

    def __post_init__(self):
        if self.ifam_window < 2 or self.poet_window < 2:
            raise DataError("windows must be >= 2")
        if self.poet_window > self.ifam_window:
            raise DataError("poet_window cannot exceed ifam_window")
        if self.c0 < 1.0:
            raise DataError("c0 must be >= 1")
        if self.label_refit_every < 1:
            raise DataError("label_refit_every must be >= 1")
        if self.method not in ("ifam", "cov", "glasso", "nationality"):
            raise DataError(f"unknown method {self.method!r}")
        if self.method == "nationality" and self.sector_labels is None:
            raise DataError("nationality method requires sector_labels")


def rolling_backtest(panel: ReturnPanel, config: BacktestConfig) -> BacktestLedger:
    """Weekly rolling minimum-variance backtest.

    Step k fits labels on rows [k-ifam_window, k), fits Double-POET on
    rows [k-poet_window, k), solves the weights, and realizes w'Y_k.
    One trailing row is left unconsumed so every step has a complete
    window and a realized return.
    """
    from .pipeline import detect_groups

    T = panel.T
    w = config.ifam_window
    if T <= w:
        raise DataError(f"panel of T={T} cannot support an ifam_window of {w}")
    ledger = BacktestLedger()
    labels: GroupLabels | None = None
    steps_since_fit = None
    for k in range(w, T - 1):
        if config.method == "nationality":
            labels = GroupLabels.from_assignments(
                _sector_codes(config.sector_labels))
        elif labels is None or steps_since_fit >= config.label_refit_every:
            fit_panel = panel.window(k - w, k)
            labels = detect_groups(
                fit_panel, method=config.method, num_groups=config.num_groups,
                k_candidates=config.k_candidates, r_c=config.r_c,
                rho_grid=config.rho_grid, seed=config.seed)
            steps_since_fit = 0
        poet_panel = panel.window(k - config.poet_window, k)
        sigma = double_poet_from_labels(poet_panel, labels, config)
        weights = min_variance_weights(sigma, config.c0)
        realized = float(weights.weights @ panel.values[k])
        ledger.append(LedgerRecord(k, weights, realized))
        steps_since_fit += 1
    return ledger


def _sector_codes(sector_labels) -> np.ndarray:
    codes, seen = [], {}
    for s in sector_labels:
        if s not in seen:
            seen[s] = len(seen) + 1
        codes.append(seen[s])
    return np.asarray(codes, dtype=np.int64)


def double_poet_from_labels(poet_panel: ReturnPanel, labels: GroupLabels,
                            config: BacktestConfig) -> SymMatrix:
    from .doublepoet import double_poet_estimate

    return double_poet_estimate(
        poet_panel, labels, r_c=config.r_c, threshold=config.threshold,
        sector_labels=config.sector_labels)
