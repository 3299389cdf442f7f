"""Shared data containers.

Matrices travel through the pipeline as :class:`SymMatrix` instances so
that symmetry is enforced once, at the boundary, and every consumer can
rely on it.  The ``role`` tag is carried along purely for diagnostics
(error messages name the role of the offending matrix).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

MATRIX_ROLES = ("covariance", "precision", "adjacency", "generic")


@dataclass(frozen=True)
class SymMatrix:
    """Dense symmetric p x p matrix with a role tag.

    The lower triangle is authoritative: the constructor mirrors it so
    ``values[i, j] == values[j, i]`` holds exactly, bit for bit.
    """

    values: np.ndarray
    role: str = "generic"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise DataError(f"SymMatrix requires a square array, got shape {v.shape}")
        if v.shape[0] < 1:
            raise DataError("SymMatrix requires dim >= 1")
        if not np.all(np.isfinite(v)):
            raise DataError(f"SymMatrix({self.role}) contains non-finite entries")
        if self.role not in MATRIX_ROLES:
            raise DataError(f"unknown matrix role {self.role!r}")
        tril = np.tril(v)
        sym = tril + tril.T - np.diag(np.diag(v))
        sym.setflags(write=False)
        object.__setattr__(self, "values", sym)

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    @classmethod
    def ensure(cls, m: "SymMatrix | np.ndarray", role: str = "generic",
               atol: float = 1e-8) -> "SymMatrix":
        """Coerce an array-like to SymMatrix, rejecting asymmetric input."""
        if isinstance(m, SymMatrix):
            return m
        v = np.asarray(m, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise DataError(f"expected a square matrix, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise DataError(f"matrix ({role}) contains non-finite entries")
        if not np.allclose(v, v.T, atol=atol, rtol=0.0):
            raise DataError(f"matrix ({role}) is not symmetric within {atol}")
        return cls(v, role)


@dataclass(frozen=True)
class EigenDecomposition:
    """Full spectral decomposition, eigenvalues sorted descending.

    ``vectors`` holds eigenvectors in columns, orthonormal, with the
    sign convention that the largest-magnitude component of each column
    is positive (first such index on ties).
    """

    values: np.ndarray
    vectors: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        object.__setattr__(self, "vectors", np.asarray(self.vectors, dtype=np.float64))
        if np.any(np.diff(self.values) > 0):
            raise DataError("eigenvalues must be sorted non-increasing")


@dataclass(frozen=True)
class ReturnPanel:
    """T x p observation panel with unique asset identifiers."""

    values: np.ndarray
    asset_ids: tuple[str, ...]

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise DataError(f"panel must be 2-D, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise DataError("panel contains non-finite entries")
        ids = tuple(str(a) for a in self.asset_ids)
        if len(ids) != v.shape[1]:
            raise DataError(
                f"{len(ids)} asset ids for {v.shape[1]} columns")
        if len(set(ids)) != len(ids):
            raise DataError("asset ids must be unique")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "asset_ids", ids)

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    @classmethod
    def from_values(cls, values: np.ndarray) -> "ReturnPanel":
        values = np.asarray(values)
        p = values.shape[1]
        width = max(4, len(str(p)))
        ids = tuple(f"A{i + 1:0{width}d}" for i in range(p))
        return cls(values, ids)

    def window(self, start: int, stop: int) -> "ReturnPanel":
        return ReturnPanel(self.values[start:stop], self.asset_ids)


@dataclass(frozen=True)
class GroupLabels:
    """Assignment of p assets to groups 1..K, every group non-empty."""

    assignments: np.ndarray
    num_groups: int

    def __post_init__(self):
        a = np.asarray(self.assignments, dtype=np.int64)
        if a.ndim != 1:
            raise DataError("assignments must be a 1-D vector")
        if self.num_groups < 1:
            raise DataError("num_groups must be >= 1")
        if a.min(initial=1) < 1 or a.max(initial=self.num_groups) > self.num_groups:
            raise DataError("labels must lie in [1..num_groups]")
        present = np.unique(a)
        if present.size != self.num_groups:
            missing = sorted(set(range(1, self.num_groups + 1)) - set(present.tolist()))
            raise DataError(f"empty groups: {missing}")
        a = a.copy()
        a.setflags(write=False)
        object.__setattr__(self, "assignments", a)

    @property
    def p(self) -> int:
        return self.assignments.shape[0]

    def members(self, group: int) -> np.ndarray:
        """Indices of the assets assigned to ``group`` (1-based group id)."""
        return np.flatnonzero(self.assignments == group)

    @classmethod
    def from_assignments(cls, assignments) -> "GroupLabels":
        a = np.asarray(assignments, dtype=np.int64)
        return cls(a, int(a.max(initial=0)))


@dataclass(frozen=True)
class WeightedAdjacency:
    """Symmetric weighted adjacency with zero diagonal.

    ``signed`` is True only for the GLASSO benchmark matrix, which keeps
    negated off-diagonal precision entries of either sign; all other
    sources are nonnegative.
    """

    values: np.ndarray
    source: str = "ifam"
    signed: bool = False

    def __post_init__(self):
        if self.source not in ("ifam", "cov", "glasso_signed"):
            raise DataError(f"unknown adjacency source {self.source!r}")
        m = SymMatrix.ensure(self.values, role="adjacency")
        v = m.values.copy()
        if np.any(np.diag(v) != 0.0):
            raise DataError("adjacency diagonal must be zero")
        if not self.signed and np.any(v < 0.0):
            raise DataError("unsigned adjacency must be nonnegative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def dim(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class PortfolioWeights:
    """Fully-invested weight vector with the gross exposure bound used."""

    weights: np.ndarray
    c0: float

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 1:
            raise DataError("weights must be a vector")
        if abs(w.sum() - 1.0) > 1e-8:
            raise DataError(f"weights sum to {w.sum():.12g}, expected 1")
        if np.abs(w).sum() > self.c0 + 1e-8:
            raise DataError(
                f"gross exposure {np.abs(w).sum():.12g} exceeds bound {self.c0}")
        w = w.copy()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)


@dataclass(frozen=True)
class LedgerRecord:
    """One rolling-backtest step."""

    window_end_index: int
    weights: PortfolioWeights
    realized_return: float


@dataclass
class BacktestLedger:
    """Ordered sequence of backtest records."""

    records: list[LedgerRecord] = field(default_factory=list)

    def append(self, record: LedgerRecord) -> None:
        if self.records and record.window_end_index <= self.records[-1].window_end_index:
            raise DataError("window_end_index must be strictly increasing")
        self.records.append(record)

    def realized_returns(self) -> np.ndarray:
        return np.array([r.realized_return for r in self.records], dtype=np.float64)

    def __len__(self) -> int:
        return len(self.records)
