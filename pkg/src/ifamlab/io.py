"""CSV and JSON serialization.

All CSVs use '.' decimal, comma delimiter, a header row, UTF-8, and LF
newlines.  Floats are written with round-trip precision so reruns are
byte-identical.  Return panels put a date or integer index in the first
column and one asset per remaining column.
"""

from __future__ import annotations

import json
import hashlib
import subprocess
import time
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import DataError
from .types import BacktestLedger, GroupLabels, ReturnPanel, SymMatrix

__all__ = [
    "write_csv",
    "write_returns",
    "read_returns",
    "write_labels",
    "read_labels",
    "write_matrix",
    "read_matrix",
    "write_ledger",
    "read_sectors",
    "config_hash",
    "write_manifest",
]


def write_csv(df: pd.DataFrame, path: Path | str) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, lineterminator="\n", encoding="utf-8")


def write_returns(panel: ReturnPanel, path: Path | str,
                  index=None) -> None:
    """Panel to CSV: first column 'date', remaining columns one asset each."""
    idx = np.arange(panel.T) if index is None else np.asarray(index)
    df = pd.DataFrame(panel.values, columns=list(panel.asset_ids))
    df.insert(0, "date", idx)
    write_csv(df, path)


def read_returns(path: Path | str) -> ReturnPanel:
    """CSV to panel.  Missing or non-numeric values are rejected."""
    try:
        df = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, UnicodeDecodeError) as exc:
        raise DataError(f"cannot read returns CSV {path}: {exc}") from exc
    if df.shape[1] < 2:
        raise DataError(f"{path}: need a date column plus at least one asset")
    body = df.iloc[:, 1:]
    asset_ids = [str(c) for c in body.columns]
    values = body.to_numpy()
    if values.dtype == object or not np.issubdtype(values.dtype, np.number):
        bad = next(c for c in body.columns
                   if not np.issubdtype(body[c].dtype, np.number))
        raise DataError(f"{path}: column {bad!r} is not numeric")
    if np.isnan(values).any():
        row, col = np.argwhere(np.isnan(values))[0]
        raise DataError(
            f"{path}: missing value at row {row + 2}, column {asset_ids[col]!r} "
            f"(missing data is rejected, not imputed)")
    return ReturnPanel(values.astype(np.float64), tuple(asset_ids))


def write_labels(labels: GroupLabels, asset_ids, path: Path | str) -> None:
    df = pd.DataFrame({"asset_id": list(asset_ids),
                       "group": labels.assignments})
    write_csv(df, path)


def read_labels(path: Path | str, asset_ids=None) -> GroupLabels:
    try:
        df = pd.read_csv(path)
    except (OSError, pd.errors.ParserError) as exc:
        raise DataError(f"cannot read labels CSV {path}: {exc}") from exc
    if "asset_id" not in df.columns or "group" not in df.columns:
        raise DataError(f"{path}: expected columns asset_id, group")
    if asset_ids is not None:
        order = {str(a): i for i, a in enumerate(asset_ids)}
        missing = set(order) - set(df["asset_id"].astype(str))
        if missing:
            raise DataError(f"{path}: no group for assets {sorted(missing)[:5]}")
        df = df.set_index(df["asset_id"].astype(str)).loc[list(order)]
    return GroupLabels.from_assignments(df["group"].to_numpy())


def write_matrix(matrix: SymMatrix | np.ndarray, asset_ids, path: Path | str) -> None:
    values = matrix.values if isinstance(matrix, SymMatrix) else np.asarray(matrix)
    df = pd.DataFrame(values, columns=list(asset_ids))
    df.insert(0, "asset_id", list(asset_ids))
    write_csv(df, path)


def read_matrix(path: Path | str) -> tuple[np.ndarray, list[str]]:
    df = pd.read_csv(path)
    ids = df["asset_id"].astype(str).tolist()
    return df.drop(columns=["asset_id"]).to_numpy(), ids


def write_ledger(ledger: BacktestLedger, c0: float, path: Path | str) -> None:
    rows = [{"step": i, "window_end": r.window_end_index, "c0": c0,
             "realized_return": r.realized_return,
             "l1_norm": float(np.abs(r.weights.weights).sum())}
            for i, r in enumerate(ledger.records)]
    write_csv(pd.DataFrame(rows), path)


def read_sectors(path: Path | str, asset_ids) -> tuple[str, ...]:
    """Sector CSV: asset_id, sector.  Every asset must be covered."""
    try:
        df = pd.read_csv(path)
    except (OSError, pd.errors.ParserError) as exc:
        raise DataError(f"cannot read sectors CSV {path}: {exc}") from exc
    if "asset_id" not in df.columns or "sector" not in df.columns:
        raise DataError(f"{path}: expected columns asset_id, sector")
    mapping = dict(zip(df["asset_id"].astype(str), df["sector"].astype(str)))
    missing = [a for a in asset_ids if str(a) not in mapping]
    if missing:
        raise DataError(f"{path}: no sector for assets {missing[:5]}")
    return tuple(mapping[str(a)] for a in asset_ids)


def config_hash(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"),
                           ensure_ascii=False, default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _version_string() -> str:
    from . import __version__
    try:
        described = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True, text=True, timeout=5,
            cwd=Path(__file__).parent).stdout.strip()
    except (OSError, subprocess.SubprocessError):
        described = ""
    return f"ifamlab-{__version__}" + (f"+{described}" if described else "")


def write_manifest(config: dict, seed: int, output_dir: Path | str,
                   started: float) -> None:
    manifest = {
        "config": config,
        "config_hash": config_hash(config),
        "seed": seed,
        "version": _version_string(),
        "wall_time_seconds": round(time.time() - started, 3),
    }
    path = Path(output_dir) / "manifest.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")
