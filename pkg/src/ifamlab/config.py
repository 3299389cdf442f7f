"""Run configuration: JSON file + CLI flag merging and validation.

Precedence is flags > file > defaults.  The JSON schema mirrors
:class:`RunConfig`; unknown keys are rejected so typos fail loudly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path

from .dgp import DgpConfig
from .errors import ConfigError

__all__ = ["RunConfig", "load_config"]

MODES = ("simulate", "cluster", "estimate", "backtest", "experiment")
METHODS = ("ifam", "cov", "glasso")
FAMILIES = ("density", "ari", "norms", "risk")


@dataclass
class RunConfig:
    """Everything a CLI run needs; mode decides which fields matter."""

    mode: str
    seed: int = 0
    output_dir: str = "out"
    method: str = "ifam"
    # simulate / experiment
    dgp: dict | None = None
    replications: int = 20
    families: tuple[str, ...] = ("density", "ari")
    tau_grid: tuple[float, ...] | None = None
    rho_grid: tuple[float, ...] | None = None
    c0_grid: tuple[float, ...] = (1.0, 2.0, 3.0, 4.0)
    T_grid: tuple[int, ...] | None = None
    cov_r_values: tuple[int, ...] | None = None
    # cluster / estimate / backtest
    input_csv: str | None = None
    sectors_csv: str | None = None
    labels_csv: str | None = None
    truth_labels_csv: str | None = None
    num_groups: int | None = None
    k_candidates: tuple[int, ...] | None = None
    r_c: int | str = "auto"
    threshold: str = "min_pd"
    # backtest
    ifam_window: int = 500
    poet_window: int = 50
    label_refit_every: int = 1
    period_splits: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        for name in ("tau_grid", "rho_grid", "c0_grid"):
            grid = getattr(self, name)
            if grid is not None and len(grid) == 0:
                raise ConfigError(f"{name} must be non-empty when given")
        for f in self.families:
            if f not in FAMILIES:
                raise ConfigError(f"unknown experiment family {f!r}")
        if self.mode in ("simulate", "experiment") and self.dgp is None:
            raise ConfigError(f"mode {self.mode!r} requires a dgp section")
        if self.mode in ("cluster", "estimate", "backtest") and self.input_csv is None:
            raise ConfigError(f"mode {self.mode!r} requires input_csv")
        if self.threshold not in ("min_pd", "sector", "none"):
            raise ConfigError(f"unknown threshold {self.threshold!r}")
        if self.threshold == "sector" and self.sectors_csv is None:
            raise ConfigError("sector thresholding requires sectors_csv")

    def dgp_config(self) -> DgpConfig:
        if self.dgp is None:
            raise ConfigError("no dgp section configured")
        allowed = {"num_groups", "group_size", "T", "r_c", "r_g", "seed"}
        unknown = set(self.dgp) - allowed
        if unknown:
            raise ConfigError(f"unknown dgp keys: {sorted(unknown)}")
        spec = dict(self.dgp)
        spec.setdefault("seed", self.seed)
        try:
            return DgpConfig(**spec)
        except TypeError as exc:
            raise ConfigError(f"invalid dgp section: {exc}") from exc

    def echo(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out


def load_config(path: str | None, overrides: dict) -> RunConfig:
    """Merge a JSON config file with CLI overrides (flags win)."""
    data: dict = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"config file {path} must hold a JSON object")
    data.update({k: v for k, v in overrides.items() if v is not None})
    known = {f.name for f in fields(RunConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key in ("families", "tau_grid", "rho_grid", "c0_grid", "T_grid",
                "cov_r_values", "k_candidates", "period_splits"):
        if key in data and data[key] is not None:
            data[key] = tuple(data[key])
    if "mode" not in data:
        raise ConfigError("config must specify a mode")
    try:
        return RunConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
