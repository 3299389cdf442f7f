"""Command-line interface.

    ifam-lab <simulate|cluster|estimate|backtest|experiment>
             --config <json> [--seed N] [--out DIR]
             [--method ifam|cov|glasso] [--truth PATH]

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
failure.  IFAM_THREADS caps the experiment worker count.  Every command
writes a manifest.json recording the configuration, its hash, the seed,
a version string, and wall time; reruns with identical inputs produce
byte-identical data files.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np
import pandas as pd

from .config import RunConfig, load_config
from .errors import ConfigError, DataError, IfamError, NumericalError
from . import io as ifio

logger = logging.getLogger(__name__)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ifam-lab",
        description="Latent-group detection and covariance estimation for return panels")
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in ("simulate", "cluster", "estimate", "backtest", "experiment"):
        p = sub.add_parser(mode)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, help="master seed (overrides config)")
        p.add_argument("--out", help="output directory (overrides config)")
        p.add_argument("--method", choices=("ifam", "cov", "glasso"),
                       help="adjacency method (overrides config)")
        p.add_argument("--truth", help="true labels CSV for evaluation")
    return parser


def cmd_simulate(cfg: RunConfig, out: Path) -> None:
    from .dgp import generate_panel

    panel, truth = generate_panel(cfg.dgp_config())
    ifio.write_returns(panel, out / "returns.csv")
    ifio.write_labels(truth.labels, panel.asset_ids, out / "truth_labels.csv")
    ifio.write_matrix(truth.sigma_true, panel.asset_ids, out / "truth_sigma.csv")


def cmd_cluster(cfg: RunConfig, out: Path) -> None:
    from .clustering import adjusted_rand_index
    from .pipeline import detect_groups

    panel = ifio.read_returns(cfg.input_csv)
    labels, info = detect_groups(
        panel, method=cfg.method, num_groups=cfg.num_groups,
        k_candidates=cfg.k_candidates, r_c=cfg.r_c, rho_grid=cfg.rho_grid,
        seed=cfg.seed, return_info=True)
    adjacency = info.pop("adjacency")
    ifio.write_labels(labels, panel.asset_ids, out / "labels.csv")
    ifio.write_matrix(adjacency.values, panel.asset_ids, out / "adjacency.csv")
    diag = {"method": cfg.method, **info}
    (out / "diagnostics.json").write_text(
        json.dumps(diag, indent=2, sort_keys=True, default=float) + "\n",
        encoding="utf-8")
    if cfg.truth_labels_csv:
        truth = ifio.read_labels(cfg.truth_labels_csv, panel.asset_ids)
        ari = adjusted_rand_index(labels, truth)
        (out / "ari.txt").write_text(f"{ari!r}\n", encoding="utf-8")


def cmd_estimate(cfg: RunConfig, out: Path) -> None:
    from .doublepoet import double_poet_estimate
    from .pipeline import detect_groups

    panel = ifio.read_returns(cfg.input_csv)
    if cfg.labels_csv:
        labels = ifio.read_labels(cfg.labels_csv, panel.asset_ids)
        info = {"labels": "from-file"}
    else:
        labels, info = detect_groups(
            panel, method=cfg.method, num_groups=cfg.num_groups,
            k_candidates=cfg.k_candidates, r_c=cfg.r_c, rho_grid=cfg.rho_grid,
            seed=cfg.seed, return_info=True)
        info.pop("adjacency", None)
    sectors = (ifio.read_sectors(cfg.sectors_csv, panel.asset_ids)
               if cfg.sectors_csv else None)
    sigma = double_poet_estimate(panel, labels, r_c=cfg.r_c,
                                 threshold=cfg.threshold, sector_labels=sectors)
    ifio.write_labels(labels, panel.asset_ids, out / "labels.csv")
    ifio.write_matrix(sigma, panel.asset_ids, out / "sigma.csv")
    (out / "diagnostics.json").write_text(
        json.dumps({"method": cfg.method, "threshold": cfg.threshold, **info},
                   indent=2, sort_keys=True, default=float) + "\n",
        encoding="utf-8")


def cmd_backtest(cfg: RunConfig, out: Path) -> None:
    from .portfolio import BacktestConfig, realized_annualized_risk, rolling_backtest
    from .types import BacktestLedger

    panel = ifio.read_returns(cfg.input_csv)
    if panel.T <= cfg.ifam_window:
        raise DataError(
            f"input has T={panel.T} rows; backtesting needs more than "
            f"ifam_window={cfg.ifam_window}")
    sectors = (ifio.read_sectors(cfg.sectors_csv, panel.asset_ids)
               if cfg.sectors_csv else None)
    summary_rows = []
    for c0 in cfg.c0_grid:
        bt_cfg = BacktestConfig(
            ifam_window=cfg.ifam_window, poet_window=cfg.poet_window,
            c0=float(c0), method=cfg.method, num_groups=cfg.num_groups,
            k_candidates=cfg.k_candidates or (2, 3, 4, 5, 6, 7, 8, 9, 10),
            label_refit_every=cfg.label_refit_every, threshold=cfg.threshold,
            sector_labels=sectors, r_c=cfg.r_c, rho_grid=cfg.rho_grid,
            seed=cfg.seed)
        ledger = rolling_backtest(panel, bt_cfg)
        ifio.write_ledger(ledger, float(c0), out / f"ledger_c0_{c0:g}.csv")
        splits = cfg.period_splits or (len(ledger) // 2,)
        bounds = [0, *splits, len(ledger)]
        periods = {"whole": ledger.records}
        for i in range(len(bounds) - 1):
            periods[f"period{i + 1}"] = ledger.records[bounds[i]:bounds[i + 1]]
        for name, records in periods.items():
            if not records:
                continue
            sub = BacktestLedger(records=list(records))
            summary_rows.append({
                "method": cfg.method, "c0": float(c0), "period": name,
                "steps": len(records),
                "annualized_risk": realized_annualized_risk(sub)})
    ifio.write_csv(pd.DataFrame(summary_rows), out / "summary.csv")


def cmd_experiment(cfg: RunConfig, out: Path) -> None:
    from . import experiments as ex

    dgp = cfg.dgp_config()
    tau_grid = np.asarray(cfg.tau_grid, float) if cfg.tau_grid else None
    t_values = cfg.T_grid or (dgp.T,)
    if "density" in cfg.families:
        rows, summary = ex.run_density_experiment(
            dgp.num_groups, dgp.group_size, dgp.T, cfg.replications,
            seed=dgp.seed, methods=("ifam", "cov"),
            cov_r_values=cfg.cov_r_values, tau_grid=tau_grid,
            rho_grid=cfg.rho_grid)
        for method, chunk in rows.groupby("method", sort=True):
            ifio.write_csv(chunk.drop(columns=["method"]),
                           out / f"densities_{method}.csv")
        ifio.write_csv(summary, out / "density_summary.csv")
    if "ari" in cfg.families:
        settings = [(int(T), dgp.num_groups, dgp.group_size) for T in t_values]
        df = ex.run_ari_experiment(settings, cfg.replications, seed=dgp.seed,
                                   k_candidates=cfg.k_candidates,
                                   rho_grid=cfg.rho_grid)
        ifio.write_csv(df, out / "ari.csv")
    if "norms" in cfg.families:
        df = ex.run_norms_experiment(
            t_values, dgp.num_groups, dgp.group_size, cfg.replications,
            seed=dgp.seed, sources=("ifam", "cov", "glasso", "permuted"),
            k_candidates=cfg.k_candidates)
        ifio.write_csv(df, out / "norms.csv")
    if "risk" in cfg.families:
        df = ex.run_risk_experiment(
            t_values, dgp.num_groups, dgp.group_size, cfg.replications,
            seed=dgp.seed, c0_grid=cfg.c0_grid,
            k_candidates=cfg.k_candidates)
        ifio.write_csv(df, out / "risk.csv")


_COMMANDS = {
    "simulate": cmd_simulate,
    "cluster": cmd_cluster,
    "estimate": cmd_estimate,
    "backtest": cmd_backtest,
    "experiment": cmd_experiment,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    started = time.time()
    try:
        overrides = {"mode": args.mode, "seed": args.seed, "output_dir": args.out,
                     "method": args.method, "truth_labels_csv": args.truth}
        cfg = load_config(args.config, overrides)
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        _COMMANDS[cfg.mode](cfg, out)
        ifio.write_manifest(cfg.echo(), cfg.seed, out, started)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except (NumericalError, IfamError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
