"""Parse run logs, aggregate a frontier table, render report files."""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
import pandas as pd

FRONTIER_COLUMNS = [
    "dataset", "method", "setting", "n_seeds", "n_failed",
    "macro_f1_mean", "macro_f1_std", "micro_f1_mean", "micro_f1_std",
    "dp_mean", "dp_std", "eop_mean", "eop_std", "sat_pct", "single_seed",
]


class ReportError(RuntimeError):
    pass


def load_run_log(path) -> dict:
    """One run JSONL -> {"config", "rows", "final", "failed"}."""
    config = None
    rows = []
    final = None
    failed = None
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            if "config" in obj and config is None:
                config = obj["config"]
            elif obj.get("final"):
                if obj.get("completed"):
                    final = obj
                else:
                    failed = obj.get("failed", "unknown failure")
            else:
                rows.append(obj)
    if config is None:
        raise ReportError(f"{path}: no config line found")
    return {"config": config, "rows": rows, "final": final, "failed": failed,
            "path": str(path)}


def dataset_label(config: dict) -> str:
    ds = config.get("dataset", {})
    if ds.get("kind") == "csv":
        return Path(ds.get("path", "csv")).stem
    return "synth"


def setting_label(config: dict) -> str:
    method = config["method"]
    if method == "static":
        return f"static@{config.get('lam', 0):g}"
    if method in ("emap", "pi", "dualasc"):
        return f"{method}@f={config.get('target_fraction', 0.5):g}"
    return method


def collect_runs(in_dir) -> list[dict]:
    in_dir = Path(in_dir)
    manifest = in_dir / "manifest.json"
    if manifest.exists():
        with open(manifest) as fh:
            files = [in_dir / entry["file"] for entry in json.load(fh)["runs"]]
    else:
        files = sorted(in_dir.glob("*.jsonl"))
    if not files:
        raise ReportError(f"no run logs under {in_dir}")
    return [load_run_log(f) for f in files]


def _mean_std(values):
    vals = [v for v in values if v is not None and math.isfinite(v)]
    if not vals:
        return float("nan"), float("nan")
    if len(vals) == 1:
        return float(vals[0]), 0.0
    return float(np.mean(vals)), float(np.std(vals, ddof=1))


def build_frontier(runs) -> pd.DataFrame:
    """One row per (dataset, method, setting), aggregated over seeds."""
    groups: dict[tuple, list[dict]] = {}
    for run in runs:
        key = (dataset_label(run["config"]), run["config"]["method"],
               setting_label(run["config"]))
        groups.setdefault(key, []).append(run)
    rows = []
    for (dataset, method, setting) in sorted(groups):
        bunch = groups[(dataset, method, setting)]
        done = [r for r in bunch if r["final"] is not None]
        metrics = [r["final"]["metrics"] for r in done]
        mf, mf_s = _mean_std([m["macro_f1"] for m in metrics])
        uf, uf_s = _mean_std([m["micro_f1"] for m in metrics])
        dp, dp_s = _mean_std([m["dp_gap"] for m in metrics])
        eo, eo_s = _mean_std([m["eop_gap"] for m in metrics])
        sat = 100.0 * np.mean([bool(m["saturated"]) for m in metrics]) if metrics else float("nan")
        rows.append({
            "dataset": dataset, "method": method, "setting": setting,
            "n_seeds": len(bunch), "n_failed": len(bunch) - len(done),
            "macro_f1_mean": mf, "macro_f1_std": mf_s,
            "micro_f1_mean": uf, "micro_f1_std": uf_s,
            "dp_mean": dp, "dp_std": dp_s, "eop_mean": eo, "eop_std": eo_s,
            "sat_pct": float(sat), "single_seed": len(done) == 1,
        })
    return pd.DataFrame(rows, columns=FRONTIER_COLUMNS)


def build_trajectories(runs) -> pd.DataFrame:
    """Per-epoch controller trajectories for every run, long format."""
    rows = []
    for run in runs:
        cfg = run["config"]
        base = {"dataset": dataset_label(cfg), "method": cfg["method"],
                "setting": setting_label(cfg), "seed": cfg["seed"]}
        for row in run["rows"]:
            ctrl = row.get("ctrl") or {}
            rows.append({**base, "epoch": row["epoch"], "q": row["q"],
                         "B": ctrl.get("B"), "pi": ctrl.get("pi"),
                         "lambda_v": row["lambda_v"], "lambda_h": row["lambda_h"],
                         "v": row["v"], "r": row["r"]})
    return pd.DataFrame(rows).sort_values(
        ["dataset", "method", "setting", "seed", "epoch"], kind="stable"
    ).reset_index(drop=True)


def render_summary(frontier: pd.DataFrame, runs) -> str:
    lines = ["run summary", "==========", ""]
    lines.append(f"{'dataset':<10} {'setting':<16} {'macroF1':>16} {'DP gap':>16} "
                 f"{'EOp':>16} {'Sat%':>6} {'fail':>5}")
    for _, r in frontier.iterrows():
        def pm(mean, std):
            if not math.isfinite(mean):
                return "n/a"
            return f"{mean:.4f}+-{std:.4f}"
        lines.append(
            f"{r.dataset:<10} {r.setting:<16} {pm(r.macro_f1_mean, r.macro_f1_std):>16} "
            f"{pm(r.dp_mean, r.dp_std):>16} {pm(r.eop_mean, r.eop_std):>16} "
            f"{r.sat_pct:>6.1f} {int(r.n_failed):>5}"
        )
    failures = [(run["path"], run["failed"]) for run in runs if run["failed"]]
    if failures:
        lines += ["", "failed runs:"]
        lines += [f"  {p}: {msg}" for p, msg in failures]
    single = frontier[frontier.single_seed]
    if len(single):
        lines += ["", "note: std over a single seed reported as 0 for: "
                  + ", ".join(single.setting.tolist())]
    return "\n".join(lines) + "\n"


def write_report(in_dir, runs=None) -> str:
    """(Re)render frontier.csv, trajectories.csv and summary.txt from run logs."""
    in_dir = Path(in_dir)
    runs = collect_runs(in_dir) if runs is None else runs
    frontier = build_frontier(runs)
    frontier.to_csv(in_dir / "frontier.csv", index=False)
    build_trajectories(runs).to_csv(in_dir / "trajectories.csv", index=False)
    summary = render_summary(frontier, runs)
    (in_dir / "summary.txt").write_text(summary)
    return summary


def decompose(final_metrics: dict, primary_dim: int) -> dict:
    """Per-dimension slices plus the binary metrics at a chosen primary dimension."""
    per_dp = final_metrics["per_dim_dp"]
    if not (0 <= primary_dim < len(per_dp)):
        raise ReportError(f"primary dimension {primary_dim} out of range")
    return {
        "per_dim_dp": list(per_dp),
        "per_dim_f1": list(final_metrics["per_dim_f1"]),
        "binary_dp": per_dp[primary_dim],
        "binary_eod": final_metrics["per_dim_eod"][primary_dim],
        "primary_dim": primary_dim,
    }
