"""Grid sweeps over methods and seeds, with log files and report rendering."""
from __future__ import annotations

import json
from pathlib import Path

from .config import RunConfig
from .report import collect_runs, write_report
from .train import prepare_dataset, train_run


class SweepError(RuntimeError):
    pass


def _settings(sweep_cfg: dict) -> list[dict]:
    base = dict(sweep_cfg.get("base") or {})
    grid = sweep_cfg.get("grid")
    if not grid:
        raise SweepError("sweep config needs a non-empty 'grid' list")
    merged = []
    for entry in grid:
        if not isinstance(entry, dict) or "method" not in entry:
            raise SweepError(f"grid entry must be a dict with a method: {entry!r}")
        merged.append({**base, **entry})
    return merged


def _run_name(cfg: RunConfig, index: int) -> str:
    safe = cfg.setting_label().replace("@", "_").replace("=", "").replace(".", "p")
    return f"run{index:02d}_{safe}_s{cfg.seed}.jsonl"


def run_sweep(sweep_cfg: dict, seeds, out_dir, render=True) -> dict:
    """Run every (grid entry, seed) pair, write logs + manifest, render reports.

    Runs are serial and ordered (grid index, seed), so a sweep is reproducible
    end to end. A dataset cache keys on the data settings so identical splits
    are built once per seed, not once per run.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    seeds = list(seeds)
    if not seeds:
        raise SweepError("no seeds given")
    settings = _settings(sweep_cfg)
    data_cache: dict[str, object] = {}
    entries = []
    for idx, setting in enumerate(settings):
        for seed in seeds:
            cfg = RunConfig.from_dict({**setting, "seed": seed})
            name = _run_name(cfg, idx)
            key = json.dumps({"dataset": cfg.dataset, "fr": cfg.fractions,
                              "std": cfg.standardize, "seed": seed}, sort_keys=True)
            if key not in data_cache:
                data_cache[key] = prepare_dataset(cfg)
            result = train_run(cfg, out_dir / name, dataset=data_cache[key])
            entries.append({
                "file": name, "method": cfg.method,
                "setting": cfg.setting_label(), "seed": seed,
                "completed": result.completed,
                "failed": result.failed,
            })
    manifest = {"seeds": seeds, "grid": settings, "runs": entries}
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=1)
    summary = None
    if render:
        summary = write_report(out_dir, collect_runs(out_dir))
    return {"manifest": manifest, "out_dir": str(out_dir), "summary": summary}


def parse_seed_range(text: str) -> list[int]:
    """'3..7' -> [3,4,5,6,7]; '4' -> [4]; '1,5,9' -> [1,5,9]."""
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        lo, hi = int(lo), int(hi)
        if hi < lo:
            raise SweepError(f"empty seed range {text!r}")
        return list(range(lo, hi + 1))
    if "," in text:
        return [int(p) for p in text.split(",") if p.strip()]
    return [int(text)]
