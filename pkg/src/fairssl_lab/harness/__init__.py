"""Experiment harness: run configs, the training loop, sweeps and reports."""
from .config import ADAPTIVE, METHODS, ConfigError, RunConfig
from .failures import detect_failures, masking_collapse
from .report import (ReportError, build_frontier, build_trajectories, collect_runs,
                     decompose, load_run_log, write_report)
from .sweep import SweepError, parse_seed_range, run_sweep
from .train import RunResult, prepare_dataset, train_run

__all__ = [
    "ADAPTIVE", "METHODS", "ConfigError", "RunConfig",
    "detect_failures", "masking_collapse",
    "ReportError", "build_frontier", "build_trajectories", "collect_runs",
    "decompose", "load_run_log", "write_report",
    "SweepError", "parse_seed_range", "run_sweep",
    "RunResult", "prepare_dataset", "train_run",
]
