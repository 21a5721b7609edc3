"""Run configuration: strict JSON in, validated dataclass out."""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

METHODS = ("base", "static", "emap", "pi", "dualasc", "opda", "opda_lite")
ADAPTIVE = ("emap", "pi", "dualasc", "opda", "opda_lite")
DEFAULT_FRACTIONS = {"labeled": 0.1, "unlabeled": 0.7, "validation": 0.1, "test": 0.1}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    method: str
    seed: int
    dataset: dict
    epochs: int = 100                      # {"kind": "synth", ...} or {"kind": "csv", "path", "schema"}
    out_dir: str | None = None
    hidden: tuple = (64, 64)
    lr: float = 1e-3
    tau: float = 0.95
    lambda_u: float = 1.0
    lam: float = 0.0                   # static-lambda value
    target_fraction: float = 0.5       # f, warmup-calibrated target scale
    lam_warm: float = 1.0              # adaptive-baseline weight during warmup
    batch_labeled: int = 64
    batch_unlabeled: int = 256
    sigma_weak: float = 0.05
    sigma_strong: float = 0.2
    p_drop: float = 0.1
    simfair_squared: bool = False
    simfair_all_entries: bool = False
    head_init: str = "zero"
    primary_dim: int = 0
    fractions: dict = field(default_factory=lambda: dict(DEFAULT_FRACTIONS))
    standardize: bool = True
    controller: dict = field(default_factory=dict)   # OpdaConfig overrides
    t_warm: int = 20

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.method in ADAPTIVE and self.epochs <= self.t_warm:
            raise ConfigError(
                f"adaptive method {self.method!r} needs epochs > t_warm={self.t_warm}"
            )
        if not (0.5 < self.tau < 1.0):
            raise ConfigError(f"tau={self.tau} must lie in (0.5, 1)")
        if self.sigma_weak < 0 or self.sigma_strong < self.sigma_weak:
            raise ConfigError("need 0 <= sigma_weak <= sigma_strong")
        if not (0.0 <= self.p_drop < 1.0):
            raise ConfigError("p_drop must lie in [0, 1)")
        if self.batch_labeled < 1 or self.batch_unlabeled < 1:
            raise ConfigError("batch sizes must be positive")
        if self.lam < 0 or self.lambda_u < 0 or self.lam_warm < 0:
            raise ConfigError("weights must be nonnegative")
        if not (0.0 < self.target_fraction <= 1.0):
            raise ConfigError("target_fraction must lie in (0, 1]")
        if self.head_init not in ("zero", "he"):
            raise ConfigError(f"head_init must be 'zero' or 'he', got {self.head_init!r}")
        if not isinstance(self.dataset, dict) or "kind" not in self.dataset:
            raise ConfigError('dataset must be a dict with a "kind" key')
        if self.dataset["kind"] not in ("synth", "csv"):
            raise ConfigError(f'unknown dataset kind {self.dataset["kind"]!r}')
        self.hidden = tuple(int(h) for h in self.hidden)
        if any(h < 1 for h in self.hidden):
            raise ConfigError("hidden widths must be positive")

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        missing = [k for k in ("method", "seed", "dataset") if k not in d]
        if missing:
            raise ConfigError(f"missing required config keys: {missing}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "RunConfig":
        with open(path) as fh:
            try:
                payload = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path} is not valid JSON: {exc}") from None
        return cls.from_dict(payload)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["hidden"] = list(self.hidden)
        return d

    def replace(self, **kw) -> "RunConfig":
        return dataclasses.replace(self, **kw)

    def setting_label(self) -> str:
        if self.method == "static":
            return f"static@{self.lam:g}"
        if self.method in ("emap", "pi", "dualasc"):
            return f"{self.method}@f={self.target_fraction:g}"
        return self.method
