"""The per-run training loop.

Epoch protocol: minibatch steps under epoch-frozen dual weights, then an
evaluation pass that produces the controller observables, then one controller
step that fixes the next epoch's weights. Per-epoch JSONL rows carry the
weights USED that epoch at top level; the nested ctrl trace describes the step
taken at epoch end (so its lambda fields are the next epoch's weights).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from ..baselines import baseline_init, baseline_step, calibrate
from ..controller import EpochSignals, OpdaConfig, SignalError, opda_init, opda_lite_step, opda_step
from ..data import (
    LABELED,
    TEST,
    UNLABELED,
    VALIDATION,
    DatasetSchema,
    SynthConfig,
    TabularDataset,
    load_csv,
    schema_path,
    split,
    standardize,
    synth_generate,
)
from ..fairness import entropy_penalty, macro_f1, metric_report, rescale_thresholds, simfair_penalty
from ..nnet import (
    KERNELS,
    LossBatch,
    NonFiniteGradient,
    ObjectiveConfig,
    adam_init,
    adam_step,
    cosine,
    grad_of,
    mlp_init,
    predict_probs,
    term_grads,
)
from ..pseudolabel import augment_strong, augment_weak, confidence_gate, health_signals
from .config import RunConfig
from .failures import detect_failures

# rng stream purposes, mixed into the seed so no stream aliases another
_DATA, _SPLIT, _INIT = 0, 1, 2
_BATCH_L, _BATCH_U, _VIEWS, _EVAL, _DIAG = 3, 4, 5, 6, 7


def _rng(*key):
    return np.random.default_rng(list(key))


def prepare_dataset(cfg: RunConfig) -> TabularDataset:
    spec = dict(cfg.dataset)
    kind = spec.pop("kind")
    if kind == "synth":
        ds = synth_generate(SynthConfig(**spec), seed=[cfg.seed, _DATA])
    else:
        ref = str(spec["schema"])
        if "/" not in ref and not ref.endswith(".json"):
            ref = schema_path(ref)  # bundled schema by short name
        schema = DatasetSchema.from_json(ref)
        ds = load_csv(spec["path"], schema)
    ds = split(ds, seed=[cfg.seed, _SPLIT], fractions=cfg.fractions)
    if cfg.standardize:
        ds = standardize(ds)
    return ds


class _Schedule:
    """Uniform per-epoch stepping over all seven methods."""

    def __init__(self, cfg: RunConfig):
        self.method = cfg.method
        self.t_warm = cfg.t_warm
        self.fraction = cfg.target_fraction
        self.warm_violations: list[float] = []
        self.opda = None
        self.bstate = None
        if cfg.method in ("opda", "opda_lite"):
            overrides = dict(cfg.controller)
            overrides.setdefault("t_warm", cfg.t_warm)
            self.opda = opda_init(OpdaConfig(**overrides))
        elif cfg.method == "static":
            self.bstate = baseline_init("static", lam_fixed=cfg.lam)
        elif cfg.method != "base":
            self.bstate = baseline_init(cfg.method, lam_warm=cfg.lam_warm)

    def initial_lambdas(self):
        if self.opda is not None:
            return self.opda.B * self.opda.pi, self.opda.B * (1.0 - self.opda.pi)
        if self.bstate is not None:
            return self.bstate.lam, 0.0
        return 0.0, 0.0

    def step(self, signals: EpochSignals, t: int, c_v: float, c_h: float):
        if self.opda is not None:
            stepper = opda_step if self.method == "opda" else opda_lite_step
            lam_v, lam_h, trace = stepper(self.opda, signals)
            return lam_v, lam_h, trace.to_dict()
        if self.bstate is not None:
            if t <= self.t_warm:
                self.warm_violations.append(signals.v)
                if t == self.t_warm:
                    calibrate(self.bstate, self.warm_violations, self.fraction)
                if self.bstate.kind == "static":
                    lam = baseline_step(self.bstate, signals.v)
                else:
                    lam = self.bstate.lam  # hold the warmup weight, EMA untouched
            else:
                lam = baseline_step(self.bstate, signals.v)
        else:
            lam = 0.0
        return lam, 0.0, _flat_trace(t, lam, c_v, c_h)


def _flat_trace(t: int, lam: float, c_v: float, c_h: float) -> dict:
    return {
        "t": t, "u": math.log(max(lam, 1e-8)), "B": lam, "pi": 1.0,
        "lambda_v": lam, "lambda_h": 0.0, "G": None, "C": None, "s": None,
        "s_tilde": None, "d_v": None, "d_h": None, "m_v": None, "m_r": None,
        "c_v": c_v, "c_h": c_h,
    }


def _json_safe(x):
    if isinstance(x, dict):
        return {k: _json_safe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_safe(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (float, np.floating)):
        v = float(x)
        return v if math.isfinite(v) else None
    if isinstance(x, (int, np.integer)):
        return int(x)
    return x


@dataclass
class RunResult:
    config: RunConfig
    epochs: list
    final: dict | None
    failed: str | None
    log_path: str | None

    @property
    def completed(self) -> bool:
        return self.failed is None


def _train_epoch(mlp, opt, ds, cfg, ocfg, lab, unlab, lam_v, lam_h, t):
    rng_l = _rng(cfg.seed, t, _BATCH_L)
    rng_u = _rng(cfg.seed, t, _BATCH_U)
    rng_views = _rng(cfg.seed, t, _VIEWS)
    lab_order = rng_l.permutation(lab)
    unlab_order = rng_u.permutation(unlab)
    bl, bu = cfg.batch_labeled, cfg.batch_unlabeled
    steps = max(1, math.ceil(len(unlab_order) / bu))
    sup_sum = 0.0
    unsup_sum = 0.0
    for i in range(steps):
        ui = unlab_order[i * bu:(i + 1) * bu]
        li = lab_order[np.arange(i * bl, (i + 1) * bl) % len(lab_order)]
        xw = augment_weak(ds.X[ui], rng_views, cfg.sigma_weak, ds.continuous_mask)
        xs = augment_strong(ds.X[ui], rng_views, cfg.sigma_strong, cfg.p_drop,
                            ds.continuous_mask)
        batch = LossBatch(x_lab=ds.X[li], y_lab=ds.Y[li], x_weak=xw, x_strong=xs,
                          groups=ds.groups[ui], n_groups=ds.n_groups)
        ev = grad_of(mlp, batch, "total", ocfg, lam_v=lam_v, lam_h=lam_h)
        if not math.isfinite(ev.loss):
            raise NonFiniteGradient(f"non-finite loss {ev.loss} at epoch {t} step {i}")
        adam_step(opt, mlp.theta, ev.grad)
        sup_sum += ev.parts["sup"]
        unsup_sum += ev.parts["unsup"]
    return sup_sum / steps, unsup_sum / steps


def _epoch_signals(mlp, ds, cfg, t, unlab, val):
    rng = _rng(cfg.seed, t, _EVAL)
    xw = augment_weak(ds.X[unlab], rng, cfg.sigma_weak, ds.continuous_mask)
    xs = augment_strong(ds.X[unlab], rng, cfg.sigma_strong, cfg.p_drop,
                        ds.continuous_mask)
    probs_w = predict_probs(mlp, xw)
    probs_s = predict_probs(mlp, xs)
    gate = confidence_gate(probs_w, cfg.tau)
    hs = health_signals(gate, probs_w, probs_s)
    mask = None if cfg.simfair_all_entries else gate.mask
    v = simfair_penalty(probs_w, ds.groups[unlab], ds.n_groups, mask=mask,
                        squared=cfg.simfair_squared).value
    H = entropy_penalty(probs_w).value
    val_probs = predict_probs(mlp, ds.X[val])
    val_f1 = macro_f1(val_probs >= 0.5, ds.Y[val])
    return v, H, 1.0 - val_f1, hs, val_f1


def _alignment_cosines(mlp, ds, cfg, ocfg, t, lab, unlab):
    rng = _rng(cfg.seed, t, _DIAG)
    li = rng.choice(lab, size=min(cfg.batch_labeled, lab.size), replace=False)
    ui = rng.choice(unlab, size=min(cfg.batch_unlabeled, unlab.size), replace=False)
    xw = augment_weak(ds.X[ui], rng, cfg.sigma_weak, ds.continuous_mask)
    xs = augment_strong(ds.X[ui], rng, cfg.sigma_strong, cfg.p_drop,
                        ds.continuous_mask)
    batch = LossBatch(x_lab=ds.X[li], y_lab=ds.Y[li], x_weak=xw, x_strong=xs,
                      groups=ds.groups[ui], n_groups=ds.n_groups)
    grads = term_grads(mlp, batch, ocfg)
    return cosine(grads["fairness"], grads["base"]), cosine(grads["entropy"], grads["base"])


def train_run(cfg: RunConfig, log_path=None, dataset: TabularDataset | None = None) -> RunResult:
    """Run one configuration end to end; optionally reuse a prepared dataset."""
    ds = dataset if dataset is not None else prepare_dataset(cfg)
    ocfg = ObjectiveConfig(tau=cfg.tau, lambda_u=cfg.lambda_u,
                           simfair_squared=cfg.simfair_squared,
                           simfair_all_entries=cfg.simfair_all_entries)
    mlp = mlp_init((ds.n_features, *cfg.hidden, ds.n_labels), seed=[cfg.seed, _INIT],
                   head=cfg.head_init)
    opt = adam_init(mlp.n_params, lr=cfg.lr)
    sched = _Schedule(cfg)
    lam_v, lam_h = sched.initial_lambdas()
    lab, unlab, val = ds.indices(LABELED), ds.indices(UNLABELED), ds.indices(VALIDATION)

    fh = open(log_path, "w") if log_path is not None else None

    def emit(obj):
        if fh is not None:
            fh.write(json.dumps(_json_safe(obj)) + "\n")

    rows: list[dict] = []
    failed = None
    final = None
    try:
        emit({"config": cfg.to_dict(), "split_counts": ds.split_counts(),
              "kernels": KERNELS})
        for t in range(1, cfg.epochs + 1):
            try:
                sup_mean, unsup_mean = _train_epoch(
                    mlp, opt, ds, cfg, ocfg, lab, unlab, lam_v, lam_h, t)
                v, H, r, hs, val_f1 = _epoch_signals(mlp, ds, cfg, t, unlab, val)
                c_v, c_h = _alignment_cosines(mlp, ds, cfg, ocfg, t, lab, unlab)
                signals = EpochSignals(v=v, r=r, q=hs.q, p=hs.p, ess=hs.ess,
                                       c_v=c_v, c_h=c_h)
                next_v, next_h, trace = sched.step(signals, t, c_v, c_h)
            except (NonFiniteGradient, SignalError, FloatingPointError) as exc:
                failed = f"{type(exc).__name__}: {exc}"
                emit({"final": True, "completed": False, "failed": failed, "epoch": t})
                break
            row = _json_safe({
                "epoch": t, "sup_loss": sup_mean, "unsup_loss": unsup_mean,
                "v": v, "H": H, "r": r, "q": hs.q, "p": hs.p, "ess": hs.ess,
                "lambda_v": lam_v, "lambda_h": lam_h, "val_macro_f1": val_f1,
                "ctrl": trace,
            })
            rows.append(row)
            emit(row)
            lam_v, lam_h = next_v, next_h

        if failed is None:
            test = ds.indices(TEST)
            val_probs = predict_probs(mlp, ds.X[val])
            thresholds = rescale_thresholds(val_probs, ds.Y[val])
            test_probs = predict_probs(mlp, ds.X[test])
            report = metric_report(test_probs, ds.Y[test], ds.groups[test],
                                   ds.n_groups, thresholds, cfg.primary_dim)
            flags = detect_failures(rows, report.saturated, cfg.t_warm)
            final = _json_safe({"final": True, "completed": True,
                                "metrics": report.to_dict(), "failures": flags})
            emit(final)
    finally:
        if fh is not None:
            fh.close()
    return RunResult(config=cfg, epochs=rows, final=final, failed=failed,
                     log_path=str(log_path) if log_path is not None else None)
