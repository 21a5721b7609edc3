"""Group-fairness penalties (differentiable) and evaluation metrics.

The training penalty V pulls per-group mean predictions toward the overall
mean on gate-surviving entries; H is mean binary entropy over all entries.
Evaluation gaps (DP / EOp / EOd), F1 scores and threshold rescaling operate on
hard predictions and are never differentiated.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numerics import PROB_EPS, binary_entropy


class MetricError(ValueError):
    pass


@dataclass
class GroupMoments:
    overall: np.ndarray    # (L,) mean over rows
    per_group: np.ndarray  # (K, L) mean within each group
    counts: np.ndarray     # (K,) rows per group


def group_moments(values: np.ndarray, groups: np.ndarray, n_groups: int) -> GroupMoments:
    vals = np.asarray(values, dtype=np.float64)
    counts = np.bincount(groups, minlength=n_groups).astype(np.int64)
    if np.any(counts == 0):
        k = int(np.flatnonzero(counts == 0)[0])
        raise MetricError(f"group {k} has no rows")
    per_group = np.zeros((n_groups, vals.shape[1]))
    for k in range(n_groups):
        per_group[k] = vals[groups == k].mean(axis=0)
    return GroupMoments(overall=vals.mean(axis=0), per_group=per_group, counts=counts)


@dataclass
class SimfairPenalty:
    value: float
    grad: np.ndarray            # (n, L) wrt probs, mask treated as constant
    skipped: list = field(default_factory=list)  # (k, l) pairs with no gated entries
    degenerate: bool = False    # nothing gated anywhere


def simfair_penalty(probs: np.ndarray, groups: np.ndarray, n_groups: int,
                    mask: np.ndarray | None = None, squared: bool = False) -> SimfairPenalty:
    """V = sum_k ||mu_bar - mu_k||_2 over gated weak-view probabilities.

    Per-dimension means run over gated entries only; a (k, l) cell with no
    gated entries is skipped and reported. ``squared`` switches to the
    sum-of-squared-norms variant. The returned gradient is exact for the
    value as computed (subgradient 0 at ||.|| = 0).
    """
    if n_groups < 2:
        raise MetricError("need at least 2 groups")
    p = np.asarray(probs, dtype=np.float64)
    n, L = p.shape
    m = np.ones_like(p) if mask is None else np.asarray(mask, dtype=np.float64)

    N_l = m.sum(axis=0)                                   # (L,)
    N_kl = np.zeros((n_groups, L))
    S_kl = np.zeros((n_groups, L))
    for k in range(n_groups):
        rows = groups == k
        N_kl[k] = m[rows].sum(axis=0)
        S_kl[k] = (p[rows] * m[rows]).sum(axis=0)
    if N_l.sum() == 0:
        return SimfairPenalty(0.0, np.zeros_like(p), [], degenerate=True)

    mu_l = np.divide(S_kl.sum(axis=0), N_l, out=np.zeros(L), where=N_l > 0)
    mu_kl = np.divide(S_kl, N_kl, out=np.zeros_like(S_kl), where=N_kl > 0)
    valid = (N_kl > 0) & (N_l > 0)[None, :]
    skipped = [(int(k), int(l)) for k, l in zip(*np.nonzero(~valid))]

    delta = np.where(valid, mu_l[None, :] - mu_kl, 0.0)   # (K, L)
    norms = np.sqrt((delta ** 2).sum(axis=1))             # (K,)
    if squared:
        value = float((norms ** 2).sum())
        coef = 2.0 * delta
    else:
        value = float(norms.sum())
        coef = np.divide(delta, norms[:, None], out=np.zeros_like(delta),
                         where=norms[:, None] > 0)

    # dV/dp_il = sum_k coef_kl * (m_il/N_l - 1[a_i=k] m_il/N_kl)
    inv_Nl = np.divide(1.0, N_l, out=np.zeros(L), where=N_l > 0)
    grad = m * (coef.sum(axis=0) * inv_Nl)[None, :]
    inv_Nkl = np.divide(1.0, N_kl, out=np.zeros_like(N_kl), where=N_kl > 0)
    grad -= m * (coef * inv_Nkl)[groups]
    return SimfairPenalty(value=value, grad=grad, skipped=skipped, degenerate=False)


@dataclass
class EntropyPenalty:
    value: float
    grad: np.ndarray  # (n, L) wrt probs


def entropy_penalty(probs_weak: np.ndarray) -> EntropyPenalty:
    """Mean binary entropy over every entry (deliberately unmasked)."""
    p = np.asarray(probs_weak, dtype=np.float64)
    value = float(binary_entropy(p).mean())
    q = np.clip(p, PROB_EPS, 1.0 - PROB_EPS)
    grad = np.log((1.0 - q) / q) / p.size
    grad[(p < PROB_EPS) | (p > 1.0 - PROB_EPS)] = 0.0
    return EntropyPenalty(value=value, grad=grad)


def dp_gap(hard_preds: np.ndarray, groups: np.ndarray, n_groups: int) -> float:
    """sum_k || E[yhat] - E[yhat | a=k] ||_2 over the L prediction dimensions."""
    if n_groups < 2:
        raise MetricError("need at least 2 groups")
    mom = group_moments(np.asarray(hard_preds, dtype=np.float64), groups, n_groups)
    return float(np.linalg.norm(mom.overall[None, :] - mom.per_group, axis=1).sum())


@dataclass
class ConditionalGap:
    value: float
    skipped: list = field(default_factory=list)  # (outcome, k, l) strata skipped


def _conditioned_gap(preds, y, groups, n_groups, on):
    """DP-style gap restricted to entries with y == on, per dimension."""
    p = np.asarray(preds, dtype=np.float64)
    n, L = p.shape
    overall = np.full(L, np.nan)
    cond = np.full((n_groups, L), np.nan)
    for l in range(L):
        stratum = y[:, l] == on
        if stratum.any():
            overall[l] = p[stratum, l].mean()
        for k in range(n_groups):
            rows = stratum & (groups == k)
            if rows.any():
                cond[k, l] = p[rows, l].mean()
    valid = np.isfinite(cond) & np.isfinite(overall)[None, :]
    if not valid.any():
        raise MetricError(f"no entries with outcome {on} in any group")
    skipped = [(int(on), int(k), int(l)) for k, l in zip(*np.nonzero(~valid))]
    diff = np.where(valid, overall[None, :] - cond, 0.0)
    return float(np.linalg.norm(diff, axis=1).sum()), skipped


def eop_gap(hard_preds, y_true, groups, n_groups: int) -> ConditionalGap:
    """Equal-opportunity gap: the DP aggregation restricted to Y=1 entries."""
    value, skipped = _conditioned_gap(hard_preds, y_true, groups, n_groups, on=1)
    return ConditionalGap(value=value, skipped=skipped)


def eod_gap(hard_preds, y_true, groups, n_groups: int) -> ConditionalGap:
    """Equalized-odds gap: mean of the Y=1 and Y=0 conditioned gaps."""
    v1, s1 = _conditioned_gap(hard_preds, y_true, groups, n_groups, on=1)
    v0, s0 = _conditioned_gap(hard_preds, y_true, groups, n_groups, on=0)
    return ConditionalGap(value=0.5 * (v1 + v0), skipped=s1 + s0)


@dataclass
class RescaleThresholds:
    thresholds: np.ndarray   # (L,)
    fallback: np.ndarray     # (L,) bool, True where 0.5 was substituted


def rescale_thresholds(scores_val: np.ndarray, y_val: np.ndarray) -> RescaleThresholds:
    """Per-label threshold at the (1 - prevalence) quantile of validation scores.

    Predicting score >= t_l then matches the empirical positive rate. Labels
    with degenerate prevalence (0 or 1) or constant scores fall back to 0.5.
    """
    s = np.asarray(scores_val, dtype=np.float64)
    L = s.shape[1]
    thresholds = np.full(L, 0.5)
    fallback = np.zeros(L, dtype=bool)
    prev = np.asarray(y_val, dtype=np.float64).mean(axis=0)
    for l in range(L):
        col = s[:, l]
        if prev[l] <= 0.0 or prev[l] >= 1.0 or col.max() - col.min() < 1e-12:
            fallback[l] = True
            continue
        thresholds[l] = float(np.quantile(col, 1.0 - prev[l]))
    return RescaleThresholds(thresholds=thresholds, fallback=fallback)


def per_label_f1(preds: np.ndarray, y: np.ndarray):
    """(f1 per label, degenerate flags). F1 = 0 flagged when TP=FP=FN=0."""
    p = np.asarray(preds, dtype=bool)
    t = np.asarray(y, dtype=bool)
    tp = (p & t).sum(axis=0).astype(np.float64)
    fp = (p & ~t).sum(axis=0).astype(np.float64)
    fn = (~p & t).sum(axis=0).astype(np.float64)
    denom = 2 * tp + fp + fn
    f1 = np.divide(2 * tp, denom, out=np.zeros_like(tp), where=denom > 0)
    return f1, denom == 0


def macro_f1(preds: np.ndarray, y: np.ndarray) -> float:
    f1, _ = per_label_f1(preds, y)
    return float(f1.mean())


def micro_f1(preds: np.ndarray, y: np.ndarray) -> float:
    p = np.asarray(preds, dtype=bool)
    t = np.asarray(y, dtype=bool)
    tp = float((p & t).sum())
    fp = float((p & ~t).sum())
    fn = float((~p & t).sum())
    denom = 2 * tp + fp + fn
    return float(2 * tp / denom) if denom > 0 else 0.0


@dataclass
class SaturationResult:
    saturated: bool
    per_label_std: np.ndarray


def saturation_detect(probs_test: np.ndarray, std_floor: float = 0.01,
                      label_fraction: float = 0.5) -> SaturationResult:
    """Near-constant predictor check: std below floor on at least half the labels."""
    p = np.asarray(probs_test, dtype=np.float64)
    if p.shape[0] < 30:
        raise MetricError(f"saturation check needs >= 30 rows, got {p.shape[0]}")
    stds = p.std(axis=0)
    frac = float((stds < std_floor).mean())
    return SaturationResult(saturated=frac >= label_fraction, per_label_std=stds)


@dataclass
class MetricReport:
    macro_f1: float
    micro_f1: float
    dp_gap: float
    eop_gap: float
    eod_gap: float
    per_dim_dp: list
    per_dim_f1: list
    per_dim_eod: list
    binary_dp: float
    binary_eod: float
    primary_dim: int
    saturated: bool
    per_label_std: list
    eop_skipped: int
    eod_skipped: int
    threshold_fallbacks: int

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        for key in ("per_dim_dp", "per_dim_f1", "per_dim_eod", "per_label_std"):
            d[key] = [float(x) for x in d[key]]
        return d


def metric_report(probs_test, y_test, groups_test, n_groups: int,
                  thresholds: RescaleThresholds, primary_dim: int = 0) -> MetricReport:
    """Final-evaluation bundle.

    The rescaled thresholds apply to the Macro-F1 family (aggregate and its
    per-dimension decomposition, which is the same quantity sliced); fairness
    gaps and Micro-F1 binarize at the fixed 0.5 used throughout training.
    """
    probs = np.asarray(probs_test, dtype=np.float64)
    L = probs.shape[1]
    if not (0 <= primary_dim < L):
        raise MetricError(f"primary dimension {primary_dim} out of range for L={L}")
    preds_f1 = (probs >= thresholds.thresholds[None, :]).astype(np.int8)
    preds = (probs >= 0.5).astype(np.int8)
    eop = eop_gap(preds, y_test, groups_test, n_groups)
    eod = eod_gap(preds, y_test, groups_test, n_groups)
    f1s, _ = per_label_f1(preds_f1, y_test)
    per_dim_dp = [dp_gap(preds[:, [l]], groups_test, n_groups) for l in range(L)]
    per_dim_eod = []
    for l in range(L):
        try:
            per_dim_eod.append(eod_gap(preds[:, [l]], y_test[:, [l]],
                                       groups_test, n_groups).value)
        except MetricError:
            per_dim_eod.append(float("nan"))  # label degenerate in this split
    sat = saturation_detect(probs)
    return MetricReport(
        macro_f1=float(f1s.mean()),
        micro_f1=micro_f1(preds, y_test),
        dp_gap=dp_gap(preds, groups_test, n_groups),
        eop_gap=eop.value,
        eod_gap=eod.value,
        per_dim_dp=per_dim_dp,
        per_dim_f1=[float(x) for x in f1s],
        per_dim_eod=per_dim_eod,
        binary_dp=per_dim_dp[primary_dim],
        binary_eod=per_dim_eod[primary_dim],
        primary_dim=primary_dim,
        saturated=sat.saturated,
        per_label_std=list(sat.per_label_std),
        eop_skipped=len(eop.skipped),
        eod_skipped=len(eod.skipped),
        threshold_fallbacks=int(thresholds.fallback.sum()),
    )
