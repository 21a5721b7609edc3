"""Synthetic tabular generator with controllable group disparity.

Features are Gaussian with a per-group mean shift; labels are sampled from a
logistic ground-truth model whose per-(group, label) intercepts are calibrated
so the sampled base rates hit the requested prevalences. The demographic-parity
gap of the sampled labels is therefore known by construction.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tabular import LABELED, TabularDataset


class SynthConfigError(ValueError):
    pass


@dataclass
class SynthConfig:
    n: int
    d: int
    n_groups: int
    n_labels: int
    group_mean_shift: float = 0.0
    # prevalence[k][l] = target P(Y_l = 1 | group k), each in (0, 1)
    label_prevalence: list = field(default_factory=list)
    feature_std: float = 1.0
    score_scale: float = 2.0  # slope of the logistic truth; higher = more confident Bayes labels

    def __post_init__(self):
        if self.n < 4 * self.n_groups:
            raise SynthConfigError(f"n={self.n} too small for {self.n_groups} groups (need n >= 4K)")
        if self.d < 1 or self.n_labels < 1 or self.n_groups < 2:
            raise SynthConfigError("need d >= 1, L >= 1, K >= 2")
        if self.feature_std <= 0:
            raise SynthConfigError("feature_std must be positive")
        if self.score_scale <= 0:
            raise SynthConfigError("score_scale must be positive")
        prev = np.asarray(self.label_prevalence, dtype=np.float64)
        if prev.shape != (self.n_groups, self.n_labels):
            raise SynthConfigError(
                f"label_prevalence must be {self.n_groups}x{self.n_labels}, got {prev.shape}"
            )
        if np.any(prev <= 0.0) or np.any(prev >= 1.0):
            raise SynthConfigError("prevalences must lie strictly inside (0, 1)")


def synth_generate(config: SynthConfig, seed: int) -> TabularDataset:
    rng = np.random.default_rng(seed)
    n, d, K, L = config.n, config.d, config.n_groups, config.n_labels
    prev = np.asarray(config.label_prevalence, dtype=np.float64)

    # near-equal group sizes, shuffled deterministically
    base = np.repeat(np.arange(K), n // K)
    extra = np.arange(n - base.size) % K
    groups = rng.permutation(np.concatenate([base, extra])).astype(np.int64)

    X = rng.standard_normal((n, d)) * config.feature_std
    X += (config.group_mean_shift * groups)[:, None]

    weights = rng.standard_normal((d, L))
    scores = X @ weights
    scores = scores / np.maximum(scores.std(axis=0), 1e-12) * config.score_scale

    intercepts = np.zeros((K, L))
    true_probs = np.empty((n, L))
    for l in range(L):
        for k in range(K):
            g = groups == k
            b = _calibrate_intercept(scores[g, l], prev[k, l])
            intercepts[k, l] = b
            true_probs[g, l] = _sigmoid(scores[g, l] + b)
    Y = (rng.random((n, L)) < true_probs).astype(np.int8)

    return TabularDataset(
        X=X,
        Y=Y,
        groups=groups,
        split=np.full(n, LABELED, dtype=np.int8),
        continuous_mask=np.ones(d, dtype=bool),
        n_groups=K,
        feature_names=[f"x{j}" for j in range(d)],
        label_names=[f"y{l}" for l in range(L)],
        meta={
            "synth": True,
            "seed": seed,
            "true_probs": true_probs,      # diagnostics only
            "truth_weights": weights,
            "truth_intercepts": intercepts,
        },
    )


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-np.clip(z, -60, 60)))


def _calibrate_intercept(scores: np.ndarray, target: float, tol: float = 1e-10) -> float:
    """Bisection on b so that mean(sigmoid(scores + b)) == target."""
    lo, hi = -40.0, 40.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _sigmoid(scores + mid).mean() < target:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)
