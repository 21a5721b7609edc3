"""Confidence-gated pseudo-labeling for tabular data, plus gate health signals.

Weak/strong views are noise-based since tabular rows have no image-style
augmentations: the weak view jitters continuous features, the strong view adds
larger jitter and random feature zero-out.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import bce_with_logits, sigmoid


class GateConfigError(ValueError):
    pass


@dataclass
class GateMask:
    mask: np.ndarray          # (n, L) float64 in {0, 1}
    pseudo: np.ndarray        # (n, L) float64 hard targets 1[p >= 0.5]
    pass_ratio: float         # mean of mask

    @property
    def n_gated(self) -> int:
        return int(self.mask.sum())


@dataclass
class HealthSignals:
    q: float                  # gate pass ratio
    p: float                  # weak/strong agreement on gated entries
    ess: float                # effective sample size of gated confidences
    p_degenerate: bool        # True when p had no gated entries to average


def augment_weak(x: np.ndarray, rng: np.random.Generator, sigma_w: float,
                 continuous_mask: np.ndarray) -> np.ndarray:
    """Additive Gaussian jitter on continuous columns; one-hot columns untouched."""
    if sigma_w < 0:
        raise GateConfigError("sigma_w must be >= 0")
    out = np.array(x, dtype=np.float64, copy=True)
    if sigma_w > 0:
        cols = np.flatnonzero(continuous_mask)
        out[:, cols] += sigma_w * rng.standard_normal((x.shape[0], cols.size))
    return out


def augment_strong(x: np.ndarray, rng: np.random.Generator, sigma_s: float,
                   p_drop: float, continuous_mask: np.ndarray) -> np.ndarray:
    """Heavier jitter plus iid feature zero-out with probability p_drop per entry."""
    if not (0.0 <= p_drop < 1.0):
        raise GateConfigError("p_drop must lie in [0, 1)")
    out = augment_weak(x, rng, sigma_s, continuous_mask)
    if p_drop > 0:
        out *= rng.random(out.shape) >= p_drop
    return out


def confidence_gate(probs_weak: np.ndarray, tau: float) -> GateMask:
    """Entry passes iff max(p, 1-p) >= tau; pseudo-label is the hard weak prediction."""
    if not (0.5 < tau < 1.0):
        raise GateConfigError(f"tau={tau} must lie in (0.5, 1)")
    p = np.asarray(probs_weak, dtype=np.float64)
    conf = np.maximum(p, 1.0 - p)
    mask = (conf >= tau).astype(np.float64)
    pseudo = (p >= 0.5).astype(np.float64)
    return GateMask(mask=mask, pseudo=pseudo, pass_ratio=float(mask.mean()))


def unsup_loss(logits_strong: np.ndarray, pseudo: np.ndarray, mask: np.ndarray) -> float:
    """Masked mean BCE over gated entries; exactly 0 for an all-zero mask."""
    n_gated = mask.sum()
    if n_gated == 0:
        return 0.0
    losses = bce_with_logits(logits_strong, pseudo)
    return float((losses * mask).sum() / max(1.0, n_gated))


def unsup_loss_grad(logits_strong: np.ndarray, pseudo: np.ndarray,
                    mask: np.ndarray) -> tuple[float, np.ndarray]:
    """Loss plus d(loss)/d(logits_strong); the mask and pseudo-labels are constants."""
    n_gated = mask.sum()
    if n_gated == 0:
        return 0.0, np.zeros_like(logits_strong)
    losses = bce_with_logits(logits_strong, pseudo)
    value = float((losses * mask).sum() / max(1.0, n_gated))
    dlogits = (sigmoid(logits_strong) - pseudo) * mask / max(1.0, n_gated)
    return value, dlogits


def health_signals(gate: GateMask, probs_weak: np.ndarray,
                   probs_strong: np.ndarray) -> HealthSignals:
    """q = pass ratio, p = weak/strong agreement on gated entries, ESS of confidences.

    Degenerate floors when nothing passes: p = 1.0 (flagged) and ESS = 1 keep the
    downstream controller formulas finite during a gate collapse.
    """
    gated = gate.mask > 0
    q = float(gate.mask.mean())
    if not gated.any():
        return HealthSignals(q=q, p=1.0, ess=1.0, p_degenerate=True)
    strong_hard = probs_strong >= 0.5
    agree = strong_hard[gated] == (gate.pseudo[gated] > 0.5)
    w = np.maximum(probs_weak, 1.0 - probs_weak)[gated]
    ess = float(w.sum() ** 2 / (w * w).sum())
    return HealthSignals(q=q, p=float(agree.mean()), ess=ess, p_degenerate=False)
