"""Shared numerically-safe scalar/array primitives."""
from __future__ import annotations

import numpy as np

PROB_EPS = 1e-7  # clamp for entropy/log computations


def sigmoid(z: np.ndarray) -> np.ndarray:
    """Overflow-safe elementwise logistic."""
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logit(p: float) -> float:
    return float(np.log(p / (1.0 - p)))


def bce_with_logits(logits: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Elementwise binary cross-entropy, stable for large |logit|.

    max(z,0) - z*y + log(1+exp(-|z|))
    """
    z = np.asarray(logits, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    return np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))


def binary_entropy(p: np.ndarray, eps: float = PROB_EPS) -> np.ndarray:
    """Elementwise -p ln p - (1-p) ln(1-p) with clamped probabilities."""
    q = np.clip(p, eps, 1.0 - eps)
    return -(q * np.log(q) + (1.0 - q) * np.log1p(-q))
