"""Central finite-difference gradient oracle for small models."""
from __future__ import annotations

import numpy as np

from .losses import LossBatch, ObjectiveConfig, grad_of
from .mlp import Mlp


def central_diff(fn, theta: np.ndarray, eps: float = 1e-4) -> np.ndarray:
    """Per-coordinate central differences of a scalar function of a flat vector."""
    theta = np.asarray(theta, dtype=np.float64)
    grad = np.zeros_like(theta)
    work = theta.copy()
    for i in range(theta.size):
        orig = work[i]
        work[i] = orig + eps
        f_plus = fn(work)
        work[i] = orig - eps
        f_minus = fn(work)
        work[i] = orig
        grad[i] = (f_plus - f_minus) / (2.0 * eps)
    return grad


def fd_grad_of(mlp: Mlp, batch: LossBatch, selector: str, cfg: ObjectiveConfig,
               lam_v: float = 0.0, lam_h: float = 0.0, eps: float = 1e-4) -> np.ndarray:
    """Finite-difference gradient of a loss selector; restores mlp.theta afterward."""
    saved = mlp.theta.copy()

    def fn(vec):
        mlp.theta[:] = vec
        return grad_of(mlp, batch, selector, cfg, lam_v=lam_v, lam_h=lam_h).loss

    try:
        return central_diff(fn, saved, eps=eps)
    finally:
        mlp.theta[:] = saved
