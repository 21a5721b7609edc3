"""Adam on the flat parameter vector."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import backend as K


class NonFiniteGradient(FloatingPointError):
    """Raised when a gradient goes NaN/inf; the training loop aborts the run."""


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: np.ndarray = field(default=None)  # type: ignore[assignment]
    v: np.ndarray = field(default=None)  # type: ignore[assignment]


def adam_init(n_params: int, lr: float = 1e-3, beta1: float = 0.9,
              beta2: float = 0.999, eps: float = 1e-8) -> AdamState:
    return AdamState(lr=lr, beta1=beta1, beta2=beta2, eps=eps, t=0,
                     m=np.zeros(n_params), v=np.zeros(n_params))


def adam_step(state: AdamState, theta: np.ndarray, grad: np.ndarray) -> None:
    """One in-place update. Non-finite gradients abort rather than corrupt theta."""
    if not np.all(np.isfinite(grad)):
        raise NonFiniteGradient(f"non-finite gradient at optimizer step {state.t + 1}")
    state.t += 1
    bias_c1 = 1.0 - state.beta1 ** state.t
    bias_c2 = 1.0 - state.beta2 ** state.t
    K.adam_step_inplace(theta, np.ascontiguousarray(grad, dtype=np.float64),
                        state.m, state.v, state.lr, state.beta1, state.beta2,
                        state.eps, bias_c1, bias_c2)
