from .adam import AdamState, NonFiniteGradient, adam_init, adam_step
from .backend import KERNELS, available_backends, get_kernels
from .finite_diff import central_diff, fd_grad_of
from .losses import SELECTORS, BatchError, LossBatch, LossEval, ObjectiveConfig, grad_of, term_grads
from .mlp import (
    Mlp,
    backward,
    cosine,
    forward,
    load_checkpoint,
    mlp_from_theta,
    mlp_init,
    param_count,
    predict_probs,
    save_checkpoint,
)

__all__ = [
    "AdamState", "NonFiniteGradient", "adam_init", "adam_step",
    "KERNELS", "available_backends", "get_kernels",
    "central_diff", "fd_grad_of",
    "SELECTORS", "BatchError", "LossBatch", "LossEval", "ObjectiveConfig",
    "grad_of", "term_grads",
    "Mlp", "backward", "cosine", "forward", "load_checkpoint", "mlp_from_theta",
    "mlp_init", "param_count", "predict_probs", "save_checkpoint",
]
