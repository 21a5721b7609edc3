"""Pure-numpy reference kernels. Same contract as the compiled module."""
from __future__ import annotations

import numpy as np

NAME = "python"


def matmul_nn(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """(m,k) @ (k,n) -> (m,n)"""
    return a @ b


def matmul_tn(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """(m,k).T @ (m,n) -> (k,n), without materializing the transpose."""
    return a.T @ b


def matmul_nt(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """(m,n) @ (k,n).T -> (m,k)"""
    return a @ b.T


def relu(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0)


def relu_grad_inplace(dz: np.ndarray, z: np.ndarray) -> None:
    dz *= z > 0.0


def add_bias_inplace(z: np.ndarray, bias: np.ndarray) -> None:
    z += bias


def adam_step_inplace(theta, grad, m, v, lr, beta1, beta2, eps, bias_c1, bias_c2):
    """One Adam update on flat float64 vectors; bias_c* are 1-beta^t corrections."""
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * grad * grad
    theta -= lr * (m / bias_c1) / (np.sqrt(v / bias_c2) + eps)
