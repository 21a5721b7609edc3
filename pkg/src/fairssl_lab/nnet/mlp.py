"""Multi-label MLP with a flat parameter vector and manual backprop.

Parameters live in one contiguous float64 array; per-layer weight and bias
views alias into it so the optimizer can update in place and checkpoints can
serialize the raw bytes bit-exactly.
"""
from __future__ import annotations

import base64
import json
from dataclasses import dataclass

import numpy as np

from . import backend as K


def param_count(dims) -> int:
    return int(sum((dims[i] + 1) * dims[i + 1] for i in range(len(dims) - 1)))


@dataclass
class Mlp:
    dims: tuple
    theta: np.ndarray
    weights: list
    biases: list

    @property
    def n_params(self) -> int:
        return self.theta.size


def _make_views(dims, theta):
    weights, biases, off = [], [], 0
    for i in range(len(dims) - 1):
        fi, fo = dims[i], dims[i + 1]
        weights.append(theta[off:off + fi * fo].reshape(fi, fo))
        off += fi * fo
        biases.append(theta[off:off + fo])
        off += fo
    assert off == theta.size
    return weights, biases


def mlp_init(dims, seed: int, head: str = "zero") -> Mlp:
    """He-style fan-in init for hidden weights, zero biases.

    ``head`` picks the output-layer init. The default "zero" starts every
    prediction at 1/2, so no (row, label) entry is confident before training
    has seen data. "he" draws the head at fan-in scale like the hidden layers;
    that classic choice seeds the confidence gate with arbitrary one-sided
    entries that self-training can lock in, which some stress configs want.
    """
    dims = tuple(int(d) for d in dims)
    if len(dims) < 2 or any(d < 1 for d in dims):
        raise ValueError(f"bad layer dims {dims}")
    if head not in ("zero", "he"):
        raise ValueError(f"unknown head init {head!r}")
    rng = np.random.default_rng(seed)
    theta = np.zeros(param_count(dims), dtype=np.float64)
    weights, biases = _make_views(dims, theta)
    scaled = weights if head == "he" else weights[:-1]
    for i, w in enumerate(scaled):
        w[:] = rng.standard_normal(w.shape) * np.sqrt(2.0 / dims[i])
    return Mlp(dims=dims, theta=theta, weights=weights, biases=biases)


def mlp_from_theta(dims, theta: np.ndarray) -> Mlp:
    dims = tuple(int(d) for d in dims)
    theta = np.ascontiguousarray(theta, dtype=np.float64)
    if theta.size != param_count(dims):
        raise ValueError(f"theta size {theta.size} does not match dims {dims}")
    weights, biases = _make_views(dims, theta)
    return Mlp(dims=dims, theta=theta, weights=weights, biases=biases)


def forward(mlp: Mlp, x: np.ndarray):
    """Return (logits, cache); hidden activations are ReLU, output is linear."""
    acts = [np.ascontiguousarray(x, dtype=np.float64)]
    pre = []
    h = acts[0]
    last = len(mlp.weights) - 1
    for i, (w, b) in enumerate(zip(mlp.weights, mlp.biases)):
        z = K.matmul_nn(h, w)
        K.add_bias_inplace(z, b)
        pre.append(z)
        h = K.relu(z) if i < last else z
        acts.append(h)
    return h, (acts, pre)


def backward(mlp: Mlp, cache, dlogits: np.ndarray) -> np.ndarray:
    """Grad of a scalar loss wrt theta, given d(loss)/d(logits). Flat, fresh array."""
    acts, pre = cache
    grad = np.zeros_like(mlp.theta)
    gw, gb = _make_views(mlp.dims, grad)
    dz = np.ascontiguousarray(dlogits, dtype=np.float64)
    for i in range(len(mlp.weights) - 1, -1, -1):
        gw[i][:] = K.matmul_tn(acts[i], dz)
        gb[i][:] = dz.sum(axis=0)
        if i > 0:
            dz = K.matmul_nt(dz, mlp.weights[i])
            K.relu_grad_inplace(dz, pre[i - 1])
    return grad


def predict_probs(mlp: Mlp, x: np.ndarray) -> np.ndarray:
    logits, _ = forward(mlp, x)
    out = np.empty_like(logits)
    np.negative(np.abs(logits), out=out)
    np.exp(out, out=out)
    out /= 1.0 + out
    np.subtract(1.0, out, out=out, where=logits > 0)
    return out


def cosine(g1: np.ndarray, g2: np.ndarray) -> float:
    """Cosine similarity between flat vectors; 0 when either is near-zero."""
    if g1.shape != g2.shape:
        raise ValueError(f"gradient shapes differ: {g1.shape} vs {g2.shape}")
    n1 = float(np.linalg.norm(g1))
    n2 = float(np.linalg.norm(g2))
    if n1 < 1e-12 or n2 < 1e-12:
        return 0.0
    return float(np.dot(g1, g2) / (n1 * n2))


def save_checkpoint(mlp: Mlp, path) -> None:
    blob = {
        "dims": list(mlp.dims),
        "dtype": "float64",
        "theta": base64.b64encode(mlp.theta.tobytes()).decode("ascii"),
    }
    with open(path, "w") as fh:
        json.dump(blob, fh)


def load_checkpoint(path) -> Mlp:
    with open(path) as fh:
        blob = json.load(fh)
    if blob.get("dtype") != "float64":
        raise ValueError(f"unsupported checkpoint dtype {blob.get('dtype')!r}")
    theta = np.frombuffer(base64.b64decode(blob["theta"]), dtype=np.float64).copy()
    return mlp_from_theta(tuple(blob["dims"]), theta)
