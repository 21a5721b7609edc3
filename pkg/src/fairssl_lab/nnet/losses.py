"""Objective assembly: supervised, pseudo-label, fairness and entropy terms.

Each gradient evaluation runs up to three forward passes (labeled batch, weak
view, strong view). The confidence gate is computed once from the weak view
and shared by the pseudo-label loss and the fairness penalty; mask and
pseudo-labels are constants of the evaluation, so no gradient flows through
the gating decision itself.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..fairness import entropy_penalty, simfair_penalty
from ..numerics import bce_with_logits, sigmoid
from ..pseudolabel import confidence_gate, unsup_loss_grad
from .mlp import Mlp, backward, forward

SELECTORS = ("sup", "unsup", "fairness", "entropy", "total")


class BatchError(ValueError):
    pass


@dataclass
class LossBatch:
    x_lab: np.ndarray | None = None      # (B_l, d)
    y_lab: np.ndarray | None = None      # (B_l, L)
    x_weak: np.ndarray | None = None     # (B_u, d) weak view
    x_strong: np.ndarray | None = None   # (B_u, d) strong view
    groups: np.ndarray | None = None     # (B_u,) sensitive ids, fairness only
    n_groups: int = 0


@dataclass
class ObjectiveConfig:
    tau: float = 0.95
    lambda_u: float = 1.0
    simfair_squared: bool = False
    simfair_all_entries: bool = False


@dataclass
class LossEval:
    loss: float
    grad: np.ndarray
    parts: dict = field(default_factory=dict)   # raw component values
    n_gated: int = 0
    pass_ratio: float = 0.0


def _sup(mlp, batch):
    if batch.x_lab is None or batch.y_lab is None:
        raise BatchError("sup loss needs labeled rows")
    logits, cache = forward(mlp, batch.x_lab)
    y = np.asarray(batch.y_lab, dtype=np.float64)
    loss = float(bce_with_logits(logits, y).mean())
    dlogits = (sigmoid(logits) - y) / y.size
    return loss, cache, dlogits


def _weak_pass(mlp, batch, cfg):
    if batch.x_weak is None:
        raise BatchError("unlabeled losses need the weak view")
    logits_w, cache_w = forward(mlp, batch.x_weak)
    probs_w = sigmoid(logits_w)
    gate = confidence_gate(probs_w, cfg.tau)
    return logits_w, cache_w, probs_w, gate


def grad_of(mlp: Mlp, batch: LossBatch, selector: str, cfg: ObjectiveConfig,
            lam_v: float = 0.0, lam_h: float = 0.0) -> LossEval:
    """Loss and exact flat gradient of one objective term (or the weighted total).

    total = sup + lambda_u * unsup + lam_v * fairness + lam_h * entropy, with a
    single weak forward and one gate snapshot shared across the unlabeled terms.
    """
    if selector not in SELECTORS:
        raise BatchError(f"unknown loss selector {selector!r}")

    if selector == "sup":
        loss, cache, dlogits = _sup(mlp, batch)
        return LossEval(loss=loss, grad=backward(mlp, cache, dlogits),
                        parts={"sup": loss})

    if selector in ("unsup", "fairness", "entropy"):
        logits_w, cache_w, probs_w, gate = _weak_pass(mlp, batch, cfg)
        if selector == "unsup":
            if batch.x_strong is None:
                raise BatchError("unsup loss needs the strong view")
            logits_s, cache_s = forward(mlp, batch.x_strong)
            loss, dlogits_s = unsup_loss_grad(logits_s, gate.pseudo, gate.mask)
            return LossEval(loss=loss, grad=backward(mlp, cache_s, dlogits_s),
                            parts={"unsup": loss}, n_gated=gate.n_gated,
                            pass_ratio=gate.pass_ratio)
        if selector == "fairness":
            if batch.groups is None or batch.n_groups < 2:
                raise BatchError("fairness penalty needs group ids and n_groups >= 2")
            mask = None if cfg.simfair_all_entries else gate.mask
            pen = simfair_penalty(probs_w, batch.groups, batch.n_groups,
                                  mask=mask, squared=cfg.simfair_squared)
            dlogits_w = pen.grad * probs_w * (1.0 - probs_w)
            return LossEval(loss=pen.value, grad=backward(mlp, cache_w, dlogits_w),
                            parts={"fairness": pen.value}, n_gated=gate.n_gated,
                            pass_ratio=gate.pass_ratio)
        ent = entropy_penalty(probs_w)
        dlogits_w = ent.grad * probs_w * (1.0 - probs_w)
        return LossEval(loss=ent.value, grad=backward(mlp, cache_w, dlogits_w),
                        parts={"entropy": ent.value}, n_gated=gate.n_gated,
                        pass_ratio=gate.pass_ratio)

    # total: share the weak forward + gate snapshot across unsup/fairness/entropy
    sup_loss, cache_l, dlogits_l = _sup(mlp, batch)
    grad = backward(mlp, cache_l, dlogits_l)
    parts = {"sup": sup_loss, "unsup": 0.0, "fairness": 0.0, "entropy": 0.0}

    logits_w, cache_w, probs_w, gate = _weak_pass(mlp, batch, cfg)
    if batch.x_strong is None:
        raise BatchError("total loss needs the strong view")
    logits_s, cache_s = forward(mlp, batch.x_strong)
    u_loss, dlogits_s = unsup_loss_grad(logits_s, gate.pseudo, gate.mask)
    parts["unsup"] = u_loss
    if cfg.lambda_u != 0.0:
        grad += cfg.lambda_u * backward(mlp, cache_s, dlogits_s)

    dlogits_w = np.zeros_like(logits_w)
    if lam_v != 0.0:
        if batch.groups is None or batch.n_groups < 2:
            raise BatchError("fairness penalty needs group ids and n_groups >= 2")
        mask = None if cfg.simfair_all_entries else gate.mask
        pen = simfair_penalty(probs_w, batch.groups, batch.n_groups,
                              mask=mask, squared=cfg.simfair_squared)
        parts["fairness"] = pen.value
        dlogits_w += lam_v * pen.grad * probs_w * (1.0 - probs_w)
    if lam_h != 0.0:
        ent = entropy_penalty(probs_w)
        parts["entropy"] = ent.value
        dlogits_w += lam_h * ent.grad * probs_w * (1.0 - probs_w)
    if lam_v != 0.0 or lam_h != 0.0:
        grad += backward(mlp, cache_w, dlogits_w)

    total = (sup_loss + cfg.lambda_u * u_loss
             + lam_v * parts["fairness"] + lam_h * parts["entropy"])
    return LossEval(loss=float(total), grad=grad, parts=parts,
                    n_gated=gate.n_gated, pass_ratio=gate.pass_ratio)


def term_grads(mlp: Mlp, batch: LossBatch, cfg: ObjectiveConfig) -> dict:
    """Separate gradients for the alignment diagnostics, one evaluation each:
    base = sup + lambda_u * unsup, plus raw fairness and entropy grads."""
    sup = grad_of(mlp, batch, "sup", cfg)
    uns = grad_of(mlp, batch, "unsup", cfg)
    fair = grad_of(mlp, batch, "fairness", cfg)
    ent = grad_of(mlp, batch, "entropy", cfg)
    return {
        "base": sup.grad + cfg.lambda_u * uns.grad,
        "fairness": fair.grad,
        "entropy": ent.grad,
        "values": {"sup": sup.loss, "unsup": uns.loss,
                   "fairness": fair.loss, "entropy": ent.loss},
    }
