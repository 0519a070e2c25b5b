"""Focal loss over per-position class probabilities.

loss(p_t) = -alpha_t * (1 - p_t)^gamma * log(p_t), averaged over the
positions that carry a label.  The gradient is returned with respect to the
pre-softmax logits so the model backward pass can chain straight through.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError

PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class FocalLossConfig:
    alpha: tuple[float, float, float] = (0.5, 0.1, 0.8)
    gamma: float = 3.0

    def __post_init__(self):
        if len(self.alpha) != 3 or any(a < 0 for a in self.alpha):
            raise ValidationError("alpha must be 3 non-negative class weights")
        if self.gamma < 0:
            raise ValidationError("gamma must be non-negative")


def focal_term(p_true: np.ndarray, alpha: np.ndarray, gamma: float) -> np.ndarray:
    """Per-position loss values for true-class probabilities."""
    p = np.clip(p_true, PROB_FLOOR, 1.0)
    return -alpha * (1.0 - p) ** gamma * np.log(p)


def focal_loss(
    probs: np.ndarray,
    labels: np.ndarray,
    cfg: FocalLossConfig = FocalLossConfig(),
) -> tuple[float, np.ndarray]:
    """Mean focal loss and its gradient with respect to the logits.

    probs: (..., 3) softmax outputs (rows sum to 1; masked classes are 0).
    labels: (...) int class ids; positions labeled -1 are excluded.

    Returns (loss, dlogits) where dlogits has probs' shape and is already
    divided by the number of contributing positions.
    """
    probs = np.asarray(probs, dtype=float)
    labels = np.asarray(labels)
    if probs.shape[:-1] != labels.shape or probs.shape[-1] != 3:
        raise ValidationError("probs must be labels.shape + (3,)")
    valid = labels >= 0
    count = int(valid.sum())
    if count == 0:
        return 0.0, np.zeros_like(probs)
    alpha = np.asarray(cfg.alpha, dtype=float)
    gamma = float(cfg.gamma)

    safe_labels = np.where(valid, labels, 0)
    p_t = np.take_along_axis(probs, safe_labels[..., None], axis=-1)[..., 0]
    a_t = alpha[safe_labels]
    terms = focal_term(p_t, a_t, gamma)
    loss = float((terms * valid).sum() / count)

    # d loss / d p_t, with p_t clamped away from both ends so gamma < 1
    # stays finite at p_t == 1 (the true limit there is 0).
    p = np.clip(p_t, PROB_FLOOR, 1.0 - PROB_FLOOR)
    one_m = 1.0 - p
    if gamma == 0.0:
        dl_dp = -a_t / p
    else:
        dl_dp = a_t * (gamma * one_m ** (gamma - 1.0) * np.log(p) - one_m**gamma / p)

    # Chain through softmax: d p_t / d z_k = p_t * (delta_tk - p_k).
    delta = np.zeros_like(probs)
    np.put_along_axis(delta, safe_labels[..., None], 1.0, axis=-1)
    dlogits = (dl_dp * p)[..., None] * (delta - probs)
    dlogits *= (valid[..., None] / count)
    return loss, dlogits
