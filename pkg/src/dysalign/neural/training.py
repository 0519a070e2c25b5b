"""Training loop: Adam over length-bucketed minibatches.

Deterministic given the seed: batch membership is fixed by sequence length
(stable order), only the batch visiting order is reshuffled per epoch, and
all reductions run in a fixed order.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import TrainError, ValidationError
from ..labels import JointLabelEncoding
from ..phonemes import TokenSequence
from .checkpoint import ModelCheckpoint, checkpoint_from_training
from .loss import FocalLossConfig, focal_loss
from .model import Batch, EncoderConfig, build_batch, forward, backward, init_params
from .tokenizer import TokenizerSpec

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 32
    epochs: int = 15
    learning_rate: float = 1e-4
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.batch_size < 1 or self.epochs < 1 or self.learning_rate <= 0:
            raise ValidationError("train hyperparameters must be positive")


class Adam:
    def __init__(self, params: dict[str, np.ndarray], cfg: TrainConfig):
        self.cfg = cfg
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]):
        c = self.cfg
        self.t += 1
        b1t = 1.0 - c.beta1**self.t
        b2t = 1.0 - c.beta2**self.t
        for name in sorted(params):
            g = grads[name]
            m = self.m[name]
            v = self.v[name]
            m *= c.beta1
            m += (1.0 - c.beta1) * g
            v *= c.beta2
            v += (1.0 - c.beta2) * g * g
            params[name] -= c.learning_rate * (m / b1t) / (np.sqrt(v / b2t) + c.eps)


def _make_batches(
    pairs: Sequence[tuple[TokenSequence, TokenSequence]],
    gold: Sequence[JointLabelEncoding],
    tokenizer: TokenizerSpec,
    enc_cfg: EncoderConfig,
    batch_size: int,
) -> list[Batch]:
    order = sorted(
        range(len(pairs)), key=lambda i: (len(pairs[i][0]) + len(pairs[i][1]), i)
    )
    batches = []
    for start in range(0, len(order), batch_size):
        idx = order[start : start + batch_size]
        batches.append(
            build_batch(
                [pairs[i] for i in idx], tokenizer, enc_cfg, [gold[i] for i in idx]
            )
        )
    return batches


def _batch_loss(params, enc_cfg, tokenizer, batch, loss_cfg):
    _, probs, cache = forward(params, enc_cfg, tokenizer, batch)
    loss, dlogits = focal_loss(probs, batch.labels, loss_cfg)
    return loss, dlogits, cache


def dataset_loss(params, enc_cfg, tokenizer, batches, loss_cfg) -> float:
    """Position-weighted mean loss over a list of batches."""
    total, count = 0.0, 0
    for batch in batches:
        loss, _, _ = _batch_loss(params, enc_cfg, tokenizer, batch, loss_cfg)
        n = int((batch.labels >= 0).sum())
        total += loss * n
        count += n
    return total / max(count, 1)


def train(
    corpus: Sequence,
    tokenizer: TokenizerSpec,
    enc_cfg: EncoderConfig = EncoderConfig(),
    train_cfg: TrainConfig = TrainConfig(),
    loss_cfg: FocalLossConfig = FocalLossConfig(),
) -> ModelCheckpoint:
    """Train from scratch on corpus records; returns the checkpoint.

    ``corpus`` is a sequence of simulator records (anything exposing
    .reference, .dysfluent, and .labels).  The checkpoint metadata records
    the per-epoch loss trail; entry 0 is the loss of the freshly
    initialized model before any update.
    """
    if not corpus:
        raise ValidationError("training corpus is empty")
    pairs = [(r.reference, r.dysfluent) for r in corpus]
    gold = [r.labels for r in corpus]
    batches = _make_batches(pairs, gold, tokenizer, enc_cfg, train_cfg.batch_size)

    params = init_params(enc_cfg, tokenizer, train_cfg.seed)
    opt = Adam(params, train_cfg)
    rng = np.random.default_rng([train_cfg.seed, 0xADA3])

    epoch_losses = [dataset_loss(params, enc_cfg, tokenizer, batches, loss_cfg)]
    logger.info("epoch 0 (init): loss %.6f", epoch_losses[0])
    for epoch in range(1, train_cfg.epochs + 1):
        order = rng.permutation(len(batches))
        total, count = 0.0, 0
        for bi in order:
            batch = batches[int(bi)]
            loss, dlogits, cache = _batch_loss(
                params, enc_cfg, tokenizer, batch, loss_cfg
            )
            if not np.isfinite(loss):
                raise TrainError(f"loss diverged at epoch {epoch}", epoch=epoch)
            grads = backward(params, enc_cfg, tokenizer, batch, cache, dlogits)
            opt.step(params, grads)
            n = int((batch.labels >= 0).sum())
            total += loss * n
            count += n
        epoch_losses.append(total / max(count, 1))
        logger.info("epoch %d: loss %.6f", epoch, epoch_losses[-1])

    metadata = {
        "seed": train_cfg.seed,
        "epochs": train_cfg.epochs,
        "batch_size": train_cfg.batch_size,
        "learning_rate": train_cfg.learning_rate,
        "loss_alpha": list(loss_cfg.alpha),
        "loss_gamma": loss_cfg.gamma,
        "n_records": len(corpus),
        "epoch_losses": [float(x) for x in epoch_losses],
        "final_loss": float(epoch_losses[-1]),
    }
    return checkpoint_from_training(enc_cfg, tokenizer, params, metadata)
