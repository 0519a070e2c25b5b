"""Trainable siamese aligner with manually implemented gradients."""

from .tokenizer import PAD, SEP, UNK, TokenizerSpec, build_tokenizer
from .model import (
    EncoderConfig,
    PredictionResult,
    encode_pair,
    init_params,
    predict_labels,
    repair_labels,
)
from .loss import FocalLossConfig, focal_loss
from .training import TrainConfig, train
from .checkpoint import ModelCheckpoint, load_checkpoint, save_checkpoint
from .gradcheck import grad_check

__all__ = [
    "PAD", "SEP", "UNK", "TokenizerSpec", "build_tokenizer",
    "EncoderConfig", "PredictionResult", "encode_pair", "init_params",
    "predict_labels", "repair_labels",
    "FocalLossConfig", "focal_loss",
    "TrainConfig", "train",
    "ModelCheckpoint", "load_checkpoint", "save_checkpoint",
    "grad_check",
]
