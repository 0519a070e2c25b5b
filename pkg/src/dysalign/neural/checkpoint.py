"""Versioned checkpoint container for trained aligners.

A checkpoint is one JSON document holding the architecture config, the
tokenizer, every parameter tensor (row-major little-endian float32,
base64), training metadata, and a sha256 checksum over the payload.  Writes
with identical contents are byte-identical.
"""

from __future__ import annotations

import base64
import hashlib
import json
from dataclasses import dataclass

import numpy as np

from ..errors import ModelError
from ..phonemes import Level
from .model import EncoderConfig, param_shapes
from .tokenizer import TokenizerSpec

FORMAT_VERSION = "dysalign-ckpt-1"


@dataclass(frozen=True)
class ModelCheckpoint:
    version: str
    encoder: EncoderConfig
    tokenizer: TokenizerSpec
    params: dict[str, np.ndarray]
    metadata: dict

    def __post_init__(self):
        if self.version != FORMAT_VERSION:
            raise ModelError(f"unrecognized checkpoint version: {self.version!r}")
        expected = param_shapes(self.encoder, self.tokenizer)
        got = {k: v.shape for k, v in self.params.items()}
        if expected != got:
            raise ModelError("parameter shapes do not match the encoder config")


def _payload(ckpt: ModelCheckpoint) -> dict:
    return {
        "version": ckpt.version,
        "encoder": {
            "embed_dim": ckpt.encoder.embed_dim,
            "context_layers": ckpt.encoder.context_layers,
            "conv_kernel": ckpt.encoder.conv_kernel,
            "conv_channels": ckpt.encoder.conv_channels,
            "mlp_hidden": ckpt.encoder.mlp_hidden,
            "max_seq": ckpt.encoder.max_seq,
            "max_word_len": ckpt.encoder.max_word_len,
            "classes": ckpt.encoder.classes,
        },
        "tokenizer": {
            "level": ckpt.tokenizer.level.value,
            "vocab": ckpt.tokenizer.vocab,
            "char_vocab": ckpt.tokenizer.char_vocab,
        },
        "params": {
            name: {
                "shape": list(arr.shape),
                "data": base64.b64encode(
                    np.ascontiguousarray(arr, dtype="<f4").tobytes()
                ).decode("ascii"),
            }
            for name, arr in sorted(ckpt.params.items())
        },
        "metadata": ckpt.metadata,
    }


def save_checkpoint(ckpt: ModelCheckpoint, path) -> None:
    payload = _payload(ckpt)
    body = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    checksum = hashlib.sha256(body.encode("utf-8")).hexdigest()
    doc = json.dumps(
        {"checksum": checksum, "payload": payload},
        sort_keys=True,
        separators=(",", ":"),
    )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(doc)
        fh.write("\n")


def load_checkpoint(path) -> ModelCheckpoint:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    payload = doc.get("payload")
    if payload is None or "checksum" not in doc:
        raise ModelError("not a checkpoint file")
    body = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    if hashlib.sha256(body.encode("utf-8")).hexdigest() != doc["checksum"]:
        raise ModelError("checkpoint checksum mismatch")
    if payload["version"] != FORMAT_VERSION:
        raise ModelError(f"unrecognized checkpoint version: {payload['version']!r}")
    enc = EncoderConfig(**payload["encoder"])
    tok_doc = payload["tokenizer"]
    tokenizer = TokenizerSpec(
        Level(tok_doc["level"]),
        dict(tok_doc["vocab"]),
        dict(tok_doc["char_vocab"]) if tok_doc["char_vocab"] else None,
    )
    params = {}
    for name, item in payload["params"].items():
        raw = base64.b64decode(item["data"])
        arr = np.frombuffer(raw, dtype="<f4").reshape(item["shape"])
        params[name] = arr.astype(np.float64)
    return ModelCheckpoint(payload["version"], enc, tokenizer, params, payload["metadata"])


def checkpoint_from_training(
    encoder: EncoderConfig,
    tokenizer: TokenizerSpec,
    params: dict[str, np.ndarray],
    metadata: dict,
) -> ModelCheckpoint:
    # Quantize to the stored precision immediately so in-memory use and a
    # save/load round trip predict identically.
    quantized = {
        k: v.astype(np.float32).astype(np.float64) for k, v in params.items()
    }
    return ModelCheckpoint(FORMAT_VERSION, encoder, tokenizer, quantized, metadata)
