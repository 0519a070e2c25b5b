"""Siamese sequence-pair labeler with handwritten gradients.

Both sequences are embedded by one shared set of weights (token or
character-pooled embeddings plus per-sequence position and side
embeddings), laid out as [ref tokens][SEP][dys tokens], and run through a
stack of residual single-head self-attention layers with a fully visible
mask, so every token can attend to every other.  Each layer normalizes its
input with a learned RMS norm before attending (and the stack output is
normalized once more), the same scheme the reference encoder family uses;
without it the residual stream trains an order of magnitude too slowly at
the small learning rates used here.  A width-3 convolution and a ReLU MLP
head emit three logits per position; reference positions are restricted to
classes {1,2} and dysfluent positions to {0,1} by masking the invalid
logit before the softmax.

All math is float64 numpy.  Every forward quantity needed by the backward
pass is kept in a cache dict, and gradients are exact (they are validated
against central finite differences by gradcheck).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import ModelError, ValidationError
from ..labels import JointLabelEncoding
from ..phonemes import Level, TokenSequence
from .tokenizer import TokenizerSpec

NEG_MASK = -1e9

SIDE_REF, SIDE_SEP, SIDE_DYS = 0, 1, 2


@dataclass(frozen=True)
class EncoderConfig:
    embed_dim: int = 64
    context_layers: int = 2
    ffn_dim: int = 256
    conv_kernel: int = 3
    conv_channels: int = 128
    mlp_hidden: int = 128
    max_seq: int = 64
    max_word_len: int = 16
    classes: int = 3

    def __post_init__(self):
        dims = (
            self.embed_dim, self.context_layers, self.ffn_dim, self.conv_kernel,
            self.conv_channels, self.mlp_hidden, self.max_seq, self.max_word_len,
        )
        if any(d < 1 for d in dims):
            raise ValidationError("all encoder dimensions must be >= 1")
        if self.classes != 3:
            raise ValidationError("the label head is a 3-class classifier")
        if self.conv_kernel % 2 == 0:
            raise ValidationError("conv kernel must be odd (same-padding)")


def init_params(
    cfg: EncoderConfig, tokenizer: TokenizerSpec, seed: int
) -> dict[str, np.ndarray]:
    """Fresh parameter set: uniform(-0.1, 0.1) embeddings, uniform
    +-1/sqrt(fan_in) linear maps, zero biases."""
    rng = np.random.default_rng([seed, 0x1A17])
    d = cfg.embed_dim
    params: dict[str, np.ndarray] = {}

    def emb(name, *shape):
        params[name] = rng.uniform(-0.1, 0.1, size=shape)

    def lin(name, fan_in, *shape):
        bound = 1.0 / np.sqrt(fan_in)
        params[name] = rng.uniform(-bound, bound, size=shape)

    n_tok = tokenizer.size if tokenizer.level is Level.PHONEME else 3
    emb("tok_emb", n_tok, d)
    emb("pos_emb", cfg.max_seq, d)
    emb("side_emb", 3, d)
    if tokenizer.level is Level.WORD:
        emb("char_emb", tokenizer.char_size, d)
        lin("char_conv_w", 3 * d, 3, d, d)
        params["char_conv_b"] = np.zeros(d)
    for l in range(cfg.context_layers):
        params[f"norm{l}a_g"] = np.ones(d)
        for piece in ("wq", "wk", "wv", "wo"):
            lin(f"attn{l}_{piece}", d, d, d)
        # Query and key start as the same draw: attention logits then begin
        # as a similarity kernel (same-token positions attend to each other),
        # which is the matching prior this task needs.  The two matrices
        # decouple as soon as training starts.
        params[f"attn{l}_wk"] = params[f"attn{l}_wq"].copy()
        params[f"norm{l}f_g"] = np.ones(d)
        lin(f"ffn{l}_w1", d, d, cfg.ffn_dim)
        params[f"ffn{l}_b1"] = np.zeros(cfg.ffn_dim)
        lin(f"ffn{l}_w2", cfg.ffn_dim, cfg.ffn_dim, d)
        params[f"ffn{l}_b2"] = np.zeros(d)
    params["norm_out_g"] = np.ones(d)
    lin("conv_w", cfg.conv_kernel * d, cfg.conv_kernel, d, cfg.conv_channels)
    params["conv_b"] = np.zeros(cfg.conv_channels)
    lin("mlp_w", cfg.conv_channels, cfg.conv_channels, cfg.mlp_hidden)
    params["mlp_b"] = np.zeros(cfg.mlp_hidden)
    lin("out_w", cfg.mlp_hidden, cfg.mlp_hidden, cfg.classes)
    params["out_b"] = np.zeros(cfg.classes)
    return params


def param_shapes(cfg: EncoderConfig, tokenizer: TokenizerSpec) -> dict[str, tuple]:
    return {k: v.shape for k, v in init_params(cfg, tokenizer, 0).items()}


# -- batches -----------------------------------------------------------------

@dataclass
class Batch:
    tok_ids: np.ndarray            # (B, L) vocabulary ids
    positions: np.ndarray          # (B, L) per-sequence positions
    sides: np.ndarray              # (B, L) 0=ref 1=sep 2=dys
    valid: np.ndarray              # (B, L) 1.0 for non-PAD positions
    labels: np.ndarray             # (B, L) class id or -1
    allowed: np.ndarray            # (B, L, 3) class mask
    ref_lens: np.ndarray           # (B,)
    dys_lens: np.ndarray           # (B,)
    char_ids: np.ndarray | None = None   # (B, L, Lc) word level only

    @property
    def size(self) -> int:
        return self.tok_ids.shape[0]


def build_batch(
    pairs: Sequence[tuple[TokenSequence, TokenSequence]],
    tokenizer: TokenizerSpec,
    cfg: EncoderConfig,
    gold: Sequence[JointLabelEncoding] | None = None,
) -> Batch:
    if not pairs:
        raise ModelError("empty batch")
    for ref, dys in pairs:
        if len(ref) == 0 or len(dys) == 0:
            raise ModelError("sequences must be non-empty")
        if len(ref) > cfg.max_seq or len(dys) > cfg.max_seq:
            raise ModelError(f"sequence exceeds max_seq={cfg.max_seq}")
        if ref.level is not tokenizer.level or dys.level is not tokenizer.level:
            raise ModelError("sequence level does not match the tokenizer")
    B = len(pairs)
    joint = [len(r) + 1 + len(d) for r, d in pairs]
    L = max(joint)
    tok_ids = np.zeros((B, L), dtype=np.int64)
    positions = np.zeros((B, L), dtype=np.int64)
    sides = np.full((B, L), SIDE_SEP, dtype=np.int64)
    valid = np.zeros((B, L))
    labels = np.full((B, L), -1, dtype=np.int64)
    allowed = np.ones((B, L, 3))
    ref_lens = np.zeros(B, dtype=np.int64)
    dys_lens = np.zeros(B, dtype=np.int64)
    words: list[list[str]] | None = (
        [[] for _ in range(B)] if tokenizer.level is Level.WORD else None
    )
    sep_id = tokenizer.vocab["<sep>"]
    for b, (ref, dys) in enumerate(pairs):
        nr, nd = len(ref), len(dys)
        ref_lens[b], dys_lens[b] = nr, nd
        ids = np.concatenate([
            tokenizer.encode(ref.tokens), [sep_id], tokenizer.encode(dys.tokens)
        ])
        tok_ids[b, : len(ids)] = ids
        positions[b, :nr] = np.arange(nr)
        positions[b, nr + 1 : nr + 1 + nd] = np.arange(nd)
        sides[b, :nr] = SIDE_REF
        sides[b, nr] = SIDE_SEP
        sides[b, nr + 1 : nr + 1 + nd] = SIDE_DYS
        valid[b, : nr + 1 + nd] = 1.0
        allowed[b, :nr, 0] = 0.0            # ref side: {1, 2}
        allowed[b, nr + 1 : nr + 1 + nd, 2] = 0.0   # dys side: {0, 1}
        if gold is not None:
            enc = gold[b]
            labels[b, :nr] = enc.ref_labels
            labels[b, nr + 1 : nr + 1 + nd] = enc.dys_labels
        if words is not None:
            words[b] = list(ref.tokens) + ["<sep>"] + list(dys.tokens)
    char_ids = None
    if words is not None:
        Lc = cfg.max_word_len
        char_ids = np.zeros((B, L, Lc), dtype=np.int64)
        for b in range(B):
            for t, w in enumerate(words[b]):
                if w != "<sep>":
                    char_ids[b, t] = tokenizer.encode_chars(w, Lc)
    return Batch(
        tok_ids, positions, sides, valid, labels, allowed,
        ref_lens, dys_lens, char_ids,
    )


# -- forward -----------------------------------------------------------------

RMS_EPS = 1e-6


def _rmsnorm(x: np.ndarray, g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Returns (normalized, rms) with rms kept for the backward pass."""
    rms = np.sqrt((x * x).mean(axis=-1, keepdims=True) + RMS_EPS)
    return x / rms * g, rms


def _rmsnorm_backward(
    x: np.ndarray, g: np.ndarray, rms: np.ndarray, dy: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    d = x.shape[-1]
    dg = (dy * x / rms).sum(axis=tuple(range(x.ndim - 1)))
    inner = (dy * g * x).sum(axis=-1, keepdims=True)
    dx = dy * g / rms - x * inner / (d * rms**3)
    return dx, dg


def _shift(x: np.ndarray, s: int, axis: int) -> np.ndarray:
    """shift(x, s)[t] = x[t + s], zero-padded at the edges."""
    if s == 0:
        return x
    out = np.zeros_like(x)
    src = [slice(None)] * x.ndim
    dst = [slice(None)] * x.ndim
    if s > 0:
        src[axis] = slice(s, None)
        dst[axis] = slice(None, -s)
    else:
        src[axis] = slice(None, s)
        dst[axis] = slice(-s, None)
    out[tuple(dst)] = x[tuple(src)]
    return out


def _conv1d(x: np.ndarray, w: np.ndarray, b: np.ndarray, axis: int) -> np.ndarray:
    kernel = w.shape[0]
    half = kernel // 2
    out = None
    for k in range(kernel):
        term = _shift(x, k - half, axis) @ w[k]
        out = term if out is None else out + term
    return out + b


def _conv1d_backward(
    x: np.ndarray, w: np.ndarray, dz: np.ndarray, axis: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    kernel = w.shape[0]
    half = kernel // 2
    ndim = x.ndim
    sum_axes = tuple(range(ndim - 1))
    dw = np.empty_like(w)
    dx = np.zeros_like(x)
    for k in range(kernel):
        shifted = _shift(x, k - half, axis)
        dw[k] = np.tensordot(shifted, dz, axes=(sum_axes, sum_axes))
        dx += _shift(dz @ w[k].T, half - k, axis)
    db = dz.sum(axis=sum_axes)
    return dx, dw, db


def _embed_forward(params, cfg, tokenizer, batch, cache):
    tok = params["tok_emb"]
    if tokenizer.level is Level.PHONEME:
        x = tok[batch.tok_ids]
    else:
        special = (batch.tok_ids < 3) & (batch.char_ids.sum(axis=-1) == 0)
        c_emb = params["char_emb"][batch.char_ids]          # (B, L, Lc, d)
        z = _conv1d(c_emb, params["char_conv_w"], params["char_conv_b"], axis=2)
        r = np.maximum(z, 0.0)
        cmask = (batch.char_ids != 0).astype(float)         # char PAD id is 0
        counts = np.maximum(cmask.sum(axis=-1, keepdims=True), 1.0)
        pooled = (r * cmask[..., None]).sum(axis=2) / counts
        spec_vec = tok[np.clip(batch.tok_ids, 0, 2)]
        blend = special[..., None].astype(float)
        x = blend * spec_vec + (1.0 - blend) * pooled
        cache.update(
            char_emb_in=c_emb, char_z=z, char_r=r, char_mask=cmask,
            char_counts=counts, special=blend,
        )
    x = x + params["pos_emb"][batch.positions] + params["side_emb"][batch.sides]
    return x


def _embed_backward(params, tokenizer, batch, dx, grads, cache):
    np.add.at(grads["pos_emb"], batch.positions, dx)
    np.add.at(grads["side_emb"], batch.sides, dx)
    if tokenizer.level is Level.PHONEME:
        np.add.at(grads["tok_emb"], batch.tok_ids, dx)
        return
    blend = cache["special"]
    np.add.at(grads["tok_emb"], np.clip(batch.tok_ids, 0, 2), dx * blend)
    dpool = dx * (1.0 - blend)
    cmask, counts = cache["char_mask"], cache["char_counts"]
    dr = dpool[:, :, None, :] * (cmask[..., None] / counts[..., None])
    dz = dr * (cache["char_z"] > 0)
    dc, dw, db = _conv1d_backward(cache["char_emb_in"], params["char_conv_w"], dz, axis=2)
    grads["char_conv_w"] += dw
    grads["char_conv_b"] += db
    np.add.at(grads["char_emb"], batch.char_ids, dc)


def forward(
    params: dict[str, np.ndarray],
    cfg: EncoderConfig,
    tokenizer: TokenizerSpec,
    batch: Batch,
) -> tuple[np.ndarray, np.ndarray, dict]:
    """Run the full model; returns (logits, probs, cache)."""
    cache: dict = {}
    x = _embed_forward(params, cfg, tokenizer, batch, cache)
    d = cfg.embed_dim
    scale = 1.0 / np.sqrt(d)
    key_mask = (1.0 - batch.valid)[:, None, :] * NEG_MASK
    layers = []
    for l in range(cfg.context_layers):
        wq, wk = params[f"attn{l}_wq"], params[f"attn{l}_wk"]
        wv, wo = params[f"attn{l}_wv"], params[f"attn{l}_wo"]
        xn, rms = _rmsnorm(x, params[f"norm{l}a_g"])
        q, k, v = xn @ wq, xn @ wk, xn @ wv
        s = q @ k.transpose(0, 2, 1) * scale + key_mask
        s -= s.max(axis=-1, keepdims=True)
        e = np.exp(s)
        a = e / e.sum(axis=-1, keepdims=True)
        h = a @ v
        y = x + h @ wo
        fn, frms = _rmsnorm(y, params[f"norm{l}f_g"])
        f_pre = fn @ params[f"ffn{l}_w1"] + params[f"ffn{l}_b1"]
        f_act = np.maximum(f_pre, 0.0)
        z = y + f_act @ params[f"ffn{l}_w2"] + params[f"ffn{l}_b2"]
        layers.append({
            "x": x, "xn": xn, "rms": rms, "q": q, "k": k, "v": v, "a": a, "h": h,
            "y": y, "fn": fn, "frms": frms, "f_pre": f_pre, "f_act": f_act,
        })
        x = z
    cache["layers"] = layers
    xf, rms_out = _rmsnorm(x, params["norm_out_g"])
    cache["pre_out_norm"] = x
    cache["rms_out"] = rms_out
    cache["features"] = xf

    xh = xf * batch.valid[..., None]
    z = _conv1d(xh, params["conv_w"], params["conv_b"], axis=1)
    r = np.maximum(z, 0.0)
    m_pre = r @ params["mlp_w"] + params["mlp_b"]
    m = np.maximum(m_pre, 0.0)
    logits = m @ params["out_w"] + params["out_b"]
    masked = logits + (1.0 - batch.allowed) * NEG_MASK
    masked = masked - masked.max(axis=-1, keepdims=True)
    e = np.exp(masked)
    probs = e / e.sum(axis=-1, keepdims=True)
    cache.update(xh=xh, conv_z=z, conv_r=r, mlp_pre=m_pre, mlp_out=m)
    return logits, probs, cache


def backward(
    params: dict[str, np.ndarray],
    cfg: EncoderConfig,
    tokenizer: TokenizerSpec,
    batch: Batch,
    cache: dict,
    dlogits: np.ndarray,
) -> dict[str, np.ndarray]:
    """Gradients of the loss for every parameter, given d loss / d logits."""
    grads = {k: np.zeros_like(v) for k, v in params.items()}
    axes = ((0, 1), (0, 1))

    m = cache["mlp_out"]
    grads["out_w"] += np.tensordot(m, dlogits, axes=axes)
    grads["out_b"] += dlogits.sum(axis=(0, 1))
    dm = dlogits @ params["out_w"].T
    dm_pre = dm * (cache["mlp_pre"] > 0)
    grads["mlp_w"] += np.tensordot(cache["conv_r"], dm_pre, axes=axes)
    grads["mlp_b"] += dm_pre.sum(axis=(0, 1))
    dr = dm_pre @ params["mlp_w"].T
    dz = dr * (cache["conv_z"] > 0)
    dxh, dconv_w, dconv_b = _conv1d_backward(cache["xh"], params["conv_w"], dz, axis=1)
    grads["conv_w"] += dconv_w
    grads["conv_b"] += dconv_b
    dxf = dxh * batch.valid[..., None]
    dx, dg_out = _rmsnorm_backward(
        cache["pre_out_norm"], params["norm_out_g"], cache["rms_out"], dxf
    )
    grads["norm_out_g"] += dg_out

    scale = 1.0 / np.sqrt(cfg.embed_dim)
    for l in reversed(range(cfg.context_layers)):
        st = cache["layers"][l]
        wq, wk = params[f"attn{l}_wq"], params[f"attn{l}_wk"]
        wv, wo = params[f"attn{l}_wv"], params[f"attn{l}_wo"]
        xn, q, k, v, a, h = st["xn"], st["q"], st["k"], st["v"], st["a"], st["h"]

        # feed-forward sublayer: z = y + relu(fn @ w1 + b1) @ w2 + b2
        dz = dx
        grads[f"ffn{l}_w2"] += np.tensordot(st["f_act"], dz, axes=axes)
        grads[f"ffn{l}_b2"] += dz.sum(axis=(0, 1))
        df_act = dz @ params[f"ffn{l}_w2"].T
        df_pre = df_act * (st["f_pre"] > 0)
        grads[f"ffn{l}_w1"] += np.tensordot(st["fn"], df_pre, axes=axes)
        grads[f"ffn{l}_b1"] += df_pre.sum(axis=(0, 1))
        dfn = df_pre @ params[f"ffn{l}_w1"].T
        dy_norm, dgf = _rmsnorm_backward(
            st["y"], params[f"norm{l}f_g"], st["frms"], dfn
        )
        grads[f"norm{l}f_g"] += dgf
        dy = dz + dy_norm

        # attention sublayer: y = x + softmax(qk'/sqrt(d)) v wo
        do = dy
        grads[f"attn{l}_wo"] += np.tensordot(h, do, axes=axes)
        dh = do @ wo.T
        da = dh @ v.transpose(0, 2, 1)
        dv = a.transpose(0, 2, 1) @ dh
        ds = a * (da - (da * a).sum(axis=-1, keepdims=True))
        dq = ds @ k * scale
        dk = ds.transpose(0, 2, 1) @ q * scale
        grads[f"attn{l}_wq"] += np.tensordot(xn, dq, axes=axes)
        grads[f"attn{l}_wk"] += np.tensordot(xn, dk, axes=axes)
        grads[f"attn{l}_wv"] += np.tensordot(xn, dv, axes=axes)
        dxn = dq @ wq.T + dk @ wk.T + dv @ wv.T
        dx_norm, dg = _rmsnorm_backward(
            st["x"], params[f"norm{l}a_g"], st["rms"], dxn
        )
        grads[f"norm{l}a_g"] += dg
        dx = dy + dx_norm

    _embed_backward(params, tokenizer, batch, dx, grads, cache)
    return grads


# -- inference ---------------------------------------------------------------

@dataclass(frozen=True)
class PredictionResult:
    labels: JointLabelEncoding
    ref_probs: np.ndarray   # (|ref|, 3); class 0 is masked to probability 0
    dys_probs: np.ndarray   # (|dys|, 3); class 2 is masked to probability 0


def encode_pair(
    ref: TokenSequence,
    dys: TokenSequence,
    tokenizer: TokenizerSpec,
    params: dict[str, np.ndarray],
    cfg: EncoderConfig = EncoderConfig(),
) -> np.ndarray:
    """Encoder features for the [ref][SEP][dys] layout, shape (L, d)."""
    batch = build_batch([(ref, dys)], tokenizer, cfg)
    _, _, cache = forward(params, cfg, tokenizer, batch)
    return cache["features"][0]


def predict_batch(
    params, cfg, tokenizer, pairs
) -> list[PredictionResult]:
    batch = build_batch(pairs, tokenizer, cfg)
    _, probs, _ = forward(params, cfg, tokenizer, batch)
    out = []
    for b, (ref, dys) in enumerate(pairs):
        nr, nd = len(ref), len(dys)
        ref_probs = probs[b, :nr]
        dys_probs = probs[b, nr + 1 : nr + 1 + nd]
        out.append(
            PredictionResult(repair_labels(ref_probs, dys_probs), ref_probs, dys_probs)
        )
    return out


def predict_labels(ref: TokenSequence, dys: TokenSequence, checkpoint) -> PredictionResult:
    """Label a single pair with a trained checkpoint."""
    return predict_batch(
        checkpoint.params, checkpoint.encoder, checkpoint.tokenizer, [(ref, dys)]
    )[0]


def repair_labels(ref_probs: np.ndarray, dys_probs: np.ndarray) -> JointLabelEncoding:
    """Argmax labels, then flip lowest-margin positions until the boundary
    count matches the surviving-reference count.

    Flips that close the gap are pooled from both sides (a surplus of
    boundaries can be fixed by demoting a dysfluent 1 or promoting a
    reference 1 to 2, whichever is least confident).
    """
    ref_labels = [1 if p[1] >= p[2] else 2 for p in ref_probs]
    dys_labels = [1 if p[1] >= p[0] else 0 for p in dys_probs]
    ref_margin = [abs(p[1] - p[2]) for p in ref_probs]
    dys_margin = [abs(p[1] - p[0]) for p in dys_probs]

    def gap():
        return sum(1 for v in ref_labels if v == 1) - sum(dys_labels)

    g = gap()
    if g != 0:
        # Candidate flips that each move the gap one step toward zero.
        if g > 0:
            cands = [(ref_margin[i], 0, i, 2) for i, v in enumerate(ref_labels) if v == 1]
            cands += [(dys_margin[j], 1, j, 1) for j, v in enumerate(dys_labels) if v == 0]
        else:
            cands = [(ref_margin[i], 0, i, 1) for i, v in enumerate(ref_labels) if v == 2]
            cands += [(dys_margin[j], 1, j, 0) for j, v in enumerate(dys_labels) if v == 1]
        cands.sort()
        for _, side, idx, new in cands[: abs(g)]:
            if side == 0:
                ref_labels[idx] = new
            else:
                dys_labels[idx] = new
    assert gap() == 0
    return JointLabelEncoding(tuple(ref_labels), tuple(dys_labels))
