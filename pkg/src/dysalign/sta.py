"""Speech-text alignment at desk scale.

Synthesizes frame-level phoneme emission matrices with gold timing in place
of a trained acoustic model, greedy-decodes them with CTC collapse
semantics, aligns the collapsed sequence to the reference text with any of
the toolkit's aligners, and projects each reference token onto the frame
timeline.  Boundary loss scores predicted against gold time boundaries for
the reference tokens touched by dysfluency events.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .labels import alignment_from_labels
from .phonemes import (
    CATEGORIES,
    INVENTORY,
    Level,
    TokenSequence,
    category_of,
    phoneme_index,
)
from .simulate import CorpusRecord, DysfluencyType

BLANK = 0  # emission class 0; phoneme classes are inventory index + 1
N_CLASSES = len(INVENTORY) + 1
DEFAULT_FRAME_MS = 20.0


@dataclass(frozen=True)
class EmissionMatrix:
    frames: np.ndarray          # (T, 40) row-stochastic posteriors
    frame_ms: float = DEFAULT_FRAME_MS

    def __post_init__(self):
        if self.frames.ndim != 2 or self.frames.shape[1] != N_CLASSES:
            raise ValidationError(f"emission rows must have {N_CLASSES} classes")
        if self.frames.shape[0] < 1:
            raise ValidationError("emission matrix needs at least one frame")
        if not np.allclose(self.frames.sum(axis=1), 1.0, atol=1e-9):
            raise ValidationError("emission rows must sum to 1")

    @property
    def n_frames(self) -> int:
        return int(self.frames.shape[0])


@dataclass(frozen=True)
class FrameSpan:
    token: str
    start_frame: int
    end_frame: int              # half-open

    def __post_init__(self):
        if not (0 <= self.start_frame < self.end_frame):
            raise ValidationError("frame spans must be non-empty and ordered")


@dataclass(frozen=True)
class SegmentSpan:
    """Either a [start_ms, end_ms) span or a missing marker with an anchor."""

    start_ms: float
    end_ms: float
    missing: bool = False

    @classmethod
    def missing_at(cls, anchor_ms: float) -> "SegmentSpan":
        return cls(anchor_ms, anchor_ms, missing=True)


@dataclass(frozen=True)
class Segmentation:
    spans: tuple[SegmentSpan, ...]      # one per reference token


@dataclass(frozen=True)
class EmissionNoise:
    epsilon: float = 0.0        # posterior mass leaked off the true class
    confusion_bias: float = 0.5  # leak fraction routed to same-category phonemes
    seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.epsilon < 1.0):
            raise ValidationError("epsilon must lie in [0, 1)")
        if not (0.0 <= self.confusion_bias <= 1.0):
            raise ValidationError("confusion_bias must lie in [0, 1]")


@dataclass(frozen=True)
class DurationModel:
    """Log-normal frame counts: median 5 frames, sigma 0.4, clamped [2, 20]."""

    median_frames: float = 5.0
    sigma: float = 0.4
    min_frames: int = 2
    max_frames: int = 20

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        raw = rng.lognormal(mean=np.log(self.median_frames), sigma=self.sigma, size=n)
        return np.clip(np.round(raw), self.min_frames, self.max_frames).astype(int)


def synthesize_emissions(
    dys: TokenSequence,
    durations: DurationModel = DurationModel(),
    noise: EmissionNoise = EmissionNoise(),
    frame_ms: float = DEFAULT_FRAME_MS,
) -> tuple[EmissionMatrix, tuple[FrameSpan, ...]]:
    """Gold-timed emission grid for a dysfluent phoneme sequence.

    Each token holds 1 - epsilon on its own class for a sampled number of
    frames and is followed by one blank frame; the leaked epsilon is split
    between same-category phonemes (confusion_bias) and everything else.
    """
    if dys.level is not Level.PHONEME:
        raise ValidationError("emission synthesis is phoneme-level only")
    if len(dys) == 0:
        raise ValidationError("cannot synthesize an empty sequence")
    rng = np.random.default_rng([noise.seed, 0xE311])
    lengths = durations.sample(len(dys), rng)
    total = int(lengths.sum()) + len(dys)  # one trailing blank per token
    frames = np.zeros((total, N_CLASSES))
    spans = []
    t = 0
    for tok, dur in zip(dys.tokens, lengths):
        cls = phoneme_index(tok) + 1
        frames[t : t + dur] = _posterior_row(cls, tok, noise)
        spans.append(FrameSpan(tok, t, t + int(dur)))
        t += int(dur)
        frames[t] = _posterior_row(BLANK, None, noise)
        t += 1
    return EmissionMatrix(frames, frame_ms), tuple(spans)


def _posterior_row(cls: int, token: str | None, noise: EmissionNoise) -> np.ndarray:
    row = np.zeros(N_CLASSES)
    eps = noise.epsilon
    row[cls] = 1.0 - eps
    if eps == 0.0:
        return row
    if token is not None:
        same = [
            phoneme_index(p) + 1
            for p in CATEGORIES[category_of(token)]
            if p != token
        ]
    else:
        same = []
    others = [c for c in range(N_CLASSES) if c != cls and c not in same]
    if same:
        row[same] += noise.confusion_bias * eps / len(same)
        row[others] += (1.0 - noise.confusion_bias) * eps / len(others)
    else:
        row[others] += eps / len(others)
    return row


def ctc_greedy_decode(
    emissions: EmissionMatrix,
) -> tuple[TokenSequence | None, tuple[FrameSpan, ...]]:
    """Per-frame argmax, collapse repeats, drop blanks.

    Each surviving token's span is its contiguous argmax run; a class
    re-emitted after a blank (or another class) starts a new token.  An
    all-blank matrix decodes to (None, ()).
    """
    best = np.argmax(emissions.frames, axis=1)
    tokens: list[str] = []
    spans: list[FrameSpan] = []
    prev = BLANK
    start = 0
    for t, cls in enumerate(best):
        cls = int(cls)
        if cls != prev:
            if prev != BLANK:
                spans.append(FrameSpan(INVENTORY[prev - 1], start, t))
                tokens.append(INVENTORY[prev - 1])
            start = t
            prev = cls
    if prev != BLANK:
        spans.append(FrameSpan(INVENTORY[prev - 1], start, len(best)))
        tokens.append(INVENTORY[prev - 1])
    if not tokens:
        return None, ()
    return TokenSequence(Level.PHONEME, tuple(tokens)), tuple(spans)


def project_alignment(
    gold_groups: tuple[tuple[int, ...], ...],
    spans: tuple[FrameSpan, ...],
    frame_ms: float,
) -> Segmentation:
    """Reference-token time spans from a grouped alignment over decode spans.

    A token's span runs from its group's first frame to its last; a missing
    token anchors at the end of the previous non-missing span (recording
    start if there is none).
    """
    out: list[SegmentSpan] = []
    last_end = 0.0
    for group in gold_groups:
        if not group:
            out.append(SegmentSpan.missing_at(last_end))
            continue
        start = spans[group[0]].start_frame * frame_ms
        end = spans[group[-1]].end_frame * frame_ms
        out.append(SegmentSpan(start, end))
        last_end = end
    return Segmentation(tuple(out))


def segment(
    reference: TokenSequence,
    emissions: EmissionMatrix,
    aligner,
) -> Segmentation:
    """Decode the emission grid and project the reference onto the timeline.

    ``aligner(ref, dys) -> JointLabelEncoding`` chooses the text aligner
    (hard/soft LCS or a neural checkpoint adapter).  An empty decode yields
    an all-missing segmentation.
    """
    if len(reference) == 0:
        raise ValidationError("reference must be non-empty")
    decoded, spans = ctc_greedy_decode(emissions)
    if decoded is None:
        return Segmentation(
            tuple(SegmentSpan.missing_at(0.0) for _ in range(len(reference)))
        )
    labels = aligner(reference, decoded)
    gold = alignment_from_labels(labels, reference, decoded)
    return project_alignment(gold.groups, spans, emissions.frame_ms)


def gold_segmentation(record: CorpusRecord, spans: tuple[FrameSpan, ...], frame_ms: float) -> Segmentation:
    """Project the simulator's gold alignment onto the synthesized timeline."""
    return project_alignment(record.gold.groups, spans, frame_ms)


@dataclass(frozen=True)
class BoundaryLoss:
    mse_ms2: float
    rmse_ms: float
    n_endpoints: int

    @classmethod
    def from_errors(cls, sq_errors: list[float]) -> "BoundaryLoss":
        if not sq_errors:
            return cls(float("nan"), float("nan"), 0)
        mse = float(np.mean(sq_errors))
        return cls(mse, float(np.sqrt(mse)), len(sq_errors))


def boundary_squared_errors(
    pred: Segmentation,
    gold: Segmentation,
    record: CorpusRecord,
    scope: DysfluencyType | None = None,
) -> list[float]:
    """Squared start/end errors (ms^2) over event-touched reference tokens.

    ``scope`` restricts to tokens touched by one event kind; None scores
    every event-touched token.  Missing tokens contribute their anchor as a
    degenerate start == end span.
    """
    if len(pred.spans) != len(record.reference) or len(gold.spans) != len(record.reference):
        raise ValidationError("segmentations must cover the reference")
    touched = sorted({
        e.ref_index for e in record.events if scope is None or e.kind is scope
    })
    errors: list[float] = []
    for i in touched:
        p, g = pred.spans[i], gold.spans[i]
        errors.append((p.start_ms - g.start_ms) ** 2)
        errors.append((p.end_ms - g.end_ms) ** 2)
    return errors


def boundary_loss(
    pred: Segmentation,
    gold: Segmentation,
    record: CorpusRecord,
    scope: DysfluencyType | None = None,
) -> BoundaryLoss:
    """Per-record boundary loss; undefined (n=0) when no event is in scope."""
    return BoundaryLoss.from_errors(
        boundary_squared_errors(pred, gold, record, scope)
    )


def run_sta(
    records,
    aligner,
    noise: EmissionNoise = EmissionNoise(),
    durations: DurationModel = DurationModel(),
    frame_ms: float = DEFAULT_FRAME_MS,
) -> dict:
    """Synthesize, decode, segment, and score a whole corpus.

    Per record: emissions are synthesized from the simulated dysfluent
    sequence (noise seed offset by record id), decoded, aligned to the
    reference, and scored against the gold timeline.  The report pools
    squared boundary errors overall and per event kind, and tracks how
    often the aligner recovered the gold label pair exactly.
    """
    overall: list[float] = []
    per_kind: dict[str, list[float]] = {k.value: [] for k in DysfluencyType}
    recovered = 0
    scored = 0
    excluded = 0
    for rec in records:
        rec_noise = EmissionNoise(
            noise.epsilon, noise.confusion_bias, seed=noise.seed * 1_000_003 + rec.id
        )
        emissions, spans = synthesize_emissions(
            rec.dysfluent, durations, rec_noise, frame_ms
        )
        gold_seg = gold_segmentation(rec, spans, frame_ms)
        decoded, dec_spans = ctc_greedy_decode(emissions)
        if decoded is None:
            pred_seg = Segmentation(
                tuple(SegmentSpan.missing_at(0.0) for _ in range(len(rec.reference)))
            )
        else:
            labels = aligner(rec.reference, decoded)
            if (
                decoded.tokens == rec.dysfluent.tokens
                and labels == rec.labels
            ):
                recovered += 1
            pred_align = alignment_from_labels(labels, rec.reference, decoded)
            pred_seg = project_alignment(pred_align.groups, dec_spans, frame_ms)
        errs = boundary_squared_errors(pred_seg, gold_seg, rec)
        if errs:
            overall.extend(errs)
            scored += 1
        else:
            excluded += 1
        for kind in DysfluencyType:
            per_kind[kind.value].extend(
                boundary_squared_errors(pred_seg, gold_seg, rec, scope=kind)
            )
    def _stats(errors: list[float]) -> dict:
        bl = BoundaryLoss.from_errors(errors)
        return {
            "mse_ms2": None if bl.n_endpoints == 0 else bl.mse_ms2,
            "rmse_ms": None if bl.n_endpoints == 0 else bl.rmse_ms,
            "n_endpoints": bl.n_endpoints,
        }

    report = {
        "n_records": len(records),
        "epsilon": noise.epsilon,
        "confusion_bias": noise.confusion_bias,
        "frame_ms": frame_ms,
        "recovery_rate": recovered / len(records) if records else 0.0,
        "overall": {
            **_stats(overall),
            "n_records_scored": scored,
            "n_records_excluded": excluded,
        },
        "per_kind": {k: _stats(v) for k, v in sorted(per_kind.items())},
    }
    return report


# -- emission persistence ----------------------------------------------------

_MAGIC = b"DYSEMIT1"


def write_emissions(
    emissions: EmissionMatrix, spans: tuple[FrameSpan, ...], path
) -> None:
    """Binary container + sidecar gold-span JSON (<path>.spans.json)."""
    frames = np.ascontiguousarray(emissions.frames, dtype="<f4")
    header = struct.pack(
        "<8sIId", _MAGIC, frames.shape[0], frames.shape[1], emissions.frame_ms
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(frames.tobytes())
    sidecar = [
        {"token": s.token, "start_frame": s.start_frame, "end_frame": s.end_frame}
        for s in spans
    ]
    with open(str(path) + ".spans.json", "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, sort_keys=True)
        fh.write("\n")


def read_emissions(path) -> tuple[EmissionMatrix, tuple[FrameSpan, ...]]:
    with open(path, "rb") as fh:
        header = fh.read(struct.calcsize("<8sIId"))
        magic, n_frames, n_classes, frame_ms = struct.unpack("<8sIId", header)
        if magic != _MAGIC:
            raise ValidationError("not an emission container")
        if n_classes != N_CLASSES:
            raise ValidationError(f"expected {N_CLASSES} classes, found {n_classes}")
        raw = fh.read(n_frames * n_classes * 4)
    frames = np.frombuffer(raw, dtype="<f4").reshape(n_frames, n_classes)
    frames = frames.astype(np.float64)
    frames /= frames.sum(axis=1, keepdims=True)  # undo float32 rounding
    emissions = EmissionMatrix(frames, float(frame_ms))
    try:
        with open(str(path) + ".spans.json", "r", encoding="utf-8") as fh:
            sidecar = json.load(fh)
        spans = tuple(
            FrameSpan(s["token"], int(s["start_frame"]), int(s["end_frame"]))
            for s in sidecar
        )
    except FileNotFoundError:
        spans = ()
    return emissions, spans
