"""Metrics and experiment harnesses.

Alignment accuracy (exact sequence match plus micro-averaged token label
accuracy), dysfluency-type classification from grouped alignments,
type-specific accuracy tables, and the proportion-ablation driver.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass
from typing import Callable, Sequence

from .classic import ScoringScheme, dtw_align, hard_lcs, soft_lcs
from .errors import DysalignError, EvalError, TrainError
from .labels import (
    GoldAlignment,
    JointLabelEncoding,
    alignment_from_labels,
)
from .phonemes import Level, Similarity, TokenSequence, token_similarity
from .simulate import (
    CorpusRecord,
    DysfluencyType,
    SimulationConfig,
    simulate_corpus,
)

logger = logging.getLogger(__name__)

Aligner = Callable[[TokenSequence, TokenSequence], JointLabelEncoding]


def make_aligner(method: str, checkpoint=None, scheme: ScoringScheme | None = None) -> Aligner:
    """Uniform (ref, dys) -> labels adapter for every alignment method."""
    if method == "hard":
        return lambda ref, dys: hard_lcs(ref, dys).labels
    if method == "soft":
        sch = scheme or ScoringScheme()
        return lambda ref, dys: soft_lcs(ref, dys, sch).labels
    if method == "dtw":
        return lambda ref, dys: dtw_align(ref, dys).labels
    if method == "neural":
        if checkpoint is None:
            raise EvalError("the neural aligner needs a checkpoint")
        from .neural.model import predict_labels

        return lambda ref, dys: predict_labels(ref, dys, checkpoint).labels
    raise EvalError(f"unknown alignment method: {method!r}")


def predict_corpus(
    method: str,
    records: Sequence[CorpusRecord],
    checkpoint=None,
    batch_size: int = 64,
) -> list[JointLabelEncoding]:
    """Label every record; the neural method runs in batches."""
    if method == "neural":
        if checkpoint is None:
            raise EvalError("the neural aligner needs a checkpoint")
        from .neural.model import predict_batch

        out: list[JointLabelEncoding] = []
        for start in range(0, len(records), batch_size):
            chunk = records[start : start + batch_size]
            pairs = [(r.reference, r.dysfluent) for r in chunk]
            out.extend(
                p.labels
                for p in predict_batch(
                    checkpoint.params, checkpoint.encoder, checkpoint.tokenizer, pairs
                )
            )
        return out
    aligner = make_aligner(method)
    return [aligner(r.reference, r.dysfluent) for r in records]


@dataclass(frozen=True)
class AlignmentAccuracyReport:
    method: str
    level: str
    sequence_exact_match: float
    token_label_accuracy: float
    n_records: int

    def as_dict(self) -> dict:
        return {
            "method": self.method,
            "level": self.level,
            "sequence_exact_match": self.sequence_exact_match,
            "token_label_accuracy": self.token_label_accuracy,
            "n_records": self.n_records,
        }


def alignment_accuracy(
    predictions: Sequence[tuple[int, JointLabelEncoding]],
    gold: Sequence[CorpusRecord],
    method: str = "",
) -> AlignmentAccuracyReport:
    """Exact sequence match and micro-averaged per-position accuracy.

    Predictions pair with gold records by id; a mismatch is an error.
    """
    by_id = {r.id: r for r in gold}
    if sorted(by_id) != sorted(i for i, _ in predictions):
        raise EvalError("prediction ids do not match the gold corpus")
    exact = 0
    token_hits = 0
    token_total = 0
    for rec_id, pred in predictions:
        rec = by_id[rec_id]
        g = rec.labels
        if pred == g:
            exact += 1
        if len(pred.ref_labels) != len(g.ref_labels) or len(pred.dys_labels) != len(
            g.dys_labels
        ):
            raise EvalError(f"record {rec_id}: prediction length mismatch")
        token_hits += sum(
            int(a == b) for a, b in zip(pred.ref_labels, g.ref_labels)
        )
        token_hits += sum(
            int(a == b) for a, b in zip(pred.dys_labels, g.dys_labels)
        )
        token_total += len(g.ref_labels) + len(g.dys_labels)
    n = len(gold)
    level = gold[0].level.value if gold else ""
    return AlignmentAccuracyReport(
        method=method,
        level=level,
        sequence_exact_match=exact / n if n else 0.0,
        token_label_accuracy=token_hits / token_total if token_total else 0.0,
        n_records=n,
    )


def classify_types(
    alignment: GoldAlignment, ref: TokenSequence, dys: TokenSequence
) -> set[DysfluencyType]:
    """Read dysfluency kinds off a grouped alignment.

    An empty group marks a deletion; a boundary token that is not exactly
    the reference token marks a substitution; a non-boundary member that is
    exact or same-category marks a repetition, and a dissimilar one an
    insertion.
    """
    kinds: set[DysfluencyType] = set()
    for i, (group, boundary) in enumerate(zip(alignment.groups, alignment.boundaries)):
        if not group:
            kinds.add(DysfluencyType.DELETION)
            continue
        ref_tok = ref[i]
        if dys[boundary] != ref_tok:
            kinds.add(DysfluencyType.SUBSTITUTION)
        for j in group:
            if j == boundary:
                continue
            rel = token_similarity(ref.level, dys[j], ref_tok)
            if rel is Similarity.DISSIMILAR:
                kinds.add(DysfluencyType.INSERTION)
            else:
                kinds.add(DysfluencyType.REPETITION)
    return kinds


_KIND_COLUMNS = ("repetition", "insertion", "deletion", "substitution", "mix")


@dataclass(frozen=True)
class TypeReport:
    accuracy: dict[str, float]   # kind name (or "mix") -> accuracy
    counts: dict[str, int]       # kind name -> bucket size
    n_skipped: int = 0

    def as_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "counts": self.counts,
            "n_skipped": self.n_skipped,
        }


def type_specific_accuracy(
    predictions: Sequence[tuple[int, JointLabelEncoding]],
    gold: Sequence[CorpusRecord],
) -> TypeReport:
    """Bucketed kind-set accuracy: single-kind records per kind, multi-kind
    records in the mix bucket; a record is correct iff the predicted
    kind-set equals the injected kind-set."""
    by_id = {r.id: r for r in gold}
    if sorted(by_id) != sorted(i for i, _ in predictions):
        raise EvalError("prediction ids do not match the gold corpus")
    hits = {k: 0 for k in _KIND_COLUMNS}
    totals = {k: 0 for k in _KIND_COLUMNS}
    skipped = 0
    for rec_id, pred in predictions:
        rec = by_id[rec_id]
        injected = rec.event_kinds()
        if not injected:
            skipped += 1
            continue
        bucket = (
            next(iter(injected)).value if len(injected) == 1 else "mix"
        )
        try:
            pred_align = alignment_from_labels(pred, rec.reference, rec.dysfluent)
            predicted = classify_types(pred_align, rec.reference, rec.dysfluent)
        except DysalignError:
            predicted = None  # undecodable prediction counts as wrong
        totals[bucket] += 1
        if predicted is not None and predicted == set(injected):
            hits[bucket] += 1
    accuracy = {
        k: (hits[k] / totals[k]) if totals[k] else float("nan")
        for k in _KIND_COLUMNS
    }
    return TypeReport(accuracy, totals, skipped)


# -- ablation ----------------------------------------------------------------

DEFAULT_ABLATION: tuple[tuple[str, tuple[float, float, float, float]], ...] = (
    ("Average", (1.0, 1.0, 1.0, 1.0)),
    ("P1", (1.0, 1.5, 1.0, 1.5)),
    ("P2", (1.0, 1.5, 1.5, 1.0)),
    ("P3", (1.0, 1.0, 1.5, 1.5)),
    ("P4", (1.0, 1.0, 1.2, 1.0)),
)


@dataclass(frozen=True)
class AblationSpec:
    rows: tuple[tuple[str, tuple[float, float, float, float]], ...] = DEFAULT_ABLATION

    def __post_init__(self):
        for name, vec in self.rows:
            if len(vec) != 4 or any(v <= 0 for v in vec):
                raise EvalError(f"proportion row {name!r} must have 4 positive entries")


@dataclass(frozen=True)
class AblationResult:
    rows: tuple[tuple[str, TypeReport | None], ...]   # None marks a failed cell

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["proportions"] + [c for c in _KIND_COLUMNS])
        for name, report in self.rows:
            if report is None:
                writer.writerow([name] + ["failed"] * len(_KIND_COLUMNS))
            else:
                writer.writerow(
                    [name]
                    + [f"{report.accuracy[c]:.4f}" for c in _KIND_COLUMNS]
                )
        return buf.getvalue()

    def as_dict(self) -> dict:
        return {
            name: (report.as_dict() if report else None) for name, report in self.rows
        }


def run_ablation(
    texts: Sequence[TokenSequence],
    spec: AblationSpec = AblationSpec(),
    n_records: int = 5000,
    seed: int = 0,
    enc_cfg=None,
    train_cfg=None,
    loss_cfg=None,
    test_frac: float = 0.1,
) -> AblationResult:
    """Simulate -> train -> type-accuracy for each proportion vector.

    A diverging cell is marked failed and the run continues.
    """
    from .neural.model import EncoderConfig
    from .neural.tokenizer import build_tokenizer
    from .neural.training import TrainConfig, train
    from .neural.loss import FocalLossConfig

    enc_cfg = enc_cfg or EncoderConfig()
    train_cfg = train_cfg or TrainConfig()
    loss_cfg = loss_cfg or FocalLossConfig()
    rows: list[tuple[str, TypeReport | None]] = []
    for cell, (name, proportions) in enumerate(spec.rows):
        sim_cfg = SimulationConfig(
            level=Level.PHONEME,
            proportions=proportions,
            seed=seed * 1000 + cell,
        )
        records = simulate_corpus(texts, sim_cfg, n_records)
        n_test = max(1, int(round(len(records) * test_frac)))
        test, training = records[:n_test], records[n_test:]
        tokenizer = build_tokenizer(Level.PHONEME)
        cell_train = TrainConfig(
            batch_size=train_cfg.batch_size,
            epochs=train_cfg.epochs,
            learning_rate=train_cfg.learning_rate,
            seed=train_cfg.seed * 1000 + cell,
        )
        try:
            ckpt = train(training, tokenizer, enc_cfg, cell_train, loss_cfg)
        except TrainError as exc:
            logger.warning("ablation cell %s failed: %s", name, exc)
            rows.append((name, None))
            continue
        preds = predict_corpus("neural", test, ckpt)
        report = type_specific_accuracy(
            [(r.id, p) for r, p in zip(test, preds)], test
        )
        rows.append((name, report))
        logger.info("ablation %s: %s", name, report.accuracy)
    return AblationResult(tuple(rows))


def report_to_json(report) -> str:
    if hasattr(report, "as_dict"):
        report = report.as_dict()
    return json.dumps(report, indent=2, sort_keys=True)
