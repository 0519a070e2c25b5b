"""Dysfluency injection with gold alignment labels.

Injects repetition / insertion / deletion / substitution events into
reference token sequences and records the resulting grouped alignment, the
1/0/2 label pair, and the event list as ground truth.

Generation rules that keep gold data unambiguous:

* at most one event per reference index (positions drawn without
  replacement);
* at least one reference token always survives (deletions are capped);
* inserted phonemes are drawn from categories different from the host
  token, the next surviving reference token, and any deleted tokens in
  between, so insertions never read as repetitions or as substitutions of
  a deleted neighbor, and label decoding attaches every 0-run to the
  correct group;
* inserted word corruptions are re-drawn if they collide with the next
  surviving reference word, for the same reason.
"""

from __future__ import annotations

import enum
import json
import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import InventoryError, ValidationError
from .labels import (
    GoldAlignment,
    JointLabelEncoding,
    alignment_from_labels,
    d2_boundary,
    gold_labels_from_alignment,
)
from .phonemes import Level, TokenSequence, sample_confusable, sample_dissimilar

logger = logging.getLogger(__name__)


class DysfluencyType(enum.Enum):
    REPETITION = "repetition"
    INSERTION = "insertion"
    DELETION = "deletion"
    SUBSTITUTION = "substitution"


#: Canonical order used by proportion vectors: [Rep, Ins, Del, Sub].
KIND_ORDER: tuple[DysfluencyType, ...] = (
    DysfluencyType.REPETITION,
    DysfluencyType.INSERTION,
    DysfluencyType.DELETION,
    DysfluencyType.SUBSTITUTION,
)


@dataclass(frozen=True)
class DysfluencyEvent:
    kind: DysfluencyType
    ref_index: int
    inserted_tokens: tuple[str, ...] = ()
    detail: str = ""


@dataclass(frozen=True)
class SimulationConfig:
    level: Level = Level.PHONEME
    proportions: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)
    events_per_sentence: tuple[int, int] = (1, 3)
    max_repeat: int = 3
    seed: int = 0

    def __post_init__(self):
        if len(self.proportions) != 4 or any(p < 0 for p in self.proportions):
            raise ValidationError("proportions must be 4 non-negative weights")
        if sum(self.proportions) <= 0:
            raise ValidationError("proportions must sum to a positive value")
        lo, hi = self.events_per_sentence
        if lo < 0 or lo > hi:
            raise ValidationError("events_per_sentence must satisfy 0 <= min <= max")
        if self.max_repeat < 1:
            raise ValidationError("max_repeat must be >= 1")


@dataclass(frozen=True)
class CorpusRecord:
    id: int
    level: Level
    reference: TokenSequence
    dysfluent: TokenSequence
    labels: JointLabelEncoding
    gold: GoldAlignment
    events: tuple[DysfluencyEvent, ...]

    def event_kinds(self) -> frozenset[DysfluencyType]:
        return frozenset(e.kind for e in self.events)


# Word-level grapheme confusions, mirroring the phoneme categories: voiced
# and voiceless counterparts swap, and vowel letters swap among themselves.
GRAPHEME_CONFUSIONS: dict[str, tuple[str, ...]] = {
    "p": ("b",), "b": ("p",),
    "t": ("d",), "d": ("t",),
    "k": ("g", "c"), "g": ("k",), "c": ("k",),
    "f": ("v",), "v": ("f",),
    "s": ("z",), "z": ("s",),
    "sh": ("zh",), "zh": ("sh",),
    "ch": ("j",), "j": ("ch",),
    "m": ("n",), "n": ("m",),
    "l": ("r",), "r": ("l",),
    "w": ("y",), "y": ("w",),
}

VOWEL_LETTERS = "aeiou"

_DIGRAPHS = ("sh", "zh", "ch")


def _word_units(word: str) -> list[str]:
    units = []
    i = 0
    while i < len(word):
        if word[i : i + 2] in _DIGRAPHS:
            units.append(word[i : i + 2])
            i += 2
        else:
            units.append(word[i])
            i += 1
    return units


def corrupt_word(word: str, rng: np.random.Generator, max_edits: int = 2) -> str:
    """Rewrite 1..max_edits letters/digraphs through the confusion table."""
    units = _word_units(word)
    editable = [
        k for k, u in enumerate(units)
        if u in GRAPHEME_CONFUSIONS or u in VOWEL_LETTERS
    ]
    if not editable:
        # No confusable letter at all (rare); force a vowel change up front.
        units[0] = "a" if units[0] != "a" else "e"
        return "".join(units)
    n = int(rng.integers(1, max_edits + 1))
    n = min(n, len(editable))
    picks = sorted(int(i) for i in rng.choice(len(editable), size=n, replace=False))
    for p in picks:
        k = editable[p]
        u = units[k]
        if u in GRAPHEME_CONFUSIONS:
            alts = GRAPHEME_CONFUSIONS[u]
            units[k] = alts[int(rng.integers(len(alts)))]
        else:
            others = [v for v in VOWEL_LETTERS if v != u]
            units[k] = others[int(rng.integers(len(others)))]
    return "".join(units)


@dataclass(frozen=True)
class _Plan:
    kind: DysfluencyType
    ref_index: int
    repeat_count: int = 0
    inserted: tuple[str, ...] = ()
    replacement: str = ""


def _plan_events(
    ref: TokenSequence, cfg: SimulationConfig, rng: np.random.Generator
) -> list[_Plan]:
    n_req = int(rng.integers(cfg.events_per_sentence[0], cfg.events_per_sentence[1] + 1))
    n = min(n_req, len(ref))
    if n < n_req:
        logger.warning(
            "reference of length %d cannot host %d events; truncated to %d",
            len(ref), n_req, n,
        )
    if n == 0:
        return []
    positions = sorted(int(p) for p in rng.choice(len(ref), size=n, replace=False))

    kinds: dict[int, DysfluencyType] = {}
    n_deletions = 0
    weights = np.asarray(cfg.proportions, dtype=float)
    for pos in positions:
        w = weights.copy()
        if n_deletions >= len(ref) - 1:
            w[KIND_ORDER.index(DysfluencyType.DELETION)] = 0.0
        if w.sum() <= 0:
            continue  # nothing left to draw for this position
        kind = KIND_ORDER[int(rng.choice(4, p=w / w.sum()))]
        kinds[pos] = kind
        if kind is DysfluencyType.DELETION:
            n_deletions += 1

    deleted = {p for p, k in kinds.items() if k is DysfluencyType.DELETION}
    plans: list[_Plan] = []
    for pos in sorted(kinds):
        kind = kinds[pos]
        if kind is DysfluencyType.REPETITION:
            count = int(rng.integers(1, cfg.max_repeat + 1))
            plans.append(_Plan(kind, pos, repeat_count=count))
        elif kind is DysfluencyType.INSERTION:
            nxt = _next_surviving(ref, pos, deleted)
            if cfg.level is Level.PHONEME:
                k = int(rng.integers(1, 3))
                last = nxt if nxt is not None else len(ref) - 1
                avoid = [ref[j] for j in range(pos + 1, last + 1)]
                try:
                    toks = tuple(
                        sample_dissimilar(ref[pos], rng, avoid=avoid) for _ in range(k)
                    )
                except InventoryError:
                    # Deletion-heavy configs can block every category; fall
                    # back to the codec-critical exclusions only.
                    minimal = [ref[nxt]] if nxt is not None else []
                    toks = tuple(
                        sample_dissimilar(ref[pos], rng, avoid=minimal)
                        for _ in range(k)
                    )
            else:
                toks = (_corrupt_avoiding(ref[pos], rng, ref[nxt] if nxt is not None else None),)
            plans.append(_Plan(kind, pos, inserted=toks))
        elif kind is DysfluencyType.DELETION:
            plans.append(_Plan(kind, pos))
        else:
            if cfg.level is Level.PHONEME:
                repl = sample_confusable(ref[pos], rng)
            else:
                repl = corrupt_word(ref[pos], rng)
            plans.append(_Plan(kind, pos, replacement=repl))
    return plans


def _next_surviving(ref: TokenSequence, pos: int, deleted: set[int]) -> int | None:
    for j in range(pos + 1, len(ref)):
        if j not in deleted:
            return j
    return None


def _corrupt_avoiding(
    word: str, rng: np.random.Generator, avoid: str | None, tries: int = 8
) -> str:
    out = corrupt_word(word, rng)
    while avoid is not None and out == avoid and tries > 0:
        out = corrupt_word(word, rng)
        tries -= 1
    return out


def apply_events(
    ref: TokenSequence, plans: Sequence[_Plan]
) -> tuple[TokenSequence, GoldAlignment, JointLabelEncoding]:
    """Materialize planned events into the dysfluent sequence and its gold."""
    by_index = {p.ref_index: p for p in plans}
    dys: list[str] = []
    groups: list[tuple[int, ...]] = []
    boundaries: list[int | None] = []
    for i, tok in enumerate(ref):
        plan = by_index.get(i)
        cur = len(dys)
        if plan is None:
            dys.append(tok)
            groups.append((cur,))
            boundaries.append(cur)
        elif plan.kind is DysfluencyType.REPETITION:
            dys.extend([tok] * plan.repeat_count)
            dys.append(tok)
            groups.append(tuple(range(cur, cur + plan.repeat_count + 1)))
            boundaries.append(cur + plan.repeat_count)
        elif plan.kind is DysfluencyType.INSERTION:
            dys.append(tok)
            dys.extend(plan.inserted)
            groups.append(tuple(range(cur, cur + 1 + len(plan.inserted))))
            boundaries.append(cur)
        elif plan.kind is DysfluencyType.DELETION:
            groups.append(())
            boundaries.append(None)
        else:
            dys.append(plan.replacement)
            groups.append((cur,))
            boundaries.append(cur)
    dys_seq = TokenSequence(ref.level, tuple(dys))
    gold = GoldAlignment(tuple(groups), tuple(boundaries))
    for group, boundary, tok in zip(gold.groups, gold.boundaries, ref):
        if group:
            picked = group[d2_boundary([dys_seq[j] for j in group], tok, ref.level)]
            assert picked == boundary, "boundary rule disagrees with construction"
    labels = gold_labels_from_alignment(gold, ref, dys_seq)
    assert alignment_from_labels(labels, ref, dys_seq) == gold, (
        "gold labels failed to round-trip"
    )
    return dys_seq, gold, labels


def _record_rng(seed: int, record_id: int) -> np.random.Generator:
    return np.random.default_rng([seed & 0xFFFFFFFFFFFFFFFF, record_id])


def inject(
    reference: TokenSequence, cfg: SimulationConfig, record_id: int = 0
) -> CorpusRecord:
    """Inject dysfluencies into one reference sequence.

    Deterministic given (cfg.seed, record_id).
    """
    if len(reference) < 2:
        raise ValidationError("reference must have at least 2 tokens")
    if reference.level is not cfg.level:
        raise ValidationError("reference level does not match the simulation config")
    rng = _record_rng(cfg.seed, record_id)
    plans = _plan_events(reference, cfg, rng)
    dys, gold, labels = apply_events(reference, plans)
    events = tuple(
        DysfluencyEvent(
            kind=p.kind,
            ref_index=p.ref_index,
            inserted_tokens=_event_payload(p),
            detail=_event_detail(p),
        )
        for p in plans
    )
    return CorpusRecord(record_id, cfg.level, reference, dys, labels, gold, events)


def inject_word_level(
    reference: TokenSequence, cfg: SimulationConfig, record_id: int = 0
) -> CorpusRecord:
    if cfg.level is not Level.WORD or reference.level is not Level.WORD:
        raise ValidationError("inject_word_level requires word-level input")
    return inject(reference, cfg, record_id)


def _event_payload(p: _Plan) -> tuple[str, ...]:
    if p.kind is DysfluencyType.REPETITION:
        return ()  # copies are implied by the repeat count
    if p.kind is DysfluencyType.INSERTION:
        return p.inserted
    if p.kind is DysfluencyType.SUBSTITUTION:
        return (p.replacement,)
    return ()


def _event_detail(p: _Plan) -> str:
    if p.kind is DysfluencyType.REPETITION:
        return f"x{p.repeat_count}"
    if p.kind is DysfluencyType.SUBSTITUTION:
        return f"->{p.replacement}"
    return ""


def simulate_corpus(
    texts: Sequence[TokenSequence], cfg: SimulationConfig, n: int | None = None
) -> list[CorpusRecord]:
    """Generate n records, cycling over the reference texts."""
    if not texts:
        raise ValidationError("no reference texts")
    if n is None:
        n = len(texts)
    return [inject(texts[i % len(texts)], cfg, record_id=i) for i in range(n)]


# -- corpus serialization (JSON Lines) --------------------------------------

def record_to_json(record: CorpusRecord) -> str:
    payload = {
        "id": record.id,
        "level": record.level.value,
        "ref": record.reference.text(),
        "dys": record.dysfluent.text(),
        "ref_labels": list(record.labels.ref_labels),
        "dys_labels": list(record.labels.dys_labels),
        "events": [
            {
                "kind": e.kind.value,
                "ref_index": e.ref_index,
                "inserted": list(e.inserted_tokens),
                "detail": e.detail,
            }
            for e in record.events
        ],
    }
    return json.dumps(payload, separators=(",", ":"), sort_keys=True)


def write_corpus(records: Iterable[CorpusRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(record_to_json(r))
            fh.write("\n")


def record_from_json(line: str) -> CorpusRecord:
    obj = json.loads(line)
    level = Level(obj["level"])
    ref = TokenSequence.parse(obj["ref"], level)
    dys = TokenSequence.parse(obj["dys"], level)
    labels = JointLabelEncoding(tuple(obj["ref_labels"]), tuple(obj["dys_labels"]))
    if not labels.counts_consistent():
        raise ValidationError("label counts are inconsistent")
    gold = alignment_from_labels(labels, ref, dys)
    events = tuple(
        DysfluencyEvent(
            kind=DysfluencyType(e["kind"]),
            ref_index=int(e["ref_index"]),
            inserted_tokens=tuple(e.get("inserted", ())),
            detail=e.get("detail", ""),
        )
        for e in obj.get("events", ())
    )
    return CorpusRecord(int(obj["id"]), level, ref, dys, labels, gold, events)


def read_corpus(path) -> list[CorpusRecord]:
    from .errors import DysalignError

    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(record_from_json(line))
            except (DysalignError, ValueError, KeyError) as exc:
                raise ValidationError(f"line {lineno}: {exc}") from exc
    return records
