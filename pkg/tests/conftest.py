"""Shared fixtures for the acceptance suite.

The trained checkpoints and large corpora are expensive, so they are built
once per session and cached under .cache/ keyed by a hash of the package
sources; editing the library invalidates the cache automatically.
"""

from __future__ import annotations

import hashlib
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent
CACHE = ROOT / ".cache"

ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def record_criterion(name: str, passed: bool, detail: str = ""):
    """One pass/fail line per acceptance criterion, shown in the summary."""
    ACCEPTANCE_RESULTS.append((name, bool(passed), detail))
    assert passed, f"{name} FAILED: {detail}"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    tr = terminalreporter
    tr.write_sep("=", "acceptance criteria")
    for name, passed, detail in ACCEPTANCE_RESULTS:
        status = "PASS" if passed else "FAIL"
        tr.write_line(f"[{status}] {name}" + (f" | {detail}" if detail else ""))


def _source_fingerprint() -> str:
    src = ROOT / "src" / "dysalign"
    h = hashlib.sha256()
    for path in sorted(src.rglob("*.py")):
        h.update(path.read_bytes())
    return h.hexdigest()[:16]


def cache_path(tag: str) -> Path:
    CACHE.mkdir(exist_ok=True)
    return CACHE / f"{tag}-{_source_fingerprint()}"


# -- corpora -------------------------------------------------------------

PHONEME_SEED = 211
WORD_SEED = 212
CORPUS_N = 22_000
TRAIN_N = 20_000


def _build_corpus(level_name: str, seed: int):
    from dysalign.lexicon import demo_texts, line_to_sequence
    from dysalign.phonemes import Level
    from dysalign.simulate import SimulationConfig, simulate_corpus

    level = Level(level_name)
    min_w, max_w = (2, 2) if level is Level.PHONEME else (3, 6)
    texts = [
        line_to_sequence(t, level)
        for t in demo_texts(CORPUS_N, seed=seed, min_words=min_w, max_words=max_w)
    ]
    return simulate_corpus(texts, SimulationConfig(level=level, seed=seed), CORPUS_N)


@pytest.fixture(scope="session")
def phoneme_corpus():
    return _build_corpus("phoneme", PHONEME_SEED)


@pytest.fixture(scope="session")
def word_corpus():
    return _build_corpus("word", WORD_SEED)


def _train_split(corpus):
    return corpus[:TRAIN_N], corpus[TRAIN_N:]


@pytest.fixture(scope="session")
def phoneme_split(phoneme_corpus):
    return _train_split(phoneme_corpus)


@pytest.fixture(scope="session")
def word_split(word_corpus):
    return _train_split(word_corpus)


def _train_or_load(tag: str, records, level_name: str, seed: int):
    from dysalign.neural.checkpoint import load_checkpoint, save_checkpoint
    from dysalign.neural.tokenizer import build_tokenizer
    from dysalign.neural.training import TrainConfig, train
    from dysalign.phonemes import Level

    path = cache_path(f"{tag}.ckpt")
    if path.exists():
        return load_checkpoint(path)
    level = Level(level_name)
    seqs = [r.reference for r in records] + [r.dysfluent for r in records]
    tokenizer = build_tokenizer(level, seqs)
    ckpt = train(records, tokenizer, train_cfg=TrainConfig(seed=seed))
    save_checkpoint(ckpt, path)
    return ckpt


@pytest.fixture(scope="session")
def phoneme_model(phoneme_split):
    train_recs, _ = phoneme_split
    return _train_or_load("model-phoneme", train_recs, "phoneme", seed=31)


@pytest.fixture(scope="session")
def word_model(word_split):
    train_recs, _ = word_split
    return _train_or_load("model-word", train_recs, "word", seed=32)
