"""Acceptance suite: runs every criterion at its stated tolerance.

Each test records one pass/fail line (printed in the terminal summary).
The training-backed criteria share the session-scoped corpora and
checkpoints from conftest; a full cold run takes roughly half an hour on a
laptop-class CPU.
"""

import json
import time

import numpy as np
import pytest

from conftest import (
    PHONEME_SEED,
    TRAIN_N,
    _build_corpus,
    cache_path,
    record_criterion,
)

from dysalign.classic import dtw_align, hard_lcs, lcs_bruteforce_oracle
from dysalign.errors import TrainError
from dysalign.evalkit import (
    AblationSpec,
    alignment_accuracy,
    classify_types,
    make_aligner,
    predict_corpus,
    run_ablation,
    type_specific_accuracy,
)
from dysalign.labels import alignment_from_labels, gold_labels_from_alignment
from dysalign.lexicon import demo_texts, line_to_sequence
from dysalign.neural.checkpoint import save_checkpoint
from dysalign.neural.gradcheck import grad_check
from dysalign.neural.loss import FocalLossConfig, focal_loss
from dysalign.neural.model import predict_batch
from dysalign.neural.tokenizer import build_tokenizer
from dysalign.neural.training import TrainConfig, train
from dysalign.phonemes import INVENTORY, Level, TokenSequence
from dysalign.simulate import (
    DysfluencyType,
    SimulationConfig,
    record_to_json,
    simulate_corpus,
)
from dysalign.sta import (
    DurationModel,
    EmissionNoise,
    ctc_greedy_decode,
    run_sta,
    synthesize_emissions,
)


def test_c01_lcs_oracle_equivalence():
    rng = np.random.default_rng(101)
    started = time.time()
    n_pairs = 10_000
    for _ in range(n_pairs):
        n, m = rng.integers(1, 13, size=2)
        ref = TokenSequence(Level.PHONEME, tuple(rng.choice(INVENTORY, n)))
        dys = TokenSequence(Level.PHONEME, tuple(rng.choice(INVENTORY, m)))
        got = len(hard_lcs(ref, dys).matched_pairs)
        want = lcs_bruteforce_oracle(ref, dys)
        assert got == want, f"LCS {got} != oracle {want} on {ref.tokens}/{dys.tokens}"
    elapsed = time.time() - started
    record_criterion(
        "C1 LCS oracle equivalence",
        elapsed <= 60.0,
        f"10,000 pairs exact, {elapsed:.1f}s (limit 60s)",
    )


def test_c02_codec_round_trip():
    started = time.time()
    kinds_seen = set()
    mix_seen = False
    total = 0
    for level, seed in ((Level.PHONEME, 71), (Level.WORD, 72)):
        min_w, max_w = (2, 3) if level is Level.PHONEME else (3, 6)
        texts = [
            line_to_sequence(t, level)
            for t in demo_texts(2500, seed=seed, min_words=min_w, max_words=max_w)
        ]
        cfg = SimulationConfig(level=level, seed=seed)
        for rec in simulate_corpus(texts, cfg, 5000):
            assert rec.labels.counts_consistent()
            rebuilt = alignment_from_labels(rec.labels, rec.reference, rec.dysfluent)
            assert rebuilt == rec.gold
            assert gold_labels_from_alignment(
                rec.gold, rec.reference, rec.dysfluent
            ) == rec.labels
            kinds_seen |= set(rec.event_kinds())
            mix_seen |= len(rec.event_kinds()) >= 2
            total += 1
    elapsed = time.time() - started
    record_criterion(
        "C2 codec round-trip",
        kinds_seen == set(DysfluencyType) and mix_seen and total == 10_000
        and elapsed <= 30.0,
        f"{total} records, all kinds + mix, exact, {elapsed:.1f}s (limit 30s)",
    )


def test_c03_focal_loss_unit_values():
    # p_t = 1 -> loss 0
    probs = np.array([[0.0, 1.0, 0.0]])
    zero_loss, _ = focal_loss(probs, np.array([1]), FocalLossConfig())
    ok_zero = zero_loss == pytest.approx(0.0, abs=1e-12)

    # alpha=0.8, gamma=3, p_t=0.5 -> 0.069315 within 1e-6
    probs = np.array([[0.5, 0.25, 0.25]])
    ref_loss, _ = focal_loss(
        probs, np.array([0]), FocalLossConfig(alpha=(0.8, 0.8, 0.8), gamma=3.0)
    )
    ok_ref = abs(ref_loss - 0.069315) <= 1e-6

    # gamma=0, alpha=1 matches cross-entropy to 1e-9 on a 100-point grid
    grid = np.linspace(0.01, 0.999, 100)
    ok_ce = True
    for p in grid:
        probs = np.array([[p, (1 - p) / 2, (1 - p) / 2]])
        loss, _ = focal_loss(
            probs, np.array([0]), FocalLossConfig(alpha=(1.0, 1.0, 1.0), gamma=0.0)
        )
        ok_ce &= abs(loss - (-np.log(p))) <= 1e-9
    record_criterion(
        "C3 focal loss unit values",
        ok_zero and ok_ref and ok_ce,
        f"p=1 -> {zero_loss:.1e}; (0.8,3,0.5) -> {ref_loss:.6f}; CE grid max ok={ok_ce}",
    )


def test_c04_gradient_correctness():
    started = time.time()
    worst = 0.0
    for seed in range(16):
        worst = max(worst, grad_check(seed=seed))
    for seed in range(4):
        worst = max(worst, grad_check(seed=100 + seed, level=Level.WORD))
    elapsed = time.time() - started
    record_criterion(
        "C4 gradient correctness",
        worst < 1e-4 and elapsed <= 120.0,
        f"max rel err {worst:.2e} over 20 tiny configs, {elapsed:.1f}s (limit 120s)",
    )


def test_c05_overfit_sanity():
    started = time.time()
    texts = [
        line_to_sequence(t, Level.PHONEME)
        for t in demo_texts(50, seed=21, min_words=2, max_words=3)
    ]
    records = simulate_corpus(texts, SimulationConfig(seed=21), 50)
    tokenizer = build_tokenizer(Level.PHONEME)
    ckpt = train(
        records,
        tokenizer,
        train_cfg=TrainConfig(seed=5, learning_rate=2e-3, epochs=200),
    )
    pairs = [(r.reference, r.dysfluent) for r in records]
    preds = predict_batch(ckpt.params, ckpt.encoder, ckpt.tokenizer, pairs)
    hits = total = 0
    for rec, pred in zip(records, preds):
        hits += sum(a == b for a, b in zip(pred.labels.ref_labels, rec.labels.ref_labels))
        hits += sum(a == b for a, b in zip(pred.labels.dys_labels, rec.labels.dys_labels))
        total += len(rec.labels.ref_labels) + len(rec.labels.dys_labels)
    acc = hits / total
    losses = ckpt.metadata["epoch_losses"]
    non_increasing = all(b <= a * 1.10 + 1e-9 for a, b in zip(losses, losses[1:]))
    elapsed = time.time() - started
    record_criterion(
        "C5 overfit sanity",
        acc >= 0.98 and non_increasing and elapsed <= 600.0,
        f"token acc {acc:.4f} on 50 records after {len(losses)-1} epochs, "
        f"loss trail non-increasing={non_increasing}, {elapsed:.0f}s (limit 600s)",
    )


@pytest.mark.slow
def test_c06_aligner_comparison_phoneme(phoneme_split, phoneme_model):
    started = time.time()
    _, test_recs = phoneme_split
    scores = {}
    for method, kw in (
        ("neural", dict(checkpoint=phoneme_model)),
        ("hard", {}),
        ("dtw", {}),
    ):
        preds = predict_corpus(method, test_recs, **kw)
        rep = alignment_accuracy(
            [(r.id, p) for r, p in zip(test_recs, preds)], test_recs, method
        )
        scores[method] = rep.sequence_exact_match
    elapsed = time.time() - started
    ok = (
        scores["neural"] >= 0.60
        and scores["neural"] >= scores["hard"] + 0.10
        and scores["neural"] >= scores["dtw"] + 0.10
    )
    record_criterion(
        "C6 aligner comparison (phoneme)",
        ok,
        f"neural {scores['neural']:.4f} vs hard {scores['hard']:.4f} "
        f"vs dtw {scores['dtw']:.4f} on {len(test_recs)} test records "
        f"(eval {elapsed:.0f}s)",
    )


@pytest.mark.slow
def test_c07_word_level_ordering(word_split, word_model):
    _, test_recs = word_split
    scores = {}
    for method, kw in (
        ("neural", dict(checkpoint=word_model)),
        ("hard", {}),
        ("dtw", {}),
    ):
        preds = predict_corpus(method, test_recs, **kw)
        rep = alignment_accuracy(
            [(r.id, p) for r, p in zip(test_recs, preds)], test_recs, method
        )
        scores[method] = rep.sequence_exact_match
    ok = (
        scores["neural"] >= scores["hard"] and scores["neural"] >= scores["dtw"]
    )
    record_criterion(
        "C7 word-level ordering",
        ok,
        f"neural {scores['neural']:.4f} vs hard {scores['hard']:.4f} "
        f"vs dtw {scores['dtw']:.4f}",
    )


def test_c08_ctc_exactness():
    started = time.time()
    texts = [
        line_to_sequence(t, Level.PHONEME)
        for t in demo_texts(500, seed=81, min_words=2, max_words=3)
    ]
    records = simulate_corpus(texts, SimulationConfig(seed=81), 1000)
    for rec in records:
        em, gold_spans = synthesize_emissions(
            rec.dysfluent, DurationModel(), EmissionNoise(epsilon=0.0, seed=rec.id)
        )
        decoded, spans = ctc_greedy_decode(em)
        assert decoded is not None and decoded.tokens == rec.dysfluent.tokens
        assert spans == gold_spans
    elapsed = time.time() - started
    record_criterion(
        "C8 CTC exactness",
        elapsed <= 30.0,
        f"1,000 records decoded exactly with gold spans, {elapsed:.1f}s (limit 30s)",
    )


@pytest.mark.slow
def test_c09_sta_boundary_loss(phoneme_split, phoneme_model):
    started = time.time()
    _, test_recs = phoneme_split
    records = test_recs[:1000]

    # Noiseless + soft aligner: zero boundary error on recovered records.
    soft = make_aligner("soft")
    recovered = 0
    zero_on_recovered = True
    from dysalign.sta import (
        boundary_squared_errors,
        gold_segmentation,
        project_alignment,
    )

    for rec in records:
        em, spans = synthesize_emissions(
            rec.dysfluent, DurationModel(), EmissionNoise(epsilon=0.0, seed=rec.id)
        )
        decoded, dec_spans = ctc_greedy_decode(em)
        labels = soft(rec.reference, decoded)
        if decoded.tokens == rec.dysfluent.tokens and labels == rec.labels:
            recovered += 1
            pred = project_alignment(
                alignment_from_labels(labels, rec.reference, decoded).groups,
                dec_spans,
                em.frame_ms,
            )
            gold = gold_segmentation(rec, spans, em.frame_ms)
            errs = boundary_squared_errors(pred, gold, rec)
            if errs and max(errs) > 0.0:
                zero_on_recovered = False
    recovery_rate = recovered / len(records)

    # epsilon=0.1 with the trained neural aligner: overall RMSE <= 40 ms.
    neural = make_aligner("neural", checkpoint=phoneme_model)
    report = run_sta(records, neural, noise=EmissionNoise(epsilon=0.1, seed=901))
    rmse = report["overall"]["rmse_ms"]
    elapsed = time.time() - started
    record_criterion(
        "C9 STA boundary loss",
        zero_on_recovered and recovery_rate >= 0.95 and rmse <= 40.0
        and elapsed <= 1200.0,
        f"soft recovery {recovery_rate:.3f} (zero-BL on recovered={zero_on_recovered}), "
        f"neural eps=0.1 rmse {rmse:.2f} ms (limit 40), {elapsed:.0f}s",
    )


def test_c10_type_classification_on_gold():
    started = time.time()
    texts = [
        line_to_sequence(t, Level.PHONEME)
        for t in demo_texts(2000, seed=91, min_words=2, max_words=3)
    ]
    records = simulate_corpus(texts, SimulationConfig(seed=91), 4000)
    hits = 0
    residual = []
    for rec in records:
        got = classify_types(rec.gold, rec.reference, rec.dysfluent)
        if got == set(rec.event_kinds()):
            hits += 1
        else:
            residual.append(rec.id)
    rate = hits / len(records)
    elapsed = time.time() - started
    record_criterion(
        "C10 type classification on gold",
        rate >= 0.99 and elapsed <= 30.0,
        f"kind-set accuracy {rate:.4f} over {len(records)} records "
        f"({len(residual)} residual), {elapsed:.1f}s (limit 30s)",
    )


@pytest.mark.slow
def test_c11_ablation_trend(tmp_path):
    started = time.time()
    texts = [
        line_to_sequence(t, Level.PHONEME)
        for t in demo_texts(2000, seed=95, min_words=2, max_words=3)
    ]
    result = run_ablation(
        texts,
        AblationSpec(),
        n_records=1000,  # --fast cells: trend check only
        seed=95,
        train_cfg=TrainConfig(seed=95),
    )
    csv_text = result.to_csv()
    (tmp_path / "ablation.csv").write_text(csv_text)
    rows_ok = len(result.rows) == 5
    trend_ok = True
    for name, report in result.rows:
        if report is None:
            trend_ok = False
            continue
        if not report.accuracy["repetition"] >= report.accuracy["insertion"]:
            trend_ok = False
    elapsed = time.time() - started
    detail = "; ".join(
        f"{name}: rep {rep.accuracy['repetition']:.2f} vs ins {rep.accuracy['insertion']:.2f}"
        for name, rep in result.rows
        if rep is not None
    )
    record_criterion(
        "C11 ablation trend (fast)",
        rows_ok and trend_ok and elapsed <= 3600.0,
        f"{detail} ({elapsed:.0f}s)",
    )


@pytest.mark.slow
def test_c12_determinism(tmp_path, phoneme_corpus, phoneme_model, phoneme_split):
    # corpora byte-identical
    again = _build_corpus("phoneme", PHONEME_SEED)
    corpus_a = "\n".join(record_to_json(r) for r in phoneme_corpus[:5000])
    corpus_b = "\n".join(record_to_json(r) for r in again[:5000])
    corpora_ok = corpus_a == corpus_b

    # checkpoints byte-identical under retraining with the same seed
    train_recs, _ = phoneme_split
    seqs = [r.reference for r in train_recs] + [r.dysfluent for r in train_recs]
    tokenizer = build_tokenizer(Level.PHONEME, seqs)
    retrained = train(train_recs, tokenizer, train_cfg=TrainConfig(seed=31))
    p1, p2 = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
    save_checkpoint(phoneme_model, p1)
    save_checkpoint(retrained, p2)
    ckpt_ok = p1.read_bytes() == p2.read_bytes()

    # CTC reports byte-identical
    def c8_report():
        texts = [
            line_to_sequence(t, Level.PHONEME)
            for t in demo_texts(100, seed=81, min_words=2, max_words=3)
        ]
        records = simulate_corpus(texts, SimulationConfig(seed=81), 200)
        report = run_sta(records, make_aligner("soft"), noise=EmissionNoise(seed=7))
        return json.dumps(report, sort_keys=True)

    sta_ok = c8_report() == c8_report()
    record_criterion(
        "C12 determinism",
        corpora_ok and ckpt_ok and sta_ok,
        f"corpora identical={corpora_ok}, checkpoints identical={ckpt_ok}, "
        f"reports identical={sta_ok}",
    )
