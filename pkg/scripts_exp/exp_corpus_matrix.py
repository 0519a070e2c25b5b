"""Corpus-design matrix for the Table-3 analogue harness.

For each corpus variant: train at criterion scale, report all methods'
exact-match, and split the neural errors into convention-ambiguity cases
(soft LCS also errs) vs trainable cases (soft LCS gets them right).
"""
import sys, time
import numpy as np

from dysalign.phonemes import Level
from dysalign.simulate import SimulationConfig, simulate_corpus
from dysalign.lexicon import demo_texts, line_to_sequence, LEXICON
from dysalign.evalkit import predict_corpus, alignment_accuracy
from dysalign.neural.tokenizer import build_tokenizer
from dysalign.neural.training import TrainConfig, train
from dysalign.neural.checkpoint import save_checkpoint

variant = sys.argv[1]

def texts_for(variant, n, seed=1):
    if variant == "w22":
        raw = demo_texts(n, seed=seed, min_words=2, max_words=2)
    elif variant == "w23":
        raw = demo_texts(n, seed=seed, min_words=2, max_words=3)
    elif variant == "w34":
        raw = demo_texts(n, seed=seed, min_words=3, max_words=4)
    elif variant == "short23":
        words = sorted(w for w, pron in LEXICON.items() if len(pron) <= 4)
        rng = np.random.default_rng([seed, 99])
        raw = []
        for _ in range(n):
            k = int(rng.integers(2, 4))
            raw.append(" ".join(words[int(i)] for i in rng.integers(0, len(words), k)))
    else:
        raise SystemExit(f"unknown variant {variant}")
    return [line_to_sequence(t, Level.PHONEME) for t in raw]

texts = texts_for(variant, 22000)
records = simulate_corpus(texts, SimulationConfig(seed=11), 22000)
train_recs, test_recs = records[:20000], records[20000:22000]
tok = build_tokenizer(Level.PHONEME)

t0 = time.time()
ckpt = train(train_recs, tok, train_cfg=TrainConfig(seed=3))
save_checkpoint(ckpt, f"/tmp/ckpt_{variant}.json")
print(f"[{variant}] train {time.time()-t0:.0f}s final loss {ckpt.metadata['final_loss']:.5f}", flush=True)

preds = {}
for method, kw in [("neural", dict(checkpoint=ckpt)), ("soft", {}), ("hard", {}), ("dtw", {})]:
    p = predict_corpus(method, test_recs, **kw)
    preds[method] = p
    rep = alignment_accuracy([(r.id, x) for r, x in zip(test_recs, p)], test_recs, method)
    print(f"[{variant}] {method} exact {rep.sequence_exact_match:.4f} token {rep.token_label_accuracy:.4f}", flush=True)

n_err = amb = trainable = soft_wrong_neural_right = 0
for r, pn, ps in zip(test_recs, preds["neural"], preds["soft"]):
    n_wrong = pn != r.labels
    s_wrong = ps != r.labels
    if n_wrong:
        n_err += 1
        if s_wrong:
            amb += 1
        else:
            trainable += 1
    elif s_wrong:
        soft_wrong_neural_right += 1
print(f"[{variant}] neural errors {n_err}: soft-also-wrong {amb}, soft-right {trainable}; "
      f"neural-right-soft-wrong {soft_wrong_neural_right}", flush=True)
