"""Criterion-7-scale word-level harness probe."""
import time
from dysalign.phonemes import Level
from dysalign.simulate import SimulationConfig, simulate_corpus
from dysalign.lexicon import demo_texts, line_to_sequence
from dysalign.evalkit import predict_corpus, alignment_accuracy
from dysalign.neural.tokenizer import build_tokenizer
from dysalign.neural.training import TrainConfig, train

texts = [line_to_sequence(t, Level.WORD) for t in demo_texts(22000, seed=2, min_words=3, max_words=6)]
records = simulate_corpus(texts, SimulationConfig(level=Level.WORD, seed=13), 22000)
train_recs, test_recs = records[:20000], records[20000:22000]
seqs = [r.reference for r in train_recs] + [r.dysfluent for r in train_recs]
tok = build_tokenizer(Level.WORD, seqs)

t0 = time.time()
ckpt = train(train_recs, tok, train_cfg=TrainConfig(seed=4))
print(f"[word] train {time.time()-t0:.0f}s final loss {ckpt.metadata['final_loss']:.5f}", flush=True)
for method, kw in [("neural", dict(checkpoint=ckpt)), ("hard", {}), ("dtw", {})]:
    preds = predict_corpus(method, test_recs, **kw)
    rep = alignment_accuracy([(r.id, p) for r, p in zip(test_recs, preds)], test_recs, method)
    print(f"[word] {method} exact: {rep.sequence_exact_match:.4f} token: {rep.token_label_accuracy:.4f}", flush=True)
