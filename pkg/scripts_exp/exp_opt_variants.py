"""Optimizer/init refinements on the 2-2-word corpus at criterion scale."""
import sys, time
from collections import Counter

from dysalign.phonemes import Level
from dysalign.simulate import SimulationConfig, simulate_corpus
from dysalign.lexicon import demo_texts, line_to_sequence
from dysalign.evalkit import predict_corpus, alignment_accuracy
from dysalign.neural.tokenizer import build_tokenizer
import dysalign.neural.training as trainmod
import dysalign.neural.model as modelmod
from dysalign.neural.training import TrainConfig

variant = sys.argv[1]
max_w = 3 if "w23" in variant else 2
tied = "tied" in variant
beta2 = 0.98 if "b2" in variant else 0.999
resid = 0.3 if "resid" in variant else 1.0

texts = [line_to_sequence(t, Level.PHONEME) for t in demo_texts(22000, seed=1, min_words=2, max_words=max_w)]
records = simulate_corpus(texts, SimulationConfig(seed=11), 22000)
train_recs, test_recs = records[:20000], records[20000:22000]
tok = build_tokenizer(Level.PHONEME)

orig_init = modelmod.init_params
def patched(cfg, tokenizer, seed):
    params = orig_init(cfg, tokenizer, seed)
    for l in range(cfg.context_layers):
        if tied:
            params[f"attn{l}_wk"] = params[f"attn{l}_wq"].copy()
        params[f"attn{l}_wo"] *= resid
        params[f"ffn{l}_w2"] *= resid
    return params
trainmod.init_params = patched

t0 = time.time()
ckpt = trainmod.train(train_recs, tok, train_cfg=TrainConfig(seed=3, beta2=beta2))
from dysalign.neural.checkpoint import save_checkpoint
save_checkpoint(ckpt, f"/tmp/ckpt_{variant}.json")
print(f"[{variant}] train {time.time()-t0:.0f}s final loss {ckpt.metadata['final_loss']:.5f}", flush=True)
preds = {}
for method, kw in [("neural", dict(checkpoint=ckpt)), ("soft", {}), ("dtw", {})]:
    p = predict_corpus(method, test_recs, **kw)
    preds[method] = p
    rep = alignment_accuracy([(r.id, x) for r, x in zip(test_recs, p)], test_recs, method)
    print(f"[{variant}] {method} exact {rep.sequence_exact_match:.4f} token {rep.token_label_accuracy:.4f}", flush=True)
err_kinds = Counter()
for r, pn in zip(test_recs, preds["neural"]):
    if pn != r.labels:
        err_kinds[tuple(sorted(k.value[:3] for k in r.event_kinds()))] += 1
print(f"[{variant}] error kinds: {err_kinds.most_common(8)}", flush=True)
