"""Experiment: criterion-6-scale training with init-scale variants."""
import sys, time, logging
logging.basicConfig(level=logging.WARNING, format="%(message)s")

from dysalign.phonemes import Level
from dysalign.simulate import SimulationConfig, simulate_corpus
from dysalign.lexicon import demo_texts, line_to_sequence
from dysalign.evalkit import predict_corpus, alignment_accuracy
from dysalign.neural.tokenizer import build_tokenizer
import dysalign.neural.training as trainmod
import dysalign.neural.model as modelmod
from dysalign.neural.training import TrainConfig

variant = sys.argv[1]
attn_gain = float(sys.argv[2])
head_gain = float(sys.argv[3]) if len(sys.argv) > 3 else 1.0
n_train = int(sys.argv[4]) if len(sys.argv) > 4 else 20000

texts = [line_to_sequence(t, Level.PHONEME) for t in demo_texts(22000, seed=1, min_words=2, max_words=3)]
records = simulate_corpus(texts, SimulationConfig(seed=11), 22000)
train_recs, test_recs = records[:n_train], records[20000:22000]
tok = build_tokenizer(Level.PHONEME)

orig_init = modelmod.init_params
def scaled_init(cfg, tokenizer, seed):
    params = orig_init(cfg, tokenizer, seed)
    for k in params:
        if k.startswith("attn"):
            params[k] *= attn_gain
        if k in ("conv_w", "mlp_w", "out_w"):
            params[k] *= head_gain
    return params
trainmod.init_params = scaled_init

t0 = time.time()
ckpt = trainmod.train(train_recs, tok, train_cfg=TrainConfig(seed=3))
losses = ckpt.metadata["epoch_losses"]
print(f"[{variant}] train {time.time()-t0:.0f}s losses: {losses[0]:.5f} -> {losses[-1]:.5f}", flush=True)
for method, kw in [("neural", dict(checkpoint=ckpt)), ("hard", {}), ("dtw", {})]:
    preds = predict_corpus(method, test_recs, **kw)
    rep = alignment_accuracy([(r.id, p) for r, p in zip(test_recs, preds)], test_recs, method)
    print(f"[{variant}] {method} exact: {rep.sequence_exact_match:.4f} token: {rep.token_label_accuracy:.4f}", flush=True)
