"""Fast 4k-record convergence probes for criterion-6 levers."""
import sys, time
import numpy as np

from dysalign.phonemes import Level
from dysalign.simulate import SimulationConfig, simulate_corpus
from dysalign.lexicon import demo_texts, line_to_sequence, LEXICON
from dysalign.evalkit import predict_corpus, alignment_accuracy
from dysalign.neural.tokenizer import build_tokenizer
import dysalign.neural.training as trainmod
import dysalign.neural.model as modelmod
from dysalign.neural.training import TrainConfig

variant = sys.argv[1]

n_train, n_test = 4000, 500
min_w, max_w = 2, 3
vocab_limit = None
tied_qk = False
head_gain = 1.0
beta2 = 0.999

if variant == "tied":
    tied_qk = True
elif variant == "beta2":
    beta2 = 0.98
elif variant == "head":
    head_gain = 2.45
elif variant == "vocab40":
    vocab_limit = 40
elif variant == "tied_beta2":
    tied_qk = True
    beta2 = 0.98
elif variant == "tied_beta2_head":
    tied_qk = True
    beta2 = 0.98
    head_gain = 2.45

vo_gain = 1.0
qk_gain = 1.0
epochs = 15
if variant == "vo3":
    vo_gain = 3.0
elif variant == "qk03_vo3":
    qk_gain = 0.3
    vo_gain = 3.0
elif variant == "long45":
    epochs = 45

words = sorted(LEXICON)
if vocab_limit:
    rngw = np.random.default_rng(5)
    words = sorted(rngw.choice(words, size=vocab_limit, replace=False))
    rng = np.random.default_rng(17)
    texts_raw = []
    for _ in range(n_train + n_test):
        k = int(rng.integers(min_w, max_w + 1))
        texts_raw.append(" ".join(words[int(i)] for i in rng.integers(0, len(words), k)))
else:
    texts_raw = demo_texts(n_train + n_test, seed=1, min_words=min_w, max_words=max_w)

texts = [line_to_sequence(t, Level.PHONEME) for t in texts_raw]
records = simulate_corpus(texts, SimulationConfig(seed=11), n_train + n_test)
train_recs, test_recs = records[:n_train], records[n_train:]
tok = build_tokenizer(Level.PHONEME)

orig_init = modelmod.init_params
def patched_init(cfg, tokenizer, seed):
    params = orig_init(cfg, tokenizer, seed)
    if tied_qk:
        for l in range(cfg.context_layers):
            params[f"attn{l}_wk"] = params[f"attn{l}_wq"].copy()
    for k in ("conv_w", "mlp_w", "out_w"):
        params[k] *= head_gain
    for l in range(cfg.context_layers):
        params[f"attn{l}_wv"] *= vo_gain
        params[f"attn{l}_wo"] *= vo_gain
        params[f"attn{l}_wq"] *= qk_gain
        params[f"attn{l}_wk"] *= qk_gain
    return params
trainmod.init_params = patched_init

t0 = time.time()
ckpt = trainmod.train(train_recs, tok, train_cfg=TrainConfig(seed=3, beta2=beta2, epochs=epochs))
losses = ckpt.metadata["epoch_losses"]
preds = predict_corpus("neural", test_recs, ckpt)
rep = alignment_accuracy([(r.id, p) for r, p in zip(test_recs, preds)], test_recs, "neural")
print(f"[{variant}] {time.time()-t0:.0f}s loss {losses[0]:.5f}->{losses[-1]:.5f} "
      f"exact {rep.sequence_exact_match:.4f} token {rep.token_label_accuracy:.4f}", flush=True)

# extra variants appended: vo3 (value/output init x3), qk03 (query/key x0.3)
