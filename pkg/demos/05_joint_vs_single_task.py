"""Does learning types help the link head?

On synthetic data where every premise links to its nearest claim-like
root, knowing a component's type tells you a lot about where it points.
We train the joint model (alpha 0.5) and the link-only model on the same
splits and compare held-out link macro F1.

    python3 demos/05_joint_vs_single_task.py [seeds] [epochs]
"""

import sys

import numpy as np

from argptr.data import split_train_validation, synth_corpus
from argptr.eval import evaluate
from argptr.features import build_vocab, make_feature_config, random_embeddings
from argptr.model import ModelConfig
from argptr.train import TrainConfig, train

n_seeds = int(sys.argv[1]) if len(sys.argv) > 1 else 5
epochs = int(sys.argv[2]) if len(sys.argv) > 2 else 100

scores = {"joint": [], "single_task": []}
for seed in range(n_seeds):
    corpus = synth_corpus(100 + seed, 40, 2, 7, attachment="typed", signal=0.4)
    tr, te = split_train_validation(corpus, 0.3, np.random.default_rng(seed))
    vocab = build_vocab(tr.examples)
    fc = make_feature_config(tr.examples, random_embeddings(sorted(vocab), 8, np.random.default_rng(seed)))
    for variant in scores:
        mc = ModelConfig(representation_size=fc.size, num_types=3, input_fc_size=32, encoder_hidden=16,
                         decoder_hidden=32, dropout_rate=0.5, variant=variant)
        result = train(tr, fc, mc, TrainConfig(epochs=epochs, lr=3e-3, seed=seed))
        scores[variant].append(evaluate(te.examples, result.best_params, mc, fc, corpus.type_set).link_macro_f1)
    print(f"seed {seed}: joint {scores['joint'][-1]:.3f}  single_task {scores['single_task'][-1]:.3f}")

for variant, vals in scores.items():
    print(f"{variant:>12}: mean link macro f1 {np.mean(vals):.3f}")
