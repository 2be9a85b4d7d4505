"""Retrain with one feature family removed at a time.

Seven rows: drop structural, drop bag of words, drop embeddings, keep
a single pooling mode (three rows) and the full set. The seeds are
shared, so differences come from the features alone.

    python3 demos/04_feature_ablation.py [epochs]
"""

import sys

import numpy as np

from argptr.data import split_train_validation, synth_corpus
from argptr.eval import ablation_run
from argptr.features import build_vocab, make_feature_config, random_embeddings
from argptr.model import ModelConfig
from argptr.train import TrainConfig

epochs = int(sys.argv[1]) if len(sys.argv) > 1 else 40

corpus = synth_corpus(seed=4, n_examples=60, min_acs=2, max_acs=7, attachment="typed", signal=0.5)
train_part, test_part = split_train_validation(corpus, 0.3, np.random.default_rng(0))
vocab = build_vocab(train_part.examples)
emb = random_embeddings(sorted(vocab), 8, np.random.default_rng(0))
base = make_feature_config(train_part.examples, emb)
mc = ModelConfig(representation_size=base.size, num_types=3, input_fc_size=32, encoder_hidden=16,
                 decoder_hidden=32, dropout_rate=0.5)

rows = ablation_run(train_part, test_part, base, mc, TrainConfig(epochs=epochs, lr=3e-3))
print(f"{'variant':<16}{'r':>6}{'type macro':>12}{'link macro':>12}")
for row in rows:
    print(f"{row.name:<16}{row.feature_size:>6}{row.report.type_macro_f1:>12.3f}{row.report.link_macro_f1:>12.3f}")
