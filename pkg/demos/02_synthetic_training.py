"""Train the desk-size model on a synthetic corpus and score it by length bin.

The synthetic generator draws random forests and colours each component's
tokens with a type-specific vocabulary, so both heads have something to
learn. Everything is seeded.

    python3 demos/02_synthetic_training.py [epochs]
"""

import sys

import numpy as np

from argptr.cli import build_features
from argptr.config import resolve
from argptr.data import split_train_validation, synth_corpus
from argptr.eval import DEFAULT_BINS, evaluate, format_table
from argptr.train import train

epochs = int(sys.argv[1]) if len(sys.argv) > 1 else 150

corpus = synth_corpus(seed=1, n_examples=120, min_acs=1, max_acs=11)
rest, test = split_train_validation(corpus, 0.25, np.random.default_rng(0))
print(f"{len(rest)} train+validation examples, {len(test)} test examples, types {corpus.type_set}")

run = resolve({"preset": "desk", "seed": 0, "train": {"epochs": epochs}})
tc = run.train_config()
tr, va = split_train_validation(rest, tc.validation_fraction, np.random.default_rng(tc.seed))
fc = build_features(run, tr.examples)
mc = run.model_config(fc.size, len(corpus.type_set))
print("features:", fc.layout())

result = train(tr, fc, mc, tc, validation=va)
for h in result.history[:: max(1, epochs // 8)]:
    print(f"epoch {h['epoch']:4d}  loss {h['train_loss']:.3f}  val link {h['val_link_acc']:.3f}  val type {h['val_type_acc']:.3f}")
print("selected epoch", result.best_epoch)

report = evaluate(test.examples, result.best_params, mc, fc, corpus.type_set, DEFAULT_BINS)
print(format_table(report, corpus.type_set))
for name, sub in report.bins.items():
    if sub is None:
        print(f"{name:>10}: empty")
    else:
        print(f"{name:>10}: {sub.n_examples:3d} examples, link macro {sub.link_macro_f1:.3f}, type macro {sub.type_macro_f1:.3f}")
