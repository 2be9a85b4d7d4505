"""Walk through the four-component running example.

AC1 is a claim. AC2 supports AC1, AC3 and AC4 support AC2. The decoder
target is the outgoing link of each component, with a root pointing at
itself, so the sequence is (1, 1, 2, 2). We fit a tiny model to this one
paragraph and decode it back.

    python3 demos/01_four_component_walkthrough.py
"""

import numpy as np

from argptr import model as M
from argptr.data import ArgComponent, Corpus, Example, target_sequence, validate_structure
from argptr.features import example_matrix, make_feature_config
from argptr.train import TrainConfig, train

texts = [
    "we should attach more importance to cooperation",
    "competition alone rarely yields lasting results",
    "teams share ideas and skills",
    "people learn faster from each other",
]
links = [1, 1, 2, 2]
types = ["claim", "premise", "premise", "premise"]

comps = tuple(
    ArgComponent(tuple(t.split()), ty, l, i == 0, "body") for i, (t, ty, l) in enumerate(zip(texts, types, links))
)
example = Example("running-example", comps)
corpus = Corpus([example], ("claim", "premise"))

print("target sequence:", target_sequence(example))
print("structure:", validate_structure(example.links))

# bag of words + structural flags; no embeddings needed for a single paragraph
fc = make_feature_config(corpus.examples)
print("representation size:", fc.size, fc.layout())

mc = M.ModelConfig(representation_size=fc.size, num_types=2, input_fc_size=32, encoder_hidden=16,
                   decoder_hidden=32, dropout_rate=0.0)
result = train(corpus, fc, mc, TrainConfig(epochs=150, lr=3e-3), validation=corpus)
print(f"best epoch {result.best_epoch}, final loss {result.history[-1]['train_loss']:.4f}")

pred = M.predict(example_matrix(example, fc), result.best_params, mc)
np.set_printoptions(precision=3, suppress=True)
print("pointer distributions (row i = decoding step i):")
print(pred.pointer_dists)
print("decoded links:", pred.link_index)
print("decoded types:", [corpus.type_set[k] for k in pred.type_label])
