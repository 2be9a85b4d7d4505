"""Adam, dropout, mini-batching and validation-based model selection."""

import json
import logging
import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import model as M
from .data import atomic_write, split_train_validation
from .features import example_matrix
from .numerics import dropout_mask

logger = logging.getLogger(__name__)


class TrainingDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 16
    epochs: int = 4000
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    validation_fraction: float = 0.1
    selection_metric: str = "link_accuracy"  # or "link_macro_f1"
    clip_norm: float = 0.0  # 0 disables clipping
    checkpoint_path: str = ""

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if not 0.0 <= self.validation_fraction < 1.0:
            raise ValueError("validation_fraction must be in [0, 1)")
        if self.selection_metric not in ("link_accuracy", "link_macro_f1"):
            raise ValueError(f"unknown selection_metric {self.selection_metric!r}")

    def to_json(self):
        return asdict(self)

    @classmethod
    def from_json(cls, obj):
        unknown = set(obj) - {f.name for f in fields(cls)}
        if unknown:
            raise ValueError(f"unknown train config fields {sorted(unknown)}")
        return cls(**obj)


@dataclass
class AdamState:
    m: dict
    v: dict
    t: int = 0

    @classmethod
    def fresh(cls, params):
        return cls({k: np.zeros_like(p) for k, p in params.items()},
                   {k: np.zeros_like(p) for k, p in params.items()})


def adam_step(params, grads, state, config):
    """One Adam update, applied in place. Returns ``(params, state)``."""
    if set(grads) != set(params):
        raise ValueError(f"gradient names {sorted(grads)} differ from parameter names {sorted(params)}")
    state.t += 1
    b1, b2 = config.beta1, config.beta2
    c1 = 1.0 - b1**state.t
    c2 = 1.0 - b2**state.t
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ValueError(f"gradient for {name} has shape {g.shape}, parameter has {p.shape}")
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= config.lr * (m / c1) / (np.sqrt(v / c2) + config.adam_eps)
    return params, state


def apply_dropout(x, rate, rng, mode):
    """Inverted dropout: zero each entry with probability ``rate`` and rescale survivors."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    x = np.asarray(x, dtype=np.float64)
    if mode == "eval" or rate == 0.0:
        return x.copy()
    if mode != "train":
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    return x * dropout_mask(x.shape, rate, rng)


def clip_gradients(grads, max_norm):
    total = math.sqrt(sum(float((g * g).sum()) for g in grads.values()))
    if max_norm > 0 and total > max_norm:
        scale = max_norm / total
        for g in grads.values():
            g *= scale
    return total


@dataclass
class TrainResult:
    best_params: M.ModelParams
    final_params: M.ModelParams
    history: list
    best_epoch: int
    best_score: float
    type_labels: tuple


def _streams(seed):
    init, shuffle, dropout = np.random.SeedSequence(seed).spawn(3)
    return (np.random.Generator(np.random.PCG64(s)) for s in (init, shuffle, dropout))


def encode_examples(examples, feature_config, type_labels):
    index = {t: k for k, t in enumerate(type_labels)}
    out = []
    for ex in examples:
        out.append((ex, example_matrix(ex, feature_config), ex.links, [index[t] for t in ex.types]))
    return out


def accuracies(encoded, params, config):
    """Per-component link and type accuracy under greedy decoding (no dropout)."""
    link_hits = type_hits = total = 0
    for _, R, links, types in encoded:
        pred = M.predict(R, params, config)
        link_hits += sum(int(a == b) for a, b in zip(pred.link_index, links))
        type_hits += sum(int(a == b) for a, b in zip(pred.type_label, types))
        total += len(links)
    if total == 0:
        return 0.0, 0.0
    return link_hits / total, type_hits / total


def _selection_score(encoded, params, config, metric, link_acc):
    if metric == "link_accuracy":
        return link_acc
    from .eval import evaluate_predictions

    preds = [(ex, M.predict(R, params, config)) for ex, R, _, _ in encoded]
    return evaluate_predictions(preds, type_labels=None).link_macro_f1


def train(corpus, feature_config, model_config, train_config, validation=None, init_params=None):
    """Train on ``corpus`` and keep the parameters with the best validation link score
    (ties go to the better validation type accuracy).

    Without an explicit ``validation`` corpus a seeded fraction of ``corpus``
    is held out; a fraction of 0 selects on the training set itself. Loss
    per example is summed over components; a batch update uses the mean
    over its examples.
    """
    type_labels = tuple(corpus.type_set)
    if model_config.num_types != len(type_labels):
        raise ValueError(
            f"model has {model_config.num_types} types, corpus declares {len(type_labels)}"
        )
    if model_config.representation_size != feature_config.size:
        raise ValueError(
            f"model representation_size {model_config.representation_size} does not match "
            f"feature size {feature_config.size}"
        )
    init_rng, shuffle_rng, dropout_rng = _streams(train_config.seed)
    if validation is None and train_config.validation_fraction == 0:
        validation = corpus
    elif validation is None:
        corpus, validation = split_train_validation(
            corpus, train_config.validation_fraction, np.random.default_rng(train_config.seed)
        )
    train_set = encode_examples(corpus.examples, feature_config, type_labels)
    val_set = encode_examples(validation.examples, feature_config, type_labels)
    if not train_set:
        raise ValueError("no training examples")

    params = M.init_params(model_config, init_rng) if init_params is None else init_params.copy()
    state = AdamState.fresh(params)
    history = []
    best = ((-1.0, -1.0), 0, None)  # (selection score, type accuracy tie-break)
    bs = train_config.batch_size
    extra = {"train_config": {k: v for k, v in train_config.to_json().items() if k != "checkpoint_path"}}
    for epoch in range(1, train_config.epochs + 1):
        order = shuffle_rng.permutation(len(train_set))
        epoch_loss = 0.0
        for b, start in enumerate(range(0, len(order), bs)):
            batch = [train_set[k] for k in order[start : start + bs]]
            acc = params.zeros_like()
            batch_loss = 0.0
            for ex, R, links, types in batch:
                loss, grads = M.loss_and_grads(params, model_config, R, links, types, "train", dropout_rng)
                batch_loss += float(loss)
                for k, g in grads.items():
                    acc[k] += g
            if not math.isfinite(batch_loss) or not all(np.all(np.isfinite(g)) for g in acc.values()):
                ids = [ex.id for ex, _, _, _ in batch]
                raise TrainingDiverged(f"non-finite loss or gradient at epoch {epoch}, batch {b}: {ids}")
            for g in acc.values():
                g /= len(batch)
            if train_config.clip_norm > 0:
                clip_gradients(acc, train_config.clip_norm)
            adam_step(params, acc, state, train_config)
            epoch_loss += batch_loss
        train_loss = epoch_loss / len(train_set)
        link_acc, type_acc = accuracies(val_set, params, model_config)
        score = _selection_score(val_set, params, model_config, train_config.selection_metric, link_acc)
        history.append(
            {"epoch": epoch, "train_loss": train_loss, "val_link_acc": link_acc, "val_type_acc": type_acc}
        )
        if (score, type_acc) > best[0]:
            best = ((score, type_acc), epoch, params.copy())
            if train_config.checkpoint_path:
                M.save_checkpoint(
                    train_config.checkpoint_path, best[2], model_config, feature_config, type_labels,
                    dict(extra, epoch=epoch, selection_score=score),
                )
        logger.debug("epoch %d loss %.5f val link %.4f type %.4f", epoch, train_loss, link_acc, type_acc)
    return TrainResult(best[2], params, history, best[1], best[0][0], type_labels)


def save_history(history, path):
    atomic_write(path, json.dumps(history, indent=1, sort_keys=True) + "\n")
