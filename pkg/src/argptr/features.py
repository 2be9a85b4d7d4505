"""Argument-component representations: bag of words, pooled embeddings and
structural flags, concatenated in that order.
"""

import re
from collections import Counter
from dataclasses import dataclass, field, replace

import numpy as np

POOLING_MODES = ("avg", "max", "min")
FAMILIES = ("bow", "embedding", "structural")

_TOKEN_RE = re.compile(r"\w+(?:'\w+)?|[^\w\s]", re.UNICODE)


class FeatureConfigError(ValueError):
    pass


class EmbeddingFormatError(ValueError):
    pass


def tokenize(text):
    """Split on whitespace and peel punctuation off as separate tokens."""
    return _TOKEN_RE.findall(text)


@dataclass(frozen=True)
class FeatureConfig:
    vocab: dict = field(default_factory=dict)
    embedding_table: dict = field(default_factory=dict)
    embedding_dim: int = 0
    use_bow: bool = True
    use_structural: bool = True
    embedding_modes: tuple = POOLING_MODES
    lowercase: bool = True

    def __post_init__(self):
        object.__setattr__(
            self, "embedding_modes", tuple(m for m in POOLING_MODES if m in self.embedding_modes)
        )
        if sorted(self.vocab.values()) != list(range(len(self.vocab))):
            raise FeatureConfigError("vocabulary indices must be dense in [0, |vocab|)")
        if self.embedding_modes and self.embedding_dim <= 0:
            raise FeatureConfigError("embedding pooling enabled but embedding_dim is not positive")
        for tok, vec in self.embedding_table.items():
            if len(vec) != self.embedding_dim:
                raise FeatureConfigError(
                    f"embedding for {tok!r} has length {len(vec)}, expected {self.embedding_dim}"
                )
        if self.use_bow and not self.vocab:
            raise FeatureConfigError("bag of words enabled with an empty vocabulary")

    @property
    def size(self):
        return (
            len(self.vocab) * self.use_bow
            + self.embedding_dim * len(self.embedding_modes)
            + 3 * self.use_structural
        )

    def layout(self):
        out = []
        offset = 0
        if self.use_bow:
            out.append(("bow", offset, len(self.vocab)))
            offset += len(self.vocab)
        if self.embedding_modes:
            width = self.embedding_dim * len(self.embedding_modes)
            out.append(("embedding", offset, width))
            offset += width
        if self.use_structural:
            out.append(("structural", offset, 3))
        return out

    def with_families(self, bow=None, structural=None, modes=None):
        return replace(
            self,
            use_bow=self.use_bow if bow is None else bow,
            use_structural=self.use_structural if structural is None else structural,
            embedding_modes=self.embedding_modes if modes is None else tuple(modes),
        )

    def normalize(self, token):
        return token.lower() if self.lowercase else token

    def to_json(self):
        return {
            "embedding_dim": self.embedding_dim,
            "embedding_modes": list(self.embedding_modes),
            "embedding_table": {t: list(map(float, v)) for t, v in sorted(self.embedding_table.items())},
            "lowercase": self.lowercase,
            "use_bow": self.use_bow,
            "use_structural": self.use_structural,
            "vocab": [t for t, _ in sorted(self.vocab.items(), key=lambda kv: kv[1])],
        }

    @classmethod
    def from_json(cls, obj):
        return cls(
            vocab={t: i for i, t in enumerate(obj["vocab"])},
            embedding_table={t: np.asarray(v, dtype=np.float64) for t, v in obj["embedding_table"].items()},
            embedding_dim=obj["embedding_dim"],
            use_bow=obj["use_bow"],
            use_structural=obj["use_structural"],
            embedding_modes=tuple(obj["embedding_modes"]),
            lowercase=obj["lowercase"],
        )


@dataclass(frozen=True)
class Representation:
    values: np.ndarray
    layout: tuple

    def family(self, name):
        for fam, off, length in self.layout:
            if fam == name:
                return self.values[off : off + length]
        raise KeyError(name)


def build_vocab(examples, lowercase=True, min_count=1):
    """Vocabulary over training examples, ordered by first occurrence."""
    counts = Counter()
    order = {}
    for ex in examples:
        for comp in ex.components:
            for tok in comp.tokens:
                tok = tok.lower() if lowercase else tok
                counts[tok] += 1
                order.setdefault(tok, len(order))
    kept = [t for t in sorted(order, key=order.get) if counts[t] >= min_count]
    return {t: i for i, t in enumerate(kept)}


def load_embeddings(path, lowercase=False):
    """Read ``token v1 ... vd`` lines. Every line must have the same arity."""
    table = {}
    dim = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split(" ")
            if not line.strip():
                continue
            if len(parts) < 2:
                raise EmbeddingFormatError(f"line {lineno}: expected a token and at least one value")
            if dim is None:
                dim = len(parts) - 1
            elif len(parts) - 1 != dim:
                raise EmbeddingFormatError(
                    f"line {lineno}: expected {dim} values, found {len(parts) - 1}"
                )
            try:
                vec = np.array([float(x) for x in parts[1:]], dtype=np.float64)
            except ValueError:
                raise EmbeddingFormatError(f"line {lineno}: non-numeric value") from None
            if not np.all(np.isfinite(vec)):
                raise EmbeddingFormatError(f"line {lineno}: non-finite value")
            tok = parts[0].lower() if lowercase else parts[0]
            table.setdefault(tok, vec)
    if dim is None:
        raise EmbeddingFormatError(f"{path}: no embeddings found")
    return table, dim


def save_embeddings(table, path):
    from .data import atomic_write

    lines = [
        tok + " " + " ".join(repr(float(x)) for x in vec) + "\n" for tok, vec in sorted(table.items())
    ]
    atomic_write(path, "".join(lines))


def random_embeddings(tokens, dim, rng, scale=1.0):
    """A seeded Gaussian table, handy for desk-scale runs without pretrained vectors."""
    return {t: rng.normal(0.0, scale, size=dim) for t in tokens}


def make_feature_config(examples, embedding_table=None, embedding_dim=None, **kwargs):
    """Build a config whose vocabulary comes from ``examples`` (the training split)."""
    min_count = kwargs.pop("min_count", 1)
    lowercase = kwargs.get("lowercase", True)
    vocab = build_vocab(examples, lowercase=lowercase, min_count=min_count)
    table = dict(embedding_table or {})
    if embedding_dim is None:
        embedding_dim = len(next(iter(table.values()))) if table else 0
    if not embedding_dim:
        kwargs["embedding_modes"] = ()
    return FeatureConfig(vocab=vocab, embedding_table=table, embedding_dim=embedding_dim, **kwargs)


def bow_features(tokens, config):
    out = np.zeros(len(config.vocab))
    for tok in tokens:
        idx = config.vocab.get(config.normalize(tok))
        if idx is not None:
            out[idx] = 1.0
    return out


def embedding_pool(tokens, config):
    modes = config.embedding_modes
    if not modes:
        raise FeatureConfigError("no pooling mode enabled")
    vecs = []
    for tok in tokens:
        vec = config.embedding_table.get(config.normalize(tok))
        if vec is None and config.lowercase:
            vec = config.embedding_table.get(tok)
        if vec is not None:
            vecs.append(vec)
    if not vecs:
        return np.zeros(config.embedding_dim * len(modes))
    mat = np.vstack(vecs)
    pooled = {"avg": mat.mean(axis=0), "max": mat.max(axis=0), "min": mat.min(axis=0)}
    return np.concatenate([pooled[m] for m in modes])


def structural_features(ac):
    """[first in paragraph, opening or closing paragraph, body paragraph]."""
    kind = ac.paragraph_kind
    return np.array(
        [
            float(ac.is_first_in_paragraph),
            float(kind in ("opening", "closing")),
            float(kind == "body"),
        ]
    )


def build_representation(ac, config):
    if not (config.use_bow or config.embedding_modes or config.use_structural):
        raise FeatureConfigError("every feature family is disabled")
    parts = []
    if config.use_bow:
        parts.append(bow_features(ac.tokens, config))
    if config.embedding_modes:
        parts.append(embedding_pool(ac.tokens, config))
    if config.use_structural:
        parts.append(structural_features(ac))
    return Representation(np.concatenate(parts), tuple(config.layout()))


def example_matrix(example, config):
    """Stack the representations of an example's components into an (n, r) matrix."""
    return np.vstack([build_representation(c, config).values for c in example.components])
