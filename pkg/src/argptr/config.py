"""Run configuration files and the two shipped presets.

A run config is a JSON object::

    {"corpus": "train.jsonl", "embeddings": null, "output_dir": "run",
     "seed": 0, "preset": "desk",
     "features": {...}, "model": {...}, "train": {...}}

``features``/``model``/``train`` entries override the preset, and command-line
flags override the file.
"""

import copy
import json
import os
from dataclasses import dataclass, field, fields

from .model import ModelConfig
from .train import TrainConfig

PRESETS = {
    # Values reported for the full-size experiments.
    "full": {
        "features": {"embedding_dim": 300, "min_count": 1},
        "model": {
            "input_fc_size": 512,
            "encoder_hidden": 256,
            "decoder_hidden": 512,
            "alpha": 0.5,
            "dropout_rate": 0.9,
        },
        "train": {"batch_size": 16, "epochs": 4000, "lr": 1e-3},
    },
    # Small enough to train on a laptop core in minutes.
    "desk": {
        "features": {"embedding_dim": 8, "min_count": 1},
        "model": {
            "input_fc_size": 32,
            "encoder_hidden": 16,
            "decoder_hidden": 32,
            "alpha": 0.5,
            "dropout_rate": 0.5,
        },
        "train": {"batch_size": 16, "epochs": 500, "lr": 3e-3},
    },
}

FEATURE_KEYS = {"use_bow", "use_structural", "embedding_modes", "lowercase", "min_count",
                "embedding_dim", "embedding_seed"}
_MODEL_KEYS = {f.name for f in fields(ModelConfig)} - {"representation_size", "num_types"}
_TRAIN_KEYS = {f.name for f in fields(TrainConfig)}
_TOP_KEYS = {"corpus", "embeddings", "output_dir", "seed", "preset", "features", "model", "train"}


class ConfigError(ValueError):
    """Invalid run configuration; the message names the offending field."""


@dataclass
class RunConfig:
    corpus: str = ""
    embeddings: str = ""
    output_dir: str = "."
    seed: int = 0
    preset: str = "desk"
    features: dict = field(default_factory=dict)
    model: dict = field(default_factory=dict)
    train: dict = field(default_factory=dict)

    @property
    def checkpoint_path(self):
        return os.path.join(self.output_dir, "checkpoint.json")

    @property
    def history_path(self):
        return os.path.join(self.output_dir, "history.json")

    def model_config(self, representation_size, num_types):
        try:
            return ModelConfig(representation_size=representation_size, num_types=num_types, **self.model)
        except (TypeError, ValueError) as err:
            raise ConfigError(f"model: {err}") from None

    def train_config(self):
        try:
            return TrainConfig(**dict(self.train, seed=self.seed))
        except (TypeError, ValueError) as err:
            raise ConfigError(f"train: {err}") from None


def resolve(obj, overrides=None):
    """Merge a config dict with its preset and with flag overrides."""
    obj = dict(obj or {})
    for k, v in (overrides or {}).items():
        if v is not None:
            obj[k] = v
    unknown = set(obj) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"{sorted(unknown)[0]}: unknown config field")
    preset = obj.get("preset", "desk")
    if preset not in PRESETS:
        raise ConfigError(f"preset: unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    merged = copy.deepcopy(PRESETS[preset])
    for section, allowed in (("features", FEATURE_KEYS), ("model", _MODEL_KEYS), ("train", _TRAIN_KEYS)):
        given = obj.get(section) or {}
        if not isinstance(given, dict):
            raise ConfigError(f"{section}: expected an object")
        bad = set(given) - allowed
        if bad:
            raise ConfigError(f"{section}.{sorted(bad)[0]}: unknown field")
        merged[section].update(given)
    merged["train"].pop("seed", None)
    seed = obj.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        raise ConfigError("seed: must be a nonnegative integer")
    return RunConfig(
        corpus=obj.get("corpus") or "",
        embeddings=obj.get("embeddings") or "",
        output_dir=obj.get("output_dir") or ".",
        seed=seed,
        preset=preset,
        features=merged["features"],
        model=merged["model"],
        train=merged["train"],
    )


def load_run_config(path, overrides=None):
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config: file not found: {path}") from None
    except json.JSONDecodeError as err:
        raise ConfigError(f"config: malformed JSON in {path} ({err.msg})") from None
    if not isinstance(obj, dict):
        raise ConfigError("config: expected a JSON object")
    return resolve(obj, overrides)
