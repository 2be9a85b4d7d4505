"""Joint pointer network for link extraction and component typing.

For an example with n components and representation matrix R (n x r)::

    A   = dropout(sigmoid(R W_enc^T + b_enc))          encoder inputs
    E   = BLSTM(A)                                     (n, 2 * enc_hidden)
    B   = dropout(sigmoid(R W_dec^T + b_dec))          decoder inputs, step i sees R_i
    D   = LSTM(B)                                      (n, dec_hidden)
    U   = [v . tanh(W1 e_j + W2 d_i)]_ij               pointer scores
    P   = softmax(U, rows)                             link distributions
    T   = softmax(E W_cls^T + b_cls, rows)             type distributions

Loss = -(alpha * sum_i log P[i, link_i] + (1 - alpha) * sum_i log T[i, type_i]).

``no_seq2seq`` drops the decoder and uses e_i as the attention query;
``no_fc_input`` feeds R straight into the LSTMs; ``single_task`` trains with
alpha = 1.
"""

import json
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import layers
from .features import FeatureConfig, Representation
from .numerics import DimensionError, as_tensor, dropout_mask, init_param, log_softmax

VARIANTS = ("joint", "single_task", "no_seq2seq", "no_fc_input")
CHECKPOINT_FORMAT = "argptr-checkpoint"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class ModelConfig:
    representation_size: int
    num_types: int = 3
    input_fc_size: int = 512
    encoder_hidden: int = 256
    decoder_hidden: int = 512
    attention_size: int = 0  # 0 means "same as decoder_hidden"
    alpha: float = 0.5
    variant: str = "joint"
    dropout_rate: float = 0.9
    dropout_convention: str = "drop"  # "drop": rate is the drop probability; "keep": keep probability
    forget_bias: float = 1.0
    decoder_init: str = "zeros"  # or "encoder": final forward encoder state

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        for name in ("representation_size", "num_types", "input_fc_size", "encoder_hidden", "decoder_hidden"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.num_types < 2:
            raise ValueError("num_types must be at least 2")
        if self.attention_size < 0:
            raise ValueError("attention_size must be nonnegative")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.dropout_convention not in ("drop", "keep"):
            raise ValueError("dropout_convention must be 'drop' or 'keep'")
        if self.dropout_convention == "drop" and not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("drop probability must be in [0, 1)")
        if self.dropout_convention == "keep" and not 0.0 < self.dropout_rate <= 1.0:
            raise ValueError("keep probability must be in (0, 1]")
        if self.decoder_init not in ("zeros", "encoder"):
            raise ValueError("decoder_init must be 'zeros' or 'encoder'")
        if self.decoder_init == "encoder" and self.decoder_hidden != self.encoder_hidden:
            raise ValueError("decoder_init='encoder' needs decoder_hidden == encoder_hidden")

    @property
    def effective_alpha(self):
        return 1.0 if self.variant == "single_task" else self.alpha

    @property
    def drop_probability(self):
        return self.dropout_rate if self.dropout_convention == "drop" else 1.0 - self.dropout_rate

    @property
    def attn_size(self):
        return self.attention_size or self.decoder_hidden

    @property
    def uses_fc(self):
        return self.variant != "no_fc_input"

    @property
    def uses_decoder(self):
        return self.variant != "no_seq2seq"

    @property
    def lstm_input_size(self):
        return self.input_fc_size if self.uses_fc else self.representation_size

    def to_json(self):
        return asdict(self)

    @classmethod
    def from_json(cls, obj):
        known = {f.name for f in fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise ValueError(f"unknown model config fields {sorted(unknown)}")
        return cls(**obj)


class ModelParams(dict):
    """Name -> float64 array. Names are stable and double as checkpoint keys."""

    def fc(self, prefix, activation="sigmoid"):
        return layers.FcParams(self[prefix + ".W"], self[prefix + ".b"], activation)

    def lstm(self, prefix):
        return layers.LstmParams(self[prefix + ".Wx"], self[prefix + ".Wh"], self[prefix + ".b"])

    def attention(self):
        return layers.AttentionParams(self["attn.W1"], self["attn.W2"], self["attn.v"])

    def copy(self):
        return ModelParams({k: v.copy() for k, v in self.items()})

    def zeros_like(self):
        return ModelParams({k: np.zeros_like(v) for k, v in self.items()})


def param_shapes(config):
    c = config
    shapes = {}
    k = c.lstm_input_size
    if c.uses_fc:
        shapes["fc_enc.W"] = (c.input_fc_size, c.representation_size)
        shapes["fc_enc.b"] = (c.input_fc_size,)
        if c.uses_decoder:
            shapes["fc_dec.W"] = (c.input_fc_size, c.representation_size)
            shapes["fc_dec.b"] = (c.input_fc_size,)
    he, hd = c.encoder_hidden, c.decoder_hidden
    for prefix in ("enc_fwd", "enc_bwd"):
        shapes[prefix + ".Wx"] = (4 * he, k)
        shapes[prefix + ".Wh"] = (4 * he, he)
        shapes[prefix + ".b"] = (4 * he,)
    if c.uses_decoder:
        shapes["dec.Wx"] = (4 * hd, k)
        shapes["dec.Wh"] = (4 * hd, hd)
        shapes["dec.b"] = (4 * hd,)
    query = hd if c.uses_decoder else 2 * he
    shapes["attn.W1"] = (c.attn_size, 2 * he)
    shapes["attn.W2"] = (c.attn_size, query)
    shapes["attn.v"] = (c.attn_size,)
    shapes["cls.W"] = (c.num_types, 2 * he)
    shapes["cls.b"] = (c.num_types,)
    return shapes


def init_params(config, rng):
    """Uniform fan-scaled weights, zero biases, forget-gate bias ``config.forget_bias``."""
    params = ModelParams()
    for name, shape in param_shapes(config).items():
        if name.endswith(".b"):
            params[name] = init_param(shape, "zeros")
            if name.split(".")[0] in ("enc_fwd", "enc_bwd", "dec"):
                h = shape[0] // 4
                params[name][h : 2 * h] = config.forget_bias
        else:
            params[name] = init_param(shape, "uniform-scaled", rng)
    return params


def check_params(params, config):
    expected = param_shapes(config)
    if set(params) != set(expected):
        raise DimensionError(
            f"parameter names {sorted(params)} do not match config {sorted(expected)}"
        )
    for name, shape in expected.items():
        if params[name].shape != shape:
            raise DimensionError(f"{name} has shape {params[name].shape}, config expects {shape}")


@dataclass
class Prediction:
    pointer_dists: np.ndarray
    link_index: list  # 1-based; self index means root
    type_dists: np.ndarray
    type_label: list  # class indices

    def __len__(self):
        return len(self.link_index)


@dataclass
class ForwardResult:
    pointer_logp: np.ndarray
    type_logp: np.ndarray
    cache: tuple

    @property
    def pointer_dists(self):
        return np.exp(self.pointer_logp)

    @property
    def type_dists(self):
        return np.exp(self.type_logp)


def _as_matrix(example_reprs, config):
    if isinstance(example_reprs, np.ndarray):
        R = as_tensor(example_reprs)
    else:
        reprs = list(example_reprs)
        if not reprs:
            raise ValueError("cannot run the model on an empty sequence")
        R = np.vstack([r.values if isinstance(r, Representation) else np.asarray(r, float) for r in reprs])
        R = as_tensor(R)
    if R.ndim != 2 or R.shape[0] == 0:
        raise ValueError("cannot run the model on an empty sequence")
    if R.shape[1] != config.representation_size:
        raise DimensionError(
            f"representation size {R.shape[1]} does not match model representation_size "
            f"{config.representation_size}"
        )
    return R


def _dropout(x, p_drop, rng, mode):
    if mode != "train" or p_drop == 0.0:
        return x, None
    if rng is None:
        raise ValueError("train mode needs an rng for dropout")
    mask = dropout_mask(x.shape, p_drop, rng)
    return x * mask, mask


def decoder_input(i, example_reprs, params, config, activation="sigmoid"):
    """FC-transformed representation of component i (1-based) fed at decoding step i."""
    R = _as_matrix(example_reprs, config)
    n = R.shape[0]
    if not 1 <= i <= n:
        raise ValueError(f"decoding step {i} out of range [1, {n}]")
    if not config.uses_fc:
        return R[i - 1].copy()
    return layers.fc_forward(R[i - 1], params.fc("fc_dec", activation))[0]


def forward(example_reprs, params, config, mode="eval", rng=None):
    """Run the model on one example. Distributions are exact softmaxes of the scores."""
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    R = _as_matrix(example_reprs, config)
    p_drop = config.drop_probability

    if config.uses_fc:
        A, enc_fc_cache = layers.fc_forward(R, params.fc("fc_enc"))
    else:
        A, enc_fc_cache = R, None
    A, enc_mask = _dropout(A, p_drop, rng, mode)
    E, enc_cache = layers.blstm_encode(A, params.lstm("enc_fwd"), params.lstm("enc_bwd"))

    dec_fc_cache = dec_cache = dec_mask = None
    if config.uses_decoder:
        if config.uses_fc:
            B, dec_fc_cache = layers.fc_forward(R, params.fc("fc_dec"))
        else:
            B = R
        B, dec_mask = _dropout(B, p_drop, rng, mode)
        h0 = c0 = None
        if config.decoder_init == "encoder":
            h0, c0 = enc_cache[3], enc_cache[4]
        D, _, dec_cache = layers.lstm_forward(B, params.lstm("dec"), h0, c0)
    else:
        D = E

    U, attn_cache = layers.pointer_scores(E, D, params.attention())
    Z, cls_cache = layers.fc_forward(E, params.fc("cls", activation="none"))
    cache = (enc_fc_cache, enc_mask, enc_cache, dec_fc_cache, dec_mask, dec_cache, attn_cache, cls_cache)
    return ForwardResult(log_softmax(U, axis=1), log_softmax(Z, axis=1), cache)


def forward_no_seq2seq(example_reprs, params, config, mode="eval", rng=None):
    """Encoder-only variant: the attention query at step i is e_i."""
    if config.variant != "no_seq2seq":
        raise ValueError("forward_no_seq2seq needs a config with variant='no_seq2seq'")
    return forward(example_reprs, params, config, mode, rng)


def _check_gold(gold_links, gold_types, n, num_types):
    links = np.asarray(gold_links, dtype=np.int64)
    types = np.asarray(gold_types, dtype=np.int64)
    if links.shape != (n,) or types.shape != (n,):
        raise DimensionError(f"need {n} gold links and types, got {links.shape} and {types.shape}")
    if np.any(links < 1) or np.any(links > n):
        raise ValueError(f"gold links must be in [1, {n}]")
    if np.any(types < 0) or np.any(types >= num_types):
        raise ValueError(f"gold types must be in [0, {num_types})")
    return links - 1, types


def joint_loss(pointer_dists, type_dists, gold_links, gold_types, alpha):
    """Weighted negative log-likelihood of gold links (1-based) and types (class indices).

    Works on probability tables; probabilities that underflow to zero are
    clamped to the smallest positive double so the result stays finite.
    """
    P = np.asarray(pointer_dists, dtype=np.float64)
    T = np.asarray(type_dists, dtype=np.float64)
    n = P.shape[0]
    li, ti = _check_gold(gold_links, gold_types, n, T.shape[1])
    tiny = np.finfo(np.float64).tiny
    rows = np.arange(n)
    link_ll = np.log(np.maximum(P[rows, li], tiny)).sum()
    type_ll = np.log(np.maximum(T[rows, ti], tiny)).sum()
    return float(-(alpha * link_ll + (1.0 - alpha) * type_ll))


def _loss_from_logp(result, li, ti, alpha):
    # Kept as a numpy scalar so extended-precision evaluations are not rounded.
    rows = np.arange(len(li))
    return -(alpha * result.pointer_logp[rows, li].sum() + (1.0 - alpha) * result.type_logp[rows, ti].sum())


def backward(result, gold_links, gold_types, params, config):
    """Gradients of the joint loss for one example, keyed like ``params``."""
    n = result.pointer_logp.shape[0]
    li, ti = _check_gold(gold_links, gold_types, n, config.num_types)
    alpha = config.effective_alpha
    (enc_fc_cache, enc_mask, enc_cache, dec_fc_cache, dec_mask, dec_cache, attn_cache, cls_cache) = result.cache
    rows = np.arange(n)
    grads = {}

    dU = np.exp(result.pointer_logp)
    dU[rows, li] -= 1.0
    dU *= alpha
    dZ = np.exp(result.type_logp)
    dZ[rows, ti] -= 1.0
    dZ *= 1.0 - alpha

    dE, dQ, g = layers.pointer_backward(dU, attn_cache)
    _put(grads, "attn", g)
    dE_cls, g = layers.fc_backward(dZ, cls_cache)
    _put(grads, "cls", g)
    dE = dE + dE_cls

    dh_last = dc_last = None
    if config.uses_decoder:
        dB, g, dh0, dc0 = layers.lstm_backward(dQ, dec_cache)
        _put(grads, "dec", g)
        if config.decoder_init == "encoder":
            dh_last, dc_last = dh0, dc0
        if dec_mask is not None:
            dB = dB * dec_mask
        if config.uses_fc:
            _, g = layers.fc_backward(dB, dec_fc_cache)
            _put(grads, "fc_dec", g)
    else:
        dE = dE + dQ

    dA, gf, gb = layers.blstm_backward(dE, enc_cache, dh_last, dc_last)
    _put(grads, "enc_fwd", gf)
    _put(grads, "enc_bwd", gb)
    if enc_mask is not None:
        dA = dA * enc_mask
    if config.uses_fc:
        _, g = layers.fc_backward(dA, enc_fc_cache)
        _put(grads, "fc_enc", g)
    return ModelParams(grads)


def _put(grads, prefix, g):
    for k, v in g.items():
        grads[f"{prefix}.{k}"] = v


def loss_and_grads(params, config, example_reprs, gold_links, gold_types, mode="eval", rng=None):
    result = forward(example_reprs, params, config, mode, rng)
    li, ti = _check_gold(gold_links, gold_types, result.pointer_logp.shape[0], config.num_types)
    loss = _loss_from_logp(result, li, ti, config.effective_alpha)
    return loss, backward(result, gold_links, gold_types, params, config)


def loss_only(params, config, example_reprs, gold_links, gold_types, mode="eval", rng=None):
    result = forward(example_reprs, params, config, mode, rng)
    li, ti = _check_gold(gold_links, gold_types, result.pointer_logp.shape[0], config.num_types)
    return _loss_from_logp(result, li, ti, config.effective_alpha)


def decode_greedy(pointer_dists, type_dists):
    """Row-wise argmax; ties go to the lowest index. Links come back 1-based."""
    P = np.asarray(pointer_dists, dtype=np.float64)
    T = np.asarray(type_dists, dtype=np.float64)
    links = [int(j) + 1 for j in np.argmax(P, axis=1)]
    types = [int(k) for k in np.argmax(T, axis=1)]
    return Prediction(P, links, T, types)


def predict(example_reprs, params, config):
    result = forward(example_reprs, params, config, mode="eval")
    return decode_greedy(result.pointer_dists, result.type_dists)


# --- checkpoints -----------------------------------------------------------


def checkpoint_json(params, config, feature_config, type_labels, extra=None):
    obj = {
        "extra": extra or {},
        "feature_config": feature_config.to_json(),
        "format": CHECKPOINT_FORMAT,
        "model_config": config.to_json(),
        "params": {
            name: {"data": params[name].reshape(-1).tolist(), "shape": list(params[name].shape)}
            for name in sorted(params)
        },
        "type_labels": list(type_labels),
        "version": CHECKPOINT_VERSION,
    }
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


def save_checkpoint(path, params, config, feature_config, type_labels, extra=None):
    from .data import atomic_write

    atomic_write(path, checkpoint_json(params, config, feature_config, type_labels, extra))


@dataclass
class Checkpoint:
    params: ModelParams
    model_config: ModelConfig
    feature_config: FeatureConfig
    type_labels: list
    extra: dict


def load_checkpoint(path):
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    if obj.get("format") != CHECKPOINT_FORMAT or obj.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: not a version {CHECKPOINT_VERSION} {CHECKPOINT_FORMAT} file")
    config = ModelConfig.from_json(obj["model_config"])
    params = ModelParams(
        {
            name: np.asarray(entry["data"], dtype=np.float64).reshape(entry["shape"])
            for name, entry in obj["params"].items()
        }
    )
    check_params(params, config)
    return Checkpoint(
        params, config, FeatureConfig.from_json(obj["feature_config"]), obj["type_labels"], obj["extra"]
    )
