"""Command-line entry point: ``argptr {train,eval,predict,synth,gradcheck}``.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
"""

import argparse
import json
import logging
import os
import sys
import time
from dataclasses import replace

import numpy as np

from . import model as M
from .config import ConfigError, load_run_config, resolve
from .data import CorpusError, atomic_write, load_corpus, save_corpus, split_train_validation, synth_corpus, validate_structure
from .eval import DEFAULT_BINS, dumps_report, evaluate, predict_corpus
from .features import (
    EmbeddingFormatError,
    FeatureConfig,
    FeatureConfigError,
    load_embeddings,
    build_vocab,
    example_matrix,
    make_feature_config,
    random_embeddings,
)
from .numerics import DimensionError, grad_check, make_rng
from .train import TrainingDiverged, save_history, train

log = logging.getLogger("argptr")

PREDICTION_SCHEMA = {
    "type": "object",
    "required": ["predictions"],
    "additionalProperties": False,
    "properties": {
        "predictions": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "links", "types", "structure"],
                "additionalProperties": False,
                "properties": {
                    "id": {"type": "string"},
                    "links": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                    "types": {"type": "array", "items": {"type": "string"}},
                    "structure": {
                        "type": "object",
                        "required": ["is_forest", "root_count", "cycle_members", "out_of_range"],
                        "properties": {
                            "is_forest": {"type": "boolean"},
                            "root_count": {"type": "integer", "minimum": 0},
                            "cycle_members": {"type": "array", "items": {"type": "integer"}},
                            "out_of_range": {"type": "array", "items": {"type": "integer"}},
                        },
                    },
                },
            },
        }
    },
}


def _require_file(path, field):
    if not path:
        raise ConfigError(f"{field}: no path given")
    if not os.path.isfile(path):
        raise ConfigError(f"{field}: file not found: {path}")


def _embedding_table(run, vocab_tokens):
    feats = run.features
    if run.embeddings:
        table, dim = load_embeddings(run.embeddings, lowercase=feats.get("lowercase", True))
        return table, dim
    dim = feats.get("embedding_dim", 0)
    if not dim:
        return {}, 0
    rng = np.random.default_rng(feats.get("embedding_seed", run.seed))
    return random_embeddings(sorted(vocab_tokens), dim, rng), dim


def build_features(run, train_examples):
    feats = dict(run.features)
    lowercase = feats.get("lowercase", True)
    min_count = feats.get("min_count", 1)
    vocab = build_vocab(train_examples, lowercase=lowercase, min_count=min_count)
    table, dim = _embedding_table(run, vocab)
    kwargs = {k: feats[k] for k in ("use_bow", "use_structural", "embedding_modes", "lowercase") if k in feats}
    if "embedding_modes" in kwargs:
        kwargs["embedding_modes"] = tuple(kwargs["embedding_modes"])
    try:
        return make_feature_config(train_examples, table, dim or None, min_count=min_count, **kwargs)
    except FeatureConfigError as err:
        raise ConfigError(f"features: {err}") from None


def cmd_train(args):
    overrides = {"seed": args.seed, "output_dir": args.out, "corpus": args.corpus,
                 "embeddings": args.embeddings, "preset": args.preset}
    run = load_run_config(args.config, overrides) if args.config else resolve({}, overrides)
    if args.epochs is not None:
        run.train["epochs"] = args.epochs
    _require_file(run.corpus, "corpus")
    if run.embeddings:
        _require_file(run.embeddings, "embeddings")
    tcfg = run.train_config()
    corpus = load_corpus(run.corpus)
    if tcfg.validation_fraction == 0:
        train_part = val_part = corpus
    else:
        train_part, val_part = split_train_validation(
            corpus, tcfg.validation_fraction, np.random.default_rng(tcfg.seed)
        )
    fcfg = build_features(run, train_part.examples)
    mcfg = run.model_config(fcfg.size, len(corpus.type_set))
    os.makedirs(run.output_dir, exist_ok=True)
    tcfg = replace(tcfg, checkpoint_path=run.checkpoint_path)
    t0 = time.time()
    result = train(train_part, fcfg, mcfg, tcfg, validation=val_part)
    save_history(result.history, run.history_path)
    print(
        f"trained {tcfg.epochs} epochs in {time.time() - t0:.1f}s; best epoch {result.best_epoch} "
        f"(validation {tcfg.selection_metric} {result.best_score:.4f})"
    )
    print(f"checkpoint: {run.checkpoint_path}\nhistory: {run.history_path}")
    return 0


def _load_for_inference(args):
    _require_file(args.checkpoint, "checkpoint")
    _require_file(args.corpus, "corpus")
    ckpt = M.load_checkpoint(args.checkpoint)
    corpus = load_corpus(args.corpus)
    unknown = set(corpus.type_set) - set(ckpt.type_labels)
    if unknown:
        raise ConfigError(f"corpus: type labels {sorted(unknown)} unknown to the checkpoint")
    fcfg = ckpt.feature_config
    if getattr(args, "embeddings", None):
        _require_file(args.embeddings, "embeddings")
        table, dim = load_embeddings(args.embeddings, lowercase=fcfg.lowercase)
        obj = fcfg.to_json()
        obj["embedding_table"] = table
        obj["embedding_dim"] = dim
        fcfg = FeatureConfig.from_json(obj)
    if fcfg.size != ckpt.model_config.representation_size:
        raise DimensionError(
            f"features: corpus representation size {fcfg.size} does not match the checkpoint's "
            f"representation_size {ckpt.model_config.representation_size}"
        )
    return ckpt, fcfg, corpus


def _write_or_print(text, path):
    if path:
        atomic_write(path, text)
    else:
        sys.stdout.write(text)


def cmd_eval(args):
    ckpt, fcfg, corpus = _load_for_inference(args)
    bins = DEFAULT_BINS if args.bins else None
    report = evaluate(corpus.examples, ckpt.params, ckpt.model_config, fcfg, ckpt.type_labels, bins)
    _write_or_print(dumps_report(report), args.out)
    return 0


def prediction_document(predictions, type_labels):
    out = []
    for ex, pred in predictions:
        out.append(
            {
                "id": ex.id,
                "links": list(pred.link_index),
                "types": [type_labels[k] for k in pred.type_label],
                "structure": validate_structure(pred.link_index).to_json(),
            }
        )
    return {"predictions": out}


def cmd_predict(args):
    ckpt, fcfg, corpus = _load_for_inference(args)
    preds = predict_corpus(corpus.examples, ckpt.params, ckpt.model_config, fcfg)
    doc = prediction_document(preds, ckpt.type_labels)
    _write_or_print(json.dumps(doc, indent=1, sort_keys=True) + "\n", args.out)
    return 0


def cmd_synth(args):
    if args.min_acs > args.max_acs or args.min_acs < 1:
        raise ConfigError(f"min-acs/max-acs: need 1 <= min-acs <= max-acs, got {args.min_acs}, {args.max_acs}")
    if args.n_examples < 1:
        raise ConfigError("n-examples: must be positive")
    types = tuple(t for t in args.types.split(",") if t)
    if len(types) < 2:
        raise ConfigError("types: need at least two labels")
    corpus = synth_corpus(args.seed, args.n_examples, args.min_acs, args.max_acs, types,
                          args.corpus_tag, args.attachment, signal=args.signal)
    if not args.out:
        raise ConfigError("out: an output path is required")
    save_corpus(corpus, args.out)
    print(f"wrote {len(corpus)} examples to {args.out}")
    return 0


def gradcheck_setup(model_overrides=None, n=4, seed=0):
    """Model, parameters and one synthetic example for gradient checking."""
    corpus = synth_corpus(seed, 1, n, n, ("major_claim", "claim", "premise"))
    ex = corpus.examples[0]
    rng = np.random.default_rng(seed)
    vocab = build_vocab([ex])
    fcfg = make_feature_config([ex], random_embeddings(sorted(vocab), 4, rng), 4)
    mopts = dict(input_fc_size=32, encoder_hidden=16, decoder_hidden=32, dropout_rate=0.0)
    mopts.update(model_overrides or {})
    mcfg = M.ModelConfig(representation_size=fcfg.size, num_types=3, **mopts)
    params = M.init_params(mcfg, make_rng(seed))
    R = example_matrix(ex, fcfg)
    types = [corpus.type_set.index(t) for t in ex.types]
    return mcfg, params, R, ex.links, types


def run_gradcheck(model_overrides=None, n=4, seed=0, eps=1e-5, fd_dtype=None):
    mcfg, params, R, links, types = gradcheck_setup(model_overrides, n, seed)
    return grad_check(
        lambda p: M.loss_and_grads(p, mcfg, R, links, types),
        params,
        eps,
        loss_fn=lambda p: M.loss_only(p, mcfg, R, links, types),
        fd_dtype=fd_dtype,
    )


def cmd_gradcheck(args):
    overrides = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                overrides = json.load(fh)
        except (OSError, json.JSONDecodeError) as err:
            raise ConfigError(f"config: cannot read {args.config} ({err})") from None
        overrides = overrides.get("model", overrides)
    overrides.pop("representation_size", None)
    overrides.pop("num_types", None)
    try:
        M.ModelConfig(representation_size=1, num_types=3, **overrides)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"model: {err}") from None
    fd_dtype = np.longdouble if args.fd_precision == "extended" else None
    t0 = time.time()
    err = run_gradcheck(overrides, args.n, args.seed or 0, args.eps, fd_dtype)
    ok = err <= args.tolerance
    print(f"max relative error {err:.3e} ({args.fd_precision} finite differences, eps {args.eps:g}, "
          f"{time.time() - t0:.1f}s): {'PASS' if ok else 'FAIL'} at tolerance {args.tolerance:g}")
    return 0 if ok else 1


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run config JSON")
    common.add_argument("--seed", type=int, help="random seed (overrides config)")
    common.add_argument("--out", help="output directory (train) or file (other commands)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="argptr", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", parents=[common], help="train a model from a run config")
    p.add_argument("--corpus")
    p.add_argument("--embeddings")
    p.add_argument("--preset", choices=["desk", "full"])
    p.add_argument("--epochs", type=int)
    p.set_defaults(func=cmd_train)

    for name, func, helptext in (("eval", cmd_eval, "score a checkpoint on a corpus"),
                                 ("predict", cmd_predict, "decode links and types for a corpus")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--checkpoint", required=True)
        p.add_argument("--corpus", required=True)
        p.add_argument("--embeddings", help="replace the checkpoint's embedding table")
        if name == "eval":
            p.add_argument("--bins", action="store_true", help="add length-binned sub-reports")
        p.set_defaults(func=func)

    p = sub.add_parser("synth", parents=[common], help="write a synthetic corpus")
    p.add_argument("--n-examples", type=int, default=100)
    p.add_argument("--min-acs", type=int, default=2)
    p.add_argument("--max-acs", type=int, default=8)
    p.add_argument("--types", default="major_claim,claim,premise")
    p.add_argument("--corpus-tag", choices=["pec_style", "mtc_style"], default="pec_style")
    p.add_argument("--attachment", choices=["uniform", "typed"], default="uniform")
    p.add_argument("--signal", type=float, default=0.6)
    p.set_defaults(func=cmd_synth, seed=0)

    p = sub.add_parser("gradcheck", parents=[common], help="compare analytic and numeric gradients")
    p.add_argument("--n", type=int, default=4, help="number of components")
    p.add_argument("--eps", type=float, default=1e-5)
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.add_argument("--fd-precision", choices=["double", "extended"], default="double")
    p.set_defaults(func=cmd_gradcheck)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command == "synth" and args.seed is None:
        args.seed = 0
    try:
        return args.func(args)
    except (ConfigError, CorpusError, EmbeddingFormatError, DimensionError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (TrainingDiverged, OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
