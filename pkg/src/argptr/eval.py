"""Type and link metrics, length binning and the feature-ablation driver.

Link prediction is scored over every ordered pair (i, j), i != j, inside an
example: the pair is positive when component i links to j. Self-links (roots)
produce no positive pair. Counts are pooled over examples before computing
F1 (micro pooling); macro scores are unweighted means over labels.
"""

import json
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

LINK = "link"
NO_LINK = "no_link"
DEFAULT_BINS = ((1, 4), (4, 8), (8, 12))

TABLE3_VARIANTS = OrderedDict(
    [
        ("No structural", dict(bow=True, structural=False, modes=("avg", "max", "min"))),
        ("No BOW", dict(bow=False, structural=True, modes=("avg", "max", "min"))),
        ("No Embeddings", dict(bow=True, structural=True, modes=())),
        ("Only Avg Emb", dict(bow=True, structural=True, modes=("avg",))),
        ("Only Max Emb", dict(bow=True, structural=True, modes=("max",))),
        ("Only Min Emb", dict(bow=True, structural=True, modes=("min",))),
        ("All features", dict(bow=True, structural=True, modes=("avg", "max", "min"))),
    ]
)


@dataclass
class ConfusionCounts:
    """label -> [tp, fp, fn]"""

    counts: dict = field(default_factory=dict)

    def add(self, predicted, gold):
        for label in (predicted, gold):
            self.counts.setdefault(label, [0, 0, 0])
        if predicted == gold:
            self.counts[gold][0] += 1
        else:
            self.counts[predicted][1] += 1
            self.counts[gold][2] += 1

    def ensure(self, labels):
        for label in labels:
            self.counts.setdefault(label, [0, 0, 0])
        return self

    def merge(self, other):
        for label, (tp, fp, fn) in other.counts.items():
            c = self.counts.setdefault(label, [0, 0, 0])
            c[0] += tp
            c[1] += fp
            c[2] += fn
        return self

    def gold_support(self, label):
        tp, _, fn = self.counts.get(label, (0, 0, 0))
        return tp + fn


@dataclass
class F1Scores:
    per_label: dict
    macro: float
    undefined: list  # labels whose precision or recall had a zero denominator


def f1_scores(counts, labels=None):
    """Per-label F1 and their unweighted mean.

    A zero denominator in precision or recall makes that label's F1 zero and
    lists it in ``undefined``.
    """
    table = counts.counts if isinstance(counts, ConfusionCounts) else counts
    labels = list(table) if labels is None else list(labels)
    per = {}
    undefined = []
    for label in labels:
        tp, fp, fn = table.get(label, (0, 0, 0))
        if any(c < 0 for c in (tp, fp, fn)):
            raise ValueError(f"negative count for {label!r}")
        if tp + fp == 0 or tp + fn == 0:
            undefined.append(label)
            per[label] = 0.0
            continue
        p = tp / (tp + fp)
        r = tp / (tp + fn)
        per[label] = 0.0 if p + r == 0 else 2 * p * r / (p + r)
    macro = sum(per.values()) / len(per) if per else 0.0
    return F1Scores(per, macro, undefined)


def link_pairs(pred_links, gold_links):
    """Labelled ordered pairs ``(i, j, predicted, gold)`` for i != j, 1-based."""
    n = len(gold_links)
    if len(pred_links) != n:
        raise ValueError("prediction and gold lengths differ")
    out = []
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            if i == j:
                continue
            pred = LINK if pred_links[i - 1] == j else NO_LINK
            gold = LINK if gold_links[i - 1] == j else NO_LINK
            out.append((i, j, pred, gold))
    return out


def link_counts(pred_links, gold_links):
    counts = ConfusionCounts().ensure((LINK, NO_LINK))
    for _, _, pred, gold in link_pairs(pred_links, gold_links):
        counts.add(pred, gold)
    return counts


def type_counts(pred_types, gold_types, labels):
    counts = ConfusionCounts().ensure(labels)
    for p, g in zip(pred_types, gold_types):
        counts.add(p, g)
    return counts


@dataclass
class EvalReport:
    type_f1: dict
    type_macro_f1: float
    link_f1: float
    no_link_f1: float
    link_macro_f1: float
    n_examples: int
    n_components: int = 0
    link_accuracy: float = 0.0
    type_accuracy: float = 0.0
    undefined: list = field(default_factory=list)
    excluded_types: list = field(default_factory=list)
    bins: dict = None

    def to_json(self):
        out = OrderedDict(
            [
                ("n_examples", self.n_examples),
                ("n_components", self.n_components),
                ("type_macro_f1", self.type_macro_f1),
                ("type_f1", OrderedDict(self.type_f1)),
                ("link_macro_f1", self.link_macro_f1),
                ("link_f1", self.link_f1),
                ("no_link_f1", self.no_link_f1),
                ("link_accuracy", self.link_accuracy),
                ("type_accuracy", self.type_accuracy),
                ("undefined", list(self.undefined)),
                ("excluded_types", list(self.excluded_types)),
            ]
        )
        if self.bins is not None:
            out["bins"] = OrderedDict((k, v.to_json() if v is not None else None) for k, v in self.bins.items())
        return out


def dumps_report(report):
    obj = report.to_json() if hasattr(report, "to_json") else report
    return json.dumps(obj, indent=2) + "\n"


def evaluate_predictions(predictions, type_labels=None, exclude_absent_types=False):
    """Score ``[(example, Prediction), ...]``.

    ``Prediction.type_label`` holds class indices into ``type_labels``. When
    ``exclude_absent_types`` is set, types with no gold occurrence are left
    out of the type macro average.
    """
    lc = ConfusionCounts().ensure((LINK, NO_LINK))
    tc = ConfusionCounts().ensure(type_labels or ())
    n_comp = link_hits = type_hits = 0
    for ex, pred in predictions:
        lc.merge(link_counts(pred.link_index, ex.links))
        link_hits += sum(int(a == b) for a, b in zip(pred.link_index, ex.links))
        n_comp += len(ex)
        if type_labels is not None:
            pred_types = [type_labels[k] for k in pred.type_label]
            tc.merge(type_counts(pred_types, ex.types, type_labels))
            type_hits += sum(int(a == b) for a, b in zip(pred_types, ex.types))
    links = f1_scores(lc, (LINK, NO_LINK))
    labels = list(type_labels or ())
    excluded = []
    if exclude_absent_types:
        excluded = [t for t in labels if tc.gold_support(t) == 0]
    types = f1_scores(tc, labels)
    kept = [t for t in labels if t not in excluded]
    type_macro = sum(types.per_label[t] for t in kept) / len(kept) if kept else 0.0
    undefined = [f"type:{t}" for t in types.undefined] + [f"link:{t}" for t in links.undefined]
    return EvalReport(
        type_f1=types.per_label,
        type_macro_f1=type_macro,
        link_f1=links.per_label[LINK],
        no_link_f1=links.per_label[NO_LINK],
        link_macro_f1=links.macro,
        n_examples=len(predictions),
        n_components=n_comp,
        link_accuracy=link_hits / n_comp if n_comp else 0.0,
        type_accuracy=type_hits / n_comp if n_comp and type_labels is not None else 0.0,
        undefined=undefined,
        excluded_types=excluded,
    )


def bin_label(lo, hi):
    return f"{lo}<=len<{hi}"


def bin_by_length(predictions, type_labels=None, bins=DEFAULT_BINS):
    """Split predictions by component count into half-open bins and score each.

    Returns an ordered dict ``label -> EvalReport or None`` with a final
    ``"overflow"`` entry for examples outside every bin. Within a bin, types
    absent from the gold labels are excluded from the macro average.
    """
    bins = [tuple(b) for b in bins]
    for lo, hi in bins:
        if lo >= hi:
            raise ValueError(f"empty bin [{lo}, {hi})")
    ordered = sorted(bins)
    for (a_lo, a_hi), (b_lo, _) in zip(ordered, ordered[1:]):
        if b_lo < a_hi:
            raise ValueError("bins overlap")
    groups = OrderedDict((bin_label(lo, hi), []) for lo, hi in bins)
    groups["overflow"] = []
    for ex, pred in predictions:
        for lo, hi in bins:
            if lo <= len(ex) < hi:
                groups[bin_label(lo, hi)].append((ex, pred))
                break
        else:
            groups["overflow"].append((ex, pred))
    return OrderedDict(
        (k, evaluate_predictions(v, type_labels, exclude_absent_types=True) if v else None)
        for k, v in groups.items()
    )


def bin_counts(binned):
    return {k: (v.n_examples if v is not None else 0) for k, v in binned.items()}


def predict_corpus(examples, params, model_config, feature_config):
    from .features import example_matrix
    from .model import predict

    return [(ex, predict(example_matrix(ex, feature_config), params, model_config)) for ex in examples]


def evaluate(examples, params, model_config, feature_config, type_labels, bins=None):
    preds = predict_corpus(examples, params, model_config, feature_config)
    report = evaluate_predictions(preds, list(type_labels))
    if bins:
        report.bins = bin_by_length(preds, list(type_labels), bins)
    return report


def aggregate_reports(reports):
    """Mean of per-split metrics (cross-validation aggregation)."""
    if not reports:
        raise ValueError("nothing to aggregate")
    labels = list(reports[0].type_f1)
    mean = lambda xs: float(np.mean(xs))
    return EvalReport(
        type_f1={t: mean([r.type_f1.get(t, 0.0) for r in reports]) for t in labels},
        type_macro_f1=mean([r.type_macro_f1 for r in reports]),
        link_f1=mean([r.link_f1 for r in reports]),
        no_link_f1=mean([r.no_link_f1 for r in reports]),
        link_macro_f1=mean([r.link_macro_f1 for r in reports]),
        n_examples=sum(r.n_examples for r in reports),
        n_components=sum(r.n_components for r in reports),
        link_accuracy=mean([r.link_accuracy for r in reports]),
        type_accuracy=mean([r.type_accuracy for r in reports]),
        undefined=sorted({u for r in reports for u in r.undefined}),
    )


def format_table(report, type_labels=None):
    """Plain-text row in the column order Macro / per-type / Link Macro / Link / No Link."""
    labels = list(type_labels or report.type_f1)
    head = ["Type macro"] + [f"{t} f1" for t in labels] + ["Link macro", "Link f1", "No link f1"]
    vals = [report.type_macro_f1] + [report.type_f1.get(t, 0.0) for t in labels]
    vals += [report.link_macro_f1, report.link_f1, report.no_link_f1]
    return " | ".join(head) + "\n" + " | ".join(f"{v:.3f}".ljust(len(h)) for v, h in zip(vals, head)) + "\n"


@dataclass
class AblationRow:
    name: str
    feature_size: int
    layout: list
    report: EvalReport

    def to_json(self):
        return OrderedDict(
            [("name", self.name), ("feature_size", self.feature_size),
             ("layout", [list(x) for x in self.layout]), ("report", self.report.to_json())]
        )


def ablation_run(train_corpus, test_corpus, base_feature_config, model_config, train_config,
                 variants=TABLE3_VARIANTS, validation=None):
    """Train and score one model per feature variant with shared seeds."""
    from dataclasses import replace

    from .train import train

    rows = []
    for name, delta in variants.items():
        fc = base_feature_config.with_families(**delta)
        mc = replace(model_config, representation_size=fc.size)
        result = train(train_corpus, fc, mc, train_config, validation=validation)
        report = evaluate(test_corpus.examples, result.best_params, mc, fc, result.type_labels)
        rows.append(AblationRow(name, fc.size, fc.layout(), report))
    return rows


def run_split_manifest(corpus, manifest, build_feature_config, model_config, train_config):
    """Cross-validation over explicit splits.

    ``manifest`` is a list of ``{"train": [ids], "test": [ids]}``;
    ``build_feature_config(train_examples)`` makes the per-split features.
    Returns ``(per_split_reports, mean_report)``.
    """
    from dataclasses import replace

    from .train import train

    by_id = {ex.id: ex for ex in corpus.examples}
    reports = []
    for k, split in enumerate(manifest):
        missing = [i for i in list(split["train"]) + list(split["test"]) if i not in by_id]
        if missing:
            raise KeyError(f"split {k}: unknown example ids {missing[:5]}")
        train_part = corpus.subset([by_id[i] for i in split["train"]], role="train", split=k)
        test_part = [by_id[i] for i in split["test"]]
        fc = build_feature_config(train_part.examples)
        mc = replace(model_config, representation_size=fc.size)
        result = train(train_part, fc, mc, train_config)
        reports.append(evaluate(test_part, result.best_params, mc, fc, result.type_labels))
    return reports, aggregate_reports(reports)
