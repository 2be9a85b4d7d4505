"""Corpus data model, JSONL reader/writer, structure checks and synthetic data.

One example per line::

    {"id": str, "corpus_tag": "pec_style" | "mtc_style",
     "components": [{"tokens": [str], "type": str, "link_to": int,
                     "first_in_paragraph": bool,
                     "paragraph_kind": "opening" | "body" | "closing"}]}

``link_to`` is 1-based and a component linking to itself is a root.
"""

import json
import logging
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)

CORPUS_TAGS = ("pec_style", "mtc_style")
PARAGRAPH_KINDS = ("opening", "body", "closing")
# Preferred ordering of well-known labels; anything else sorts after these.
KNOWN_TYPES = ("major_claim", "claim", "premise")

_EXAMPLE_KEYS = {"id", "corpus_tag", "components"}
_COMPONENT_KEYS = {"tokens", "type", "link_to", "first_in_paragraph", "paragraph_kind"}


class CorpusError(ValueError):
    """A corpus file or example violates the schema or the structure rules."""


@dataclass(frozen=True)
class ArgComponent:
    tokens: tuple
    type_label: str
    link_to: int
    is_first_in_paragraph: bool = False
    paragraph_kind: str = "opening"

    def to_json(self):
        return {
            "first_in_paragraph": self.is_first_in_paragraph,
            "link_to": self.link_to,
            "paragraph_kind": self.paragraph_kind,
            "tokens": list(self.tokens),
            "type": self.type_label,
        }


@dataclass(frozen=True)
class Example:
    id: str
    components: tuple
    corpus_tag: str = "pec_style"

    def __len__(self):
        return len(self.components)

    @property
    def links(self):
        return [c.link_to for c in self.components]

    @property
    def types(self):
        return [c.type_label for c in self.components]

    def to_json(self):
        return {
            "components": [c.to_json() for c in self.components],
            "corpus_tag": self.corpus_tag,
            "id": self.id,
        }


@dataclass
class Corpus:
    examples: list
    type_set: tuple
    split: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.examples)

    def __iter__(self):
        return iter(self.examples)

    def subset(self, examples, **split):
        return Corpus(list(examples), self.type_set, dict(split))


@dataclass
class StructureReport:
    is_forest: bool
    root_count: int
    cycle_members: list
    out_of_range: list

    def to_json(self):
        return {
            "cycle_members": self.cycle_members,
            "is_forest": self.is_forest,
            "out_of_range": self.out_of_range,
            "root_count": self.root_count,
        }


def order_types(labels):
    labels = set(labels)
    known = [t for t in KNOWN_TYPES if t in labels]
    return tuple(known + sorted(labels - set(KNOWN_TYPES)))


def validate_structure(links):
    """Report on the link structure given as 1-based outgoing indices.

    Self-links are roots. Out-of-range indices are listed (1-based positions)
    and ignored for cycle detection.
    """
    n = len(links)
    out_of_range = [i + 1 for i, t in enumerate(links) if not 1 <= t <= n]
    roots = sum(1 for i, t in enumerate(links) if t == i + 1)
    # 0 unvisited, 1 on current path, 2 done
    state = [0] * n
    in_cycle = set()
    for start in range(n):
        path = []
        node = start
        while 0 <= node < n and state[node] == 0:
            state[node] = 1
            path.append(node)
            nxt = links[node] - 1
            if nxt == node or not 0 <= nxt < n:
                node = -1
                break
            node = nxt
        if 0 <= node < n and state[node] == 1:
            in_cycle.update(path[path.index(node):])
        for p in path:
            state[p] = 2
    cycle = sorted(i + 1 for i in in_cycle)
    return StructureReport(
        is_forest=not cycle and not out_of_range,
        root_count=roots,
        cycle_members=cycle,
        out_of_range=out_of_range,
    )


def target_sequence(example):
    return [c.link_to for c in example.components]


def check_example(example):
    """Raise :class:`CorpusError` if the example breaks a structural rule."""
    if not example.components:
        raise CorpusError(f"example {example.id!r}: no components")
    if example.corpus_tag not in CORPUS_TAGS:
        raise CorpusError(f"example {example.id!r}: unknown corpus_tag {example.corpus_tag!r}")
    for k, c in enumerate(example.components, start=1):
        if not c.tokens:
            raise CorpusError(f"example {example.id!r}: component {k} has no tokens")
        if c.paragraph_kind not in PARAGRAPH_KINDS:
            raise CorpusError(
                f"example {example.id!r}: component {k} has paragraph_kind {c.paragraph_kind!r}"
            )
    report = validate_structure(example.links)
    if report.out_of_range:
        raise CorpusError(
            f"example {example.id!r}: link_to out of range [1, {len(example)}] "
            f"for components {report.out_of_range}"
        )
    if report.cycle_members:
        raise CorpusError(f"example {example.id!r}: cycle among components {report.cycle_members}")
    if example.corpus_tag == "mtc_style" and report.root_count != 1:
        raise CorpusError(
            f"example {example.id!r}: mtc_style needs exactly one root, found {report.root_count}"
        )
    return report


def _component_from_json(obj, ex_id, k):
    if not isinstance(obj, dict):
        raise CorpusError(f"example {ex_id!r}: component {k} is not an object")
    extra = set(obj) - _COMPONENT_KEYS
    missing = _COMPONENT_KEYS - set(obj)
    if extra or missing:
        raise CorpusError(
            f"example {ex_id!r}: component {k} has unknown fields {sorted(extra)} "
            f"or missing fields {sorted(missing)}"
        )
    tokens = obj["tokens"]
    if not isinstance(tokens, list) or not all(isinstance(t, str) for t in tokens):
        raise CorpusError(f"example {ex_id!r}: component {k} tokens must be a list of strings")
    link = obj["link_to"]
    if not isinstance(link, int) or isinstance(link, bool):
        raise CorpusError(f"example {ex_id!r}: component {k} link_to must be an integer")
    if not isinstance(obj["first_in_paragraph"], bool):
        raise CorpusError(f"example {ex_id!r}: component {k} first_in_paragraph must be boolean")
    if not isinstance(obj["type"], str):
        raise CorpusError(f"example {ex_id!r}: component {k} type must be a string")
    return ArgComponent(
        tokens=tuple(tokens),
        type_label=obj["type"],
        link_to=link,
        is_first_in_paragraph=obj["first_in_paragraph"],
        paragraph_kind=obj["paragraph_kind"],
    )


def example_from_json(obj, lineno=None):
    where = f"line {lineno}: " if lineno is not None else ""
    if not isinstance(obj, dict):
        raise CorpusError(f"{where}expected a JSON object")
    extra = set(obj) - _EXAMPLE_KEYS
    missing = _EXAMPLE_KEYS - set(obj)
    if extra or missing:
        raise CorpusError(
            f"{where}unknown fields {sorted(extra)} or missing fields {sorted(missing)}"
        )
    ex_id = obj["id"]
    if not isinstance(ex_id, str):
        raise CorpusError(f"{where}id must be a string")
    comps = obj["components"]
    if not isinstance(comps, list):
        raise CorpusError(f"{where}example {ex_id!r}: components must be a list")
    ex = Example(
        id=ex_id,
        components=tuple(_component_from_json(c, ex_id, k) for k, c in enumerate(comps, 1)),
        corpus_tag=obj["corpus_tag"],
    )
    try:
        check_example(ex)
    except CorpusError as err:
        raise CorpusError(f"{where}{err}") from None
    return ex


def parse_corpus(lines, type_set=None):
    examples = []
    seen = set()
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as err:
            raise CorpusError(f"line {lineno}: malformed JSON ({err.msg})") from None
        ex = example_from_json(obj, lineno)
        if ex.id in seen:
            raise CorpusError(f"line {lineno}: duplicate example id {ex.id!r}")
        seen.add(ex.id)
        examples.append(ex)
    if not examples:
        raise CorpusError("corpus is empty")
    labels = {c.type_label for ex in examples for c in ex.components}
    if type_set is None:
        type_set = order_types(labels)
    else:
        type_set = tuple(type_set)
        unknown = labels - set(type_set)
        if unknown:
            raise CorpusError(f"type labels {sorted(unknown)} not in declared set {list(type_set)}")
    return Corpus(examples, type_set)


def load_corpus(path, type_set=None):
    with open(path, encoding="utf-8") as fh:
        return parse_corpus(fh, type_set)


def dumps_example(example):
    return json.dumps(example.to_json(), sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def atomic_write(path, data):
    """Write text or bytes to ``path`` via a temporary file and rename."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"encoding": "utf-8"})) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_corpus(corpus, path):
    examples = corpus.examples if isinstance(corpus, Corpus) else corpus
    atomic_write(path, "".join(dumps_example(ex) + "\n" for ex in examples))


def split_train_validation(corpus, fraction=0.10, rng=None):
    """Seeded example-level split; at least one example goes to validation."""
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"validation fraction must be in (0, 1), got {fraction}")
    n = len(corpus)
    if n < 2:
        raise ValueError("need at least two examples to split off a validation set")
    n_val = int(round(fraction * n))
    if n_val < 1:
        logger.warning("corpus of %d examples too small for fraction %.3f; using 1", n, fraction)
        n_val = 1
    if rng is None:
        rng = np.random.default_rng(0)
    order = rng.permutation(n)
    val_idx = sorted(order[:n_val].tolist())
    val_set = set(val_idx)
    train = [ex for i, ex in enumerate(corpus.examples) if i not in val_set]
    val = [corpus.examples[i] for i in val_idx]
    return corpus.subset(train, role="train"), corpus.subset(val, role="validation")


# --- synthetic corpora -----------------------------------------------------

_VOCAB_PER_TYPE = 40
_SHARED_VOCAB = 60


def _type_vocab(type_label):
    return [f"{type_label[:3]}{k}" for k in range(_VOCAB_PER_TYPE)]


def synth_corpus(
    seed,
    n_examples,
    min_acs,
    max_acs,
    type_set=("major_claim", "claim", "premise"),
    corpus_tag="pec_style",
    attachment="uniform",
    tokens_per_ac=(4, 9),
    signal=0.6,
):
    """Generate a seeded corpus of random forests.

    Roots get a claim-like type (any label but the last; the first root of
    a 3-type PEC-style example is the first label) and every other
    component gets the last label. Tokens mix a per-type vocabulary (with
    probability ``signal``) and a shared one, so types are recoverable from
    bag-of-words features.

    ``attachment="uniform"`` links each non-root to a uniformly chosen
    other component of the same tree, earlier or later in the text.
    ``attachment="typed"`` links each non-root to its nearest root, making
    links predictable from types.
    """
    if not 1 <= min_acs <= max_acs:
        raise ValueError(f"need 1 <= min_acs <= max_acs, got {min_acs}, {max_acs}")
    if n_examples < 1:
        raise ValueError("n_examples must be positive")
    if corpus_tag not in CORPUS_TAGS:
        raise ValueError(f"unknown corpus_tag {corpus_tag!r}")
    if attachment not in ("uniform", "typed"):
        raise ValueError(f"unknown attachment {attachment!r}")
    type_set = tuple(type_set)
    if len(type_set) < 2:
        raise ValueError("need at least two types")
    rng = np.random.default_rng(seed)
    premise = type_set[-1]
    claim_like = type_set[:-1]
    shared = [f"w{k}" for k in range(_SHARED_VOCAB)]
    vocab = {t: _type_vocab(t) for t in type_set}

    examples = []
    for e in range(n_examples):
        n = int(rng.integers(min_acs, max_acs + 1))
        links = _sample_forest(rng, n, corpus_tag, attachment)
        roots = [i for i in range(n) if links[i] == i + 1]
        kind = "opening" if corpus_tag == "mtc_style" else PARAGRAPH_KINDS[int(rng.integers(3))]
        comps = []
        for i in range(n):
            if i in roots:
                if corpus_tag == "pec_style" and len(claim_like) > 1 and i != roots[0]:
                    label = claim_like[1 + int(rng.integers(len(claim_like) - 1))]
                elif corpus_tag == "pec_style":
                    label = claim_like[0]
                else:
                    label = claim_like[int(rng.integers(len(claim_like)))]
            else:
                label = premise
            n_tok = int(rng.integers(tokens_per_ac[0], tokens_per_ac[1] + 1))
            toks = []
            for _ in range(n_tok):
                pool = vocab[label] if rng.random() < signal else shared
                toks.append(pool[int(rng.integers(len(pool)))])
            comps.append(ArgComponent(tuple(toks), label, links[i], i == 0, kind))
        components = tuple(comps)
        examples.append(Example(f"synth-{seed}-{e:05d}", components, corpus_tag))
    return Corpus(examples, type_set)


def _sample_forest(rng, n, corpus_tag, attachment):
    if n == 1:
        return [1]
    if corpus_tag == "mtc_style":
        n_roots = 1
    else:
        n_roots = int(rng.integers(1, max(1, n // 3) + 1))
    roots = sorted(rng.choice(n, size=n_roots, replace=False).tolist())
    links = [0] * n
    for r in roots:
        links[r] = r + 1
    others = [i for i in range(n) if i not in roots]
    if attachment == "typed":
        for i in others:
            nearest = min(roots, key=lambda r: (abs(r - i), r > i))
            links[i] = nearest + 1
        return links
    # Grow trees by attaching each remaining node to a random already-placed node.
    placed = list(roots)
    for i in rng.permutation(others).tolist():
        parent = placed[int(rng.integers(len(placed)))]
        links[i] = parent + 1
        placed.append(i)
    return links
