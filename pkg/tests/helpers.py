"""Shared fixtures and independent reference implementations for the tests.

The reference code here deliberately avoids the package: plain loops and
``math`` so a shared bug cannot hide in both sides of a comparison.
"""

import math

from argptr.data import ArgComponent, Corpus, Example

# Four components: AC1 is the claim, AC2 supports AC1, AC3 and AC4 support AC2.
RUNNING_LINKS = (1, 1, 2, 2)
RUNNING_TYPES = ("claim", "premise", "premise", "premise")
RUNNING_TOKENS = (
    ("we", "should", "attach", "more", "importance", "to", "cooperation"),
    ("competition", "alone", "rarely", "yields", "lasting", "results"),
    ("teams", "share", "ideas", "and", "skills"),
    ("people", "learn", "faster", "from", "each", "other"),
)


def running_example(ex_id="running"):
    comps = tuple(
        ArgComponent(tokens=toks, type_label=t, link_to=l, is_first_in_paragraph=(i == 0), paragraph_kind="body")
        for i, (toks, t, l) in enumerate(zip(RUNNING_TOKENS, RUNNING_TYPES, RUNNING_LINKS))
    )
    return Example(ex_id, comps, "pec_style")


def running_corpus():
    return Corpus([running_example()], ("claim", "premise"))


def make_example(links, types, ex_id="ex", tokens=None, corpus_tag="pec_style"):
    comps = []
    for i, (l, t) in enumerate(zip(links, types)):
        toks = tokens[i] if tokens else (f"tok{i}", t)
        comps.append(ArgComponent(tuple(toks), t, l, i == 0, "body"))
    return Example(ex_id, tuple(comps), corpus_tag)


# --- scalar oracles ------------------------------------------------------


def sig(x):
    return 1.0 / (1.0 + math.exp(-x))


def matvec(W, x):
    return [sum(W[r][c] * x[c] for c in range(len(x))) for r in range(len(W))]


def lstm_step_ref(x, h, c, Wx, Wh, b):
    """Gate order (input, forget, candidate, output), written out per unit."""
    H = len(h)
    z = [a + bb + cc for a, bb, cc in zip(matvec(Wx, x), matvec(Wh, h), b)]
    h_new, c_new = [], []
    for u in range(H):
        i = sig(z[u])
        f = sig(z[H + u])
        g = math.tanh(z[2 * H + u])
        o = sig(z[3 * H + u])
        cu = f * c[u] + i * g
        c_new.append(cu)
        h_new.append(o * math.tanh(cu))
    return h_new, c_new


def lstm_run_ref(xs, Wx, Wh, b, h0=None, c0=None):
    H = len(b) // 4
    h = list(h0) if h0 is not None else [0.0] * H
    c = list(c0) if c0 is not None else [0.0] * H
    out = []
    for x in xs:
        h, c = lstm_step_ref(x, h, c, Wx, Wh, b)
        out.append(h)
    return out, h, c


def pointer_ref(enc, d, W1, W2, v):
    w2d = matvec(W2, d)
    scores = []
    for e in enc:
        w1e = matvec(W1, e)
        scores.append(sum(vk * math.tanh(a + bq) for vk, a, bq in zip(v, w1e, w2d)))
    return scores


def softmax_ref(xs):
    m = max(xs)
    ex = [math.exp(x - m) for x in xs]
    s = sum(ex)
    return [e / s for e in ex]


def f1_oracle(pred, gold, label):
    """Per-label F1 straight from the confusion cells, zero on empty denominators."""
    tp = sum(1 for p, g in zip(pred, gold) if p == label and g == label)
    fp = sum(1 for p, g in zip(pred, gold) if p == label and g != label)
    fn = sum(1 for p, g in zip(pred, gold) if p != label and g == label)
    if tp + fp == 0 or tp + fn == 0:
        return 0.0
    p = tp / (tp + fp)
    r = tp / (tp + fn)
    return 0.0 if p + r == 0 else 2 * p * r / (p + r)
