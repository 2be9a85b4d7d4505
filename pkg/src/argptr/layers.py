"""Differentiable building blocks with hand-written backward passes.

Every ``*_forward`` returns its output together with a cache; the matching
``*_backward`` takes the upstream gradient and the cache and returns the
gradient with respect to the inputs plus a dict of parameter gradients keyed
like the parameter dataclass fields.

LSTM gate order inside the stacked weights is (input, forget, candidate,
output).
"""

from dataclasses import dataclass

import numpy as np

from .numerics import DimensionError, as_tensor, sigmoid

ACTIVATIONS = ("sigmoid", "none")


@dataclass
class FcParams:
    W: np.ndarray
    b: np.ndarray
    activation: str = "sigmoid"

    def __post_init__(self):
        if self.W.ndim != 2 or self.b.shape != (self.W.shape[0],):
            raise DimensionError(f"FC weight {self.W.shape} and bias {self.b.shape} disagree")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")


@dataclass
class LstmParams:
    Wx: np.ndarray  # (4h, k)
    Wh: np.ndarray  # (4h, h)
    b: np.ndarray  # (4h,)

    def __post_init__(self):
        four_h = self.Wh.shape[0]
        if (
            four_h % 4
            or self.Wh.shape != (four_h, four_h // 4)
            or self.Wx.ndim != 2
            or self.Wx.shape[0] != four_h
            or self.b.shape != (four_h,)
        ):
            raise DimensionError(
                f"inconsistent LSTM shapes Wx={self.Wx.shape} Wh={self.Wh.shape} b={self.b.shape}"
            )

    @property
    def hidden_size(self):
        return self.Wh.shape[1]

    @property
    def input_size(self):
        return self.Wx.shape[1]


@dataclass
class AttentionParams:
    W1: np.ndarray  # (a, e_dim)
    W2: np.ndarray  # (a, d_dim)
    v: np.ndarray  # (a,)

    def __post_init__(self):
        a = self.W1.shape[0]
        if self.W2.shape[0] != a or self.v.shape != (a,):
            raise DimensionError(
                f"attention shapes W1={self.W1.shape} W2={self.W2.shape} v={self.v.shape} disagree"
            )


# --- fully connected -------------------------------------------------------


def fc_forward(x, p):
    """Apply ``activation(W x + b)`` to a vector or to each row of a matrix."""
    x = as_tensor(x)
    if x.shape[-1] != p.W.shape[1]:
        raise DimensionError(f"FC input has size {x.shape[-1]}, weight expects {p.W.shape[1]}")
    z = x @ p.W.T + p.b
    y = sigmoid(z) if p.activation == "sigmoid" else z
    return y, (x, y, p)


def fc_backward(dy, cache):
    x, y, p = cache
    dz = dy * y * (1.0 - y) if p.activation == "sigmoid" else dy
    if x.ndim == 1:
        dW = np.outer(dz, x)
        db = dz.copy()
    else:
        dW = dz.T @ x
        db = dz.sum(axis=0)
    dx = dz @ p.W
    return dx, {"W": dW, "b": db}


# --- LSTM ------------------------------------------------------------------


def lstm_step(x, h_prev, c_prev, p):
    """One LSTM step. Returns ``(h_new, c_new)``."""
    h = p.hidden_size
    if np.shape(x) != (p.input_size,):
        raise DimensionError(f"LSTM input has shape {np.shape(x)}, expected ({p.input_size},)")
    if np.shape(h_prev) != (h,) or np.shape(c_prev) != (h,):
        raise DimensionError(
            f"LSTM state shapes {np.shape(h_prev)}, {np.shape(c_prev)} do not match hidden size {h}"
        )
    x = as_tensor(x)
    h_new, c_new, _ = _lstm_step(p.Wx @ x, h_prev, c_prev, p)
    return h_new, c_new


def _lstm_step(xproj, h_prev, c_prev, p):
    h = p.hidden_size
    z = xproj + p.Wh @ h_prev + p.b
    i = sigmoid(z[:h])
    f = sigmoid(z[h : 2 * h])
    g = np.tanh(z[2 * h : 3 * h])
    o = sigmoid(z[3 * h :])
    c = f * c_prev + i * g
    tc = np.tanh(c)
    h_new = o * tc
    return h_new, c, (h_prev, c_prev, i, f, g, o, tc)


def lstm_forward(xs, p, h0=None, c0=None):
    """Run an LSTM over the rows of ``xs`` (shape (n, k)).

    Returns the hidden states (n, h), the final cell state and a cache.
    """
    xs = as_tensor(xs)
    if xs.ndim != 2 or xs.shape[0] == 0:
        raise ValueError("LSTM needs a nonempty (n, k) input sequence")
    if xs.shape[1] != p.input_size:
        raise DimensionError(f"LSTM input size {xs.shape[1]}, expected {p.input_size}")
    n, h = xs.shape[0], p.hidden_size
    h_prev = np.zeros(h) if h0 is None else h0
    c_prev = np.zeros(h) if c0 is None else c0
    xproj = xs @ p.Wx.T
    hs = np.empty((n, h), dtype=xproj.dtype)
    steps = []
    for t in range(n):
        h_prev, c_prev, step_cache = _lstm_step(xproj[t], h_prev, c_prev, p)
        hs[t] = h_prev
        steps.append(step_cache)
    return hs, c_prev, (xs, hs, steps, p)


def lstm_backward(dhs, cache, dh_last=None, dc_last=None):
    """Backpropagate through time.

    ``dhs`` is the gradient on every emitted hidden state; ``dh_last`` and
    ``dc_last`` are extra gradients on the final state. Returns
    ``(dxs, grads, dh0, dc0)``.
    """
    xs, hs, steps, p = cache
    n, h = hs.shape
    dz_all = np.empty((n, 4 * h))
    dh_next = np.zeros(h) if dh_last is None else dh_last.copy()
    dc_next = np.zeros(h) if dc_last is None else dc_last.copy()
    for t in range(n - 1, -1, -1):
        h_prev, c_prev, i, f, g, o, tc = steps[t]
        dh = dhs[t] + dh_next
        do = dh * tc
        dc = dc_next + dh * o * (1.0 - tc * tc)
        di = dc * g
        dg = dc * i
        df = dc * c_prev
        dz = dz_all[t]
        dz[:h] = di * i * (1.0 - i)
        dz[h : 2 * h] = df * f * (1.0 - f)
        dz[2 * h : 3 * h] = dg * (1.0 - g * g)
        dz[3 * h :] = do * o * (1.0 - o)
        dh_next = p.Wh.T @ dz
        dc_next = dc * f
    grads = {
        "Wx": dz_all.T @ xs,
        "Wh": dz_all.T @ np.vstack([s[0] for s in steps]),
        "b": dz_all.sum(axis=0),
    }
    dxs = dz_all @ p.Wx
    return dxs, grads, dh_next, dc_next


def blstm_encode(xs, fwd, bwd):
    """Bidirectional encoding; row i is [forward h_i, backward h at input i]."""
    xs = as_tensor(xs)
    if xs.ndim != 2 or xs.shape[0] == 0:
        raise ValueError("cannot encode an empty sequence")
    hf, cf, fcache = lstm_forward(xs, fwd)
    hb_rev, _, bcache = lstm_forward(xs[::-1], bwd)
    enc = np.hstack([hf, hb_rev[::-1]])
    return enc, (fcache, bcache, fwd.hidden_size, hf[-1], cf)


def blstm_backward(denc, cache, dh_last=None, dc_last=None):
    """Backward of :func:`blstm_encode`.

    ``dh_last``/``dc_last`` are gradients on the final forward state, used
    when the decoder is initialised from the encoder.
    """
    fcache, bcache, h, _, _ = cache
    dxf, gf, _, _ = lstm_backward(denc[:, :h], fcache, dh_last, dc_last)
    dxb_rev, gb, _, _ = lstm_backward(denc[::-1, h:], bcache)
    return dxf + dxb_rev[::-1], gf, gb


# --- pointer attention -----------------------------------------------------


def pointer_scores(enc, queries, p):
    """Score every encoder position for every query.

    ``enc`` is (n, e_dim); ``queries`` is (m, d_dim) or a single (d_dim,)
    vector. Entry [i, j] is ``v . tanh(W1 enc[j] + W2 queries[i])``.
    """
    enc = as_tensor(enc)
    q = as_tensor(queries)
    single = q.ndim == 1
    if single:
        q = q[None, :]
    if enc.ndim != 2 or enc.shape[0] == 0:
        raise ValueError("attention needs a nonempty encoder sequence")
    if enc.shape[1] != p.W1.shape[1] or q.shape[1] != p.W2.shape[1]:
        raise DimensionError(
            f"attention inputs enc {enc.shape}, query {q.shape} do not match "
            f"W1 {p.W1.shape}, W2 {p.W2.shape}"
        )
    pe = enc @ p.W1.T  # (n, a)
    pq = q @ p.W2.T  # (m, a)
    t = np.tanh(pq[:, None, :] + pe[None, :, :])  # (m, n, a)
    u = t @ p.v
    cache = (enc, q, t, p, single)
    return (u[0] if single else u), cache


def pointer_backward(du, cache):
    """Returns ``(denc, dqueries, grads)``."""
    enc, q, t, p, single = cache
    if single:
        du = du[None, :]
    dv = np.einsum("ij,ija->a", du, t)
    dpre = du[:, :, None] * p.v * (1.0 - t * t)
    dpe = dpre.sum(axis=0)  # (n, a)
    dpq = dpre.sum(axis=1)  # (m, a)
    grads = {"W1": dpe.T @ enc, "W2": dpq.T @ q, "v": dv}
    denc = dpe @ p.W1
    dq = dpq @ p.W2
    return denc, (dq[0] if single else dq), grads
