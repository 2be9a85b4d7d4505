"""Dense double-precision helpers shared by every layer.

Tensors are plain ``numpy.ndarray`` objects of dtype float64 stored in
C (row-major) order. The random generator is numpy's PCG64 bit generator,
which yields the same stream for a given seed on every platform.
"""

import math

import numpy as np

RNG_ALGORITHM = "PCG64"


class DimensionError(ValueError):
    """Raised when tensor shapes are incompatible."""


class GradCheckError(RuntimeError):
    """Raised when a loss evaluated during gradient checking is not finite."""


def make_rng(seed):
    if seed < 0 or seed >= 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return np.random.Generator(np.random.PCG64(seed))


def float_dtype(x):
    """float64 unless ``x`` already carries extended precision."""
    dt = np.asarray(x).dtype
    return np.longdouble if dt == np.longdouble else np.float64


def as_tensor(x):
    return np.ascontiguousarray(x, dtype=float_dtype(x))


def matmul(a, b):
    a = as_tensor(a)
    b = as_tensor(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"cannot multiply shapes {a.shape} and {b.shape}")
    return a @ b


def softmax(v, axis=-1):
    v = as_tensor(v)
    if v.size == 0:
        raise ValueError("softmax of an empty vector")
    shifted = v - v.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


def log_softmax(v, axis=-1):
    v = as_tensor(v)
    if v.size == 0:
        raise ValueError("log_softmax of an empty vector")
    shifted = v - v.max(axis=axis, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))


def sigmoid(x):
    x = np.asarray(x, dtype=float_dtype(x))
    # Split by sign so exp never overflows.
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def tanh_op(x):
    return np.tanh(as_tensor(x))


def init_param(shape, scheme, rng=None):
    """Create a parameter tensor.

    ``uniform-scaled`` draws from U(-s, s) with s = sqrt(6 / (fan_in + fan_out)),
    where for a matrix of shape (out, in) fan_out = out and fan_in = in; a
    vector uses its length for both. ``zeros`` is used for biases.
    """
    shape = tuple(int(d) for d in shape)
    if not shape or any(d <= 0 for d in shape):
        raise ValueError(f"all dimensions must be positive, got {shape}")
    if scheme == "zeros":
        return np.zeros(shape)
    if scheme != "uniform-scaled":
        raise ValueError(f"unknown init scheme {scheme!r}")
    if rng is None:
        raise ValueError("uniform-scaled initialization needs an rng")
    fan_out = shape[0]
    fan_in = shape[1] if len(shape) > 1 else shape[0]
    s = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-s, s, size=shape)


def dropout_mask(shape, p_drop, rng):
    """Inverted-dropout mask: 0 with probability ``p_drop``, else 1 / (1 - p_drop)."""
    return (rng.random(shape) >= p_drop) / (1.0 - p_drop)


def grad_check(f, params, eps=1e-5, names=None, loss_fn=None, fd_dtype=None):
    """Compare analytic gradients to central differences.

    ``f(params)`` must return ``(loss, grads)`` where ``grads`` maps the same
    names as ``params``. Every entry of every parameter is perturbed in place
    and restored. ``loss_fn(params)``, when given, is a cheaper loss-only
    evaluation used for the perturbed points. ``fd_dtype=np.longdouble``
    evaluates the perturbed points on an extended-precision copy of the
    parameters (diagnostic only; the default is float64 throughout).
    Returns the maximum over entries of
    |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    loss, grads = f(params)
    if loss_fn is None:
        loss_fn = lambda p: f(p)[0]
    if not np.isfinite(loss):
        raise GradCheckError(f"loss is not finite: {loss}")
    probe = params
    if fd_dtype is not None:
        probe = type(params)({k: np.ascontiguousarray(v, dtype=fd_dtype) for k, v in params.items()})
    worst = 0.0
    for name in names or sorted(params):
        theta = params[name]
        analytic = np.asarray(grads[name], dtype=np.float64)
        if analytic.shape != theta.shape:
            raise DimensionError(
                f"gradient for {name} has shape {analytic.shape}, parameter has {theta.shape}"
            )
        if not theta.flags.c_contiguous:
            raise ValueError(f"parameter {name} must be C-contiguous")
        flat = probe[name].reshape(-1)
        aflat = analytic.reshape(-1)
        for k in range(flat.size):
            orig = flat[k]
            flat[k] = orig + eps
            plus = loss_fn(probe)
            flat[k] = orig - eps
            minus = loss_fn(probe)
            flat[k] = orig
            if not (np.isfinite(plus) and np.isfinite(minus)):
                raise GradCheckError(f"loss is not finite while perturbing {name}[{k}]")
            numeric = float((plus - minus) / (2.0 * eps))
            err = abs(aflat[k] - numeric) / max(1e-8, abs(aflat[k]) + abs(numeric))
            worst = max(worst, err)
    return worst
