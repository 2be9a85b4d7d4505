import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from argptr.numerics import (
    DimensionError,
    GradCheckError,
    grad_check,
    init_param,
    make_rng,
    matmul,
    sigmoid,
    softmax,
    tanh_op,
)

finite = st.floats(-50, 50, allow_nan=False, allow_infinity=False)


def test_matmul_identity():
    assert np.array_equal(matmul([[1, 0], [0, 1]], [[3], [4]]), [[3], [4]])


def test_matmul_against_triple_loop():
    a = [[1, 2], [3, 4]]
    b = [[5], [6]]
    ref = [[sum(a[i][k] * b[k][j] for k in range(2)) for j in range(1)] for i in range(2)]
    assert ref == [[17], [39]]
    assert np.array_equal(matmul(a, b), ref)


def test_matmul_mismatch_names_both_shapes():
    with pytest.raises(DimensionError) as err:
        matmul(np.ones((2, 3)), np.ones((2, 2)))
    assert "(2, 3)" in str(err.value) and "(2, 2)" in str(err.value)


def test_matmul_associative():
    rng = np.random.default_rng(0)
    a, b, c = (rng.normal(size=(4, 4)) for _ in range(3))
    assert np.allclose(matmul(matmul(a, b), c), matmul(a, matmul(b, c)), atol=1e-9, rtol=0)


def test_softmax_fixed_cases():
    assert np.allclose(softmax([0.0, 0.0]), [0.5, 0.5])
    for c in (-7.0, 0.0, 3.5, 700.0):
        assert np.allclose(softmax([c] * 4), [0.25] * 4, atol=1e-15)


def test_softmax_against_exp_normalize():
    ex = [math.exp(1), math.exp(2), math.exp(3)]
    ref = [e / sum(ex) for e in ex]
    assert np.allclose(softmax([1.0, 2.0, 3.0]), ref, atol=1e-15, rtol=0)


def test_softmax_empty():
    with pytest.raises(ValueError):
        softmax([])


@given(arrays(np.float64, st.integers(1, 20), elements=finite), finite)
def test_softmax_sum_and_shift(v, c):
    p = softmax(v)
    assert abs(p.sum() - 1.0) <= 1e-12
    q = softmax(v + c)
    assert np.argmax(p) == np.argmax(q)
    assert np.max(np.abs(p - q)) <= 1e-12


def test_sigmoid_tanh():
    assert sigmoid(0.0) == 0.5
    assert tanh_op(0.0) == 0.0
    assert sigmoid(2.0) == pytest.approx(1.0 / (1.0 + math.exp(-2.0)), abs=1e-15)
    # no overflow warnings at the extremes
    with np.errstate(over="raise"):
        assert sigmoid(np.array([-1000.0, 1000.0])).tolist() == [0.0, 1.0]


def test_init_param():
    assert init_param((3,), "zeros").tolist() == [0.0, 0.0, 0.0]
    a = init_param((2, 2), "uniform-scaled", make_rng(42))
    s = math.sqrt(6.0 / 4)
    assert np.all(np.abs(a) < s)
    assert np.array_equal(a, init_param((2, 2), "uniform-scaled", make_rng(42)))
    with pytest.raises(ValueError):
        init_param((0, 3), "zeros")
    with pytest.raises(ValueError):
        init_param((2,), "gaussian", make_rng(0))


def test_rng_streams_reproducible():
    assert np.array_equal(make_rng(5).random(50), make_rng(5).random(50))
    assert not np.array_equal(make_rng(5).random(50), make_rng(6).random(50))


def _quadratic(p):
    th = p["theta"]
    return float(np.sum(th**2)), {"theta": 2 * th}


def test_grad_check_quadratic():
    assert grad_check(_quadratic, {"theta": np.array([3.0])}) <= 1e-9


def test_grad_check_catches_doubled_gradient():
    def bad(p):
        loss, g = _quadratic(p)
        return loss, {"theta": 2 * g["theta"]}

    err = grad_check(bad, {"theta": np.array([3.0, -1.5, 0.7])})
    assert err == pytest.approx(1.0 / 3.0, abs=1e-6)


def test_grad_check_restores_params():
    p = {"theta": np.array([1.0, 2.0])}
    grad_check(_quadratic, p)
    assert p["theta"].tolist() == [1.0, 2.0]


def test_grad_check_nonfinite():
    with pytest.raises(GradCheckError):
        grad_check(lambda p: (float("nan"), {"theta": p["theta"]}), {"theta": np.array([1.0])})


@settings(max_examples=25, deadline=None)
@given(arrays(np.float64, st.integers(1, 6), elements=st.floats(-3, 3)))
def test_grad_check_exp_property(theta):
    f = lambda p: (float(np.sum(np.exp(p["t"]))), {"t": np.exp(p["t"])})
    assert grad_check(f, {"t": theta.copy()}) <= 1e-6
