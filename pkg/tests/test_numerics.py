import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from binae.errors import DimensionError
from binae.numerics import make_rng, matmul, rng_uniform, softmax


def naive_matmul(a, b):
    out = np.zeros((a.shape[0], b.shape[1]))
    for i in range(a.shape[0]):
        for j in range(b.shape[1]):
            s = 0.0
            for t in range(a.shape[1]):
                s += a[i, t] * b[t, j]
            out[i, j] = s
    return out


def test_matmul_identity_and_scalar(rng):
    m = rng.standard_normal((3, 4))
    assert np.array_equal(matmul(np.eye(3), m), m)
    assert matmul([[2.0]], [[3.0]])[0, 0] == 6.0


def test_matmul_matches_naive_loop(rng):
    a, b = rng.standard_normal((4, 5)), rng.standard_normal((5, 2))
    np.testing.assert_allclose(matmul(a, b), naive_matmul(a, b), rtol=1e-14, atol=1e-14)
    assert matmul(a, b).shape == (4, 2)


def test_matmul_shape_mismatch():
    with pytest.raises(DimensionError):
        matmul(np.ones((2, 3)), np.ones((2, 3)))


def test_matmul_associative(rng):
    for _ in range(20):
        a, b, c = rng.standard_normal((3, 4)), rng.standard_normal((4, 5)), rng.standard_normal((5, 2))
        left, right = matmul(matmul(a, b), c), matmul(a, matmul(b, c))
        assert np.max(np.abs(left - right)) <= 1e-9 * np.max(np.abs(left))


def test_softmax_examples():
    np.testing.assert_allclose(softmax(np.zeros(16)), np.full(16, 1 / 16), rtol=0, atol=1e-15)
    np.testing.assert_allclose(softmax([0.0, np.log(3.0)]), [0.25, 0.75], rtol=0, atol=1e-15)
    big = softmax([0.0, 1000.0, -5.0])
    assert np.isfinite(big).all() and big[1] == pytest.approx(1.0, abs=1e-15)


finite = st.floats(-50, 50, allow_nan=False, allow_infinity=False)


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, st.integers(1, 20), elements=finite), finite)
def test_softmax_shift_invariant_and_normalized(v, c):
    s = softmax(v)
    assert abs(s.sum() - 1.0) <= 1e-12
    assert np.all((s >= 0) & (s <= 1))
    np.testing.assert_allclose(softmax(v + c), s, rtol=0, atol=1e-12)


def test_rng_uniform_contract():
    r = make_rng(1, "test")
    assert rng_uniform(r, 0.08, 0.08) == 0.08
    with pytest.raises(ValueError):
        rng_uniform(r, 0.2, 0.1)
    draws = [rng_uniform(r, 0.06, 0.1) for _ in range(1000)]
    assert all(0.06 <= d < 0.1 for d in draws)


def test_rng_uniform_mean():
    r = make_rng(2, "test")
    draws = r.uniform(0.0, 1.0, size=10 ** 6)
    assert abs(draws.mean() - 0.5) < 0.002
    r1, r2 = make_rng(9, "test"), make_rng(9, "test")
    assert [rng_uniform(r1, 0, 1) for _ in range(5)] == [rng_uniform(r2, 0, 1) for _ in range(5)]


def test_same_seed_same_stream_and_purposes_differ():
    a = make_rng(7, "data").random(50)
    b = make_rng(7, "data").random(50)
    assert np.array_equal(a, b)
    c = make_rng(7, "channel").random(50)
    d = make_rng(7, "init").random(50)
    assert not np.array_equal(a, c) and not np.array_equal(c, d)
    assert not np.array_equal(make_rng(7, "eval", 0).random(5), make_rng(7, "eval", 1).random(5))


def test_unknown_purpose():
    with pytest.raises(ValueError):
        make_rng(0, "bogus")
