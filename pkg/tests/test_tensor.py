import math

import numpy as np
import pytest
from conftest import naive_conv2d, naive_max_pool
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from flamedet.errors import ShapeError
from flamedet.tensor import (
    activation,
    batch_norm,
    concat_channels,
    conv2d,
    gelu,
    max_pool2d,
    sigmoid,
    silu,
    split_channels,
    upsample_nearest2x,
)


def test_conv_pointwise_scaling():
    out = conv2d(np.ones((1, 1, 3, 3)), np.full((1, 1, 1, 1), 2.0))
    assert out.shape == (1, 1, 3, 3)
    assert np.all(out == 2.0)


def test_conv_sums_window():
    x = np.array([[1, 2], [3, 4]], np.float32).reshape(1, 1, 2, 2)
    assert conv2d(x, np.ones((1, 1, 2, 2))).tolist() == [[[[10.0]]]]


def test_conv_matches_naive_strided(rng):
    x = rng.uniform(-1, 1, (1, 3, 8, 8)).astype(np.float32)
    w = rng.uniform(-1, 1, (4, 3, 3, 3)).astype(np.float32)
    out = conv2d(x, w, stride=2, padding=1)
    assert out.shape == (1, 4, 4, 4)
    np.testing.assert_allclose(out, naive_conv2d(x, w, stride=2, pad=1), atol=1e-6, rtol=0)


def test_conv_random_configs_vs_naive(rng):
    for _ in range(100):
        k = int(rng.choice([1, 3]))
        s = int(rng.choice([1, 2]))
        p = int(rng.integers(0, 2))
        c_in, c_out = (int(v) for v in rng.integers(1, 5, 2))
        h, w = (int(v) for v in rng.integers(k, 8, 2))
        x = rng.standard_normal((1, c_in, h, w)).astype(np.float32)
        wt = rng.standard_normal((c_out, c_in, k, k)).astype(np.float32)
        b = rng.standard_normal(c_out).astype(np.float32)
        ref = naive_conv2d(x, wt, b, s, p)
        got = conv2d(x, wt, b, s, p)
        np.testing.assert_allclose(got, ref, rtol=1e-5, atol=1e-5)


def test_pointwise_conv_is_per_pixel_matvec(rng):
    x = rng.standard_normal((2, 5, 4, 6)).astype(np.float32)
    w = rng.standard_normal((3, 5, 1, 1)).astype(np.float32)
    got = conv2d(x, w)
    ref = np.einsum("oc,nchw->nohw", w[:, :, 0, 0].astype(np.float64), x.astype(np.float64))
    np.testing.assert_allclose(got, ref, rtol=1e-6, atol=1e-6)


def test_conv_errors():
    with pytest.raises(ShapeError):
        conv2d(np.zeros((1, 2, 4, 4)), np.zeros((1, 3, 1, 1)))
    with pytest.raises(ShapeError):
        conv2d(np.zeros((1, 1, 2, 2)), np.zeros((1, 1, 5, 5)), padding=1)


def test_batch_norm_examples():
    x = np.random.default_rng(0).standard_normal((1, 2, 3, 3)).astype(np.float32)
    ones, zeros = np.ones(2), np.zeros(2)
    assert np.array_equal(batch_norm(x, ones, zeros, zeros, ones, eps=0.0), x)
    out = batch_norm(np.full((1, 1, 1, 1), 2.0), [3.0], [1.0], [0.0], [4.0], eps=0.0)
    assert out.item() == 4.0
    const = np.full((1, 2, 2, 2), 0.37, np.float32)
    out = batch_norm(const, [1.7, -2.0], [0.3, 0.9], [0.37, 0.37], [2.0, 0.5])
    assert np.array_equal(out[0, 0], np.full((2, 2), np.float32(0.3)))
    assert np.array_equal(out[0, 1], np.full((2, 2), np.float32(0.9)))


def test_batch_norm_inverse(rng):
    x = rng.standard_normal((2, 4, 5, 5)).astype(np.float32)
    g, b = rng.uniform(0.5, 2, 4), rng.standard_normal(4)
    m, v = rng.standard_normal(4), rng.uniform(0.1, 3, 4)
    eps = 1e-3
    y = batch_norm(x, g, b, m, v, eps).astype(np.float64)
    back = (y - b[None, :, None, None]) * np.sqrt(v + eps)[None, :, None, None] / g[None, :, None, None] + m[
        None, :, None, None
    ]
    np.testing.assert_allclose(back, x, atol=1e-5)


def test_batch_norm_length_mismatch():
    with pytest.raises(ShapeError):
        batch_norm(np.zeros((1, 3, 1, 1)), np.ones(2), np.zeros(2), np.zeros(2), np.ones(2))


def test_activation_values():
    assert silu(np.float32(0.0)) == 0.0
    assert silu(np.float32(1.0)) == pytest.approx(1 / (1 + math.exp(-1)), abs=1e-6)
    assert silu(np.float32(1.0)) == pytest.approx(0.731059, abs=1e-6)
    assert sigmoid(np.float32(0.0)) == 0.5
    assert activation(np.float32(-3.0), "relu") == 0.0
    # exact erf form, not the tanh approximation
    assert gelu(np.float32(1.0)) == pytest.approx(0.5 * (1 + math.erf(1 / math.sqrt(2))), abs=1e-6)
    with pytest.raises(ValueError):
        activation(np.zeros(1), "swish")


@given(arrays(np.float32, 64, elements=st.floats(-80, 80, width=32)))
def test_silu_is_x_sigmoid_exactly(x):
    assert np.array_equal(silu(x), x * sigmoid(x))


def test_activations_finite_at_extremes():
    x = np.array([-1e30, -100, 0, 100, 1e30], np.float32)
    for kind in ("silu", "gelu", "relu", "sigmoid"):
        with np.errstate(all="raise"):
            y = activation(x, kind)
        assert np.all(np.isfinite(y)), kind


def test_max_pool_examples(rng):
    assert np.all(max_pool2d(np.full((1, 1, 4, 4), 3.0), 3, 1, 1) == 3.0)
    x = np.array([[1, 2], [3, 4]], np.float32).reshape(1, 1, 2, 2)
    assert max_pool2d(x, 2, 1, 0).tolist() == [[[[4.0]]]]
    x = rng.standard_normal((1, 2, 6, 6)).astype(np.float32)
    out = max_pool2d(x, 5, 1, 2)
    assert out.shape == x.shape
    assert np.array_equal(out, naive_max_pool(x, 5, 1, 2))


def test_max_pool_negative_border_never_padded():
    x = np.full((1, 1, 3, 3), -5.0, np.float32)
    assert np.all(max_pool2d(x, 3, 1, 1) == -5.0)


def test_max_pool_window_too_large():
    with pytest.raises(ShapeError):
        max_pool2d(np.zeros((1, 1, 2, 2)), 5, 1, 0)


def test_upsample():
    assert np.all(upsample_nearest2x(np.full((1, 1, 1, 1), 5.0)) == 5.0)
    x = np.array([[1, 2], [3, 4]], np.float32).reshape(1, 1, 2, 2)
    up = upsample_nearest2x(x)
    assert up.shape == (1, 1, 4, 4)
    for i in range(2):
        for j in range(2):
            assert np.all(up[0, 0, 2 * i : 2 * i + 2, 2 * j : 2 * j + 2] == x[0, 0, i, j])


@settings(max_examples=30)
@given(arrays(np.float32, (1, 2, 3, 5), elements=st.floats(-1e6, 1e6, width=32)))
def test_upsample_then_stride_roundtrip(x):
    assert np.array_equal(upsample_nearest2x(x)[:, :, ::2, ::2], x)


def test_concat_split(rng):
    a = rng.standard_normal((1, 2, 3, 3)).astype(np.float32)
    b = rng.standard_normal((1, 3, 3, 3)).astype(np.float32)
    assert np.array_equal(concat_channels([a]), a)
    cat = concat_channels([a, b])
    assert cat.shape == (1, 5, 3, 3)
    for c in range(5):
        src = a[:, c] if c < 2 else b[:, c - 2]
        assert np.array_equal(cat[:, c], src)
    x = rng.standard_normal((1, 4, 2, 2)).astype(np.float32)
    parts = split_channels(x, [1, 3])
    assert np.array_equal(concat_channels(parts), x)
    back = split_channels(cat, [2, 3])
    assert np.array_equal(back[0], a) and np.array_equal(back[1], b)


def test_concat_spatial_mismatch():
    with pytest.raises(ShapeError):
        concat_channels([np.zeros((1, 1, 2, 2)), np.zeros((1, 1, 3, 2))])
    with pytest.raises(ShapeError):
        split_channels(np.zeros((1, 4, 1, 1)), [1, 2])
