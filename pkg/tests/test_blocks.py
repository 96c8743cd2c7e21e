import numpy as np
import pytest

from flamedet.blocks import (
    BlockKind,
    BlockParams,
    bottleneck,
    c2f,
    conv_bn_act,
    faster_c2f,
    fasternet_block,
    pconv,
    sppf,
)
from flamedet.cost import bottleneck_params, fasternet_block_params
from flamedet.errors import ConfigError, ShapeError
from flamedet.tensor import activation, batch_norm, concat_channels, conv2d, max_pool2d, split_channels


def random_weights(params, prefix, rng, zero=False):
    out = {}
    for name, shape in params.weight_shapes(prefix).items():
        if zero:
            out[name] = np.zeros(shape, np.float32)
        elif name.endswith("running_var"):
            out[name] = rng.uniform(0.5, 2.0, shape).astype(np.float32)
        elif name.endswith("gamma"):
            out[name] = rng.uniform(0.5, 1.5, shape).astype(np.float32)
        else:
            out[name] = rng.uniform(-0.5, 0.5, shape).astype(np.float32)
    return out


def ref_cba(x, w, p, stride=1, act="silu"):
    k = w[p + ".conv.weight"].shape[-1]
    y = conv2d(x, w[p + ".conv.weight"], None, stride, k // 2)
    y = batch_norm(y, *(w[f"{p}.bn.{f}"] for f in ("gamma", "beta", "running_mean", "running_var")), eps=1e-3)
    return activation(y, act)


def ref_fasternet(x, w, p, c_p):
    head, tail = x[:, :c_p], x[:, c_p:]
    y = concat_channels([conv2d(head, w[p + ".pconv.weight"], None, 1, 1), tail])
    y = conv2d(y, w[p + ".pw1.conv.weight"])
    y = batch_norm(y, *(w[f"{p}.pw1.bn.{f}"] for f in ("gamma", "beta", "running_mean", "running_var")), eps=1e-3)
    y = activation(y, "gelu")
    y = conv2d(y, w[p + ".pw2.weight"], w[p + ".pw2.bias"])
    return x + y


def test_conv_bn_act_identity_relu():
    x = np.random.default_rng(0).uniform(0, 3, (1, 4, 5, 5)).astype(np.float32)
    w = {
        "c.conv.weight": np.eye(4, dtype=np.float32).reshape(4, 4, 1, 1),
        "c.bn.gamma": np.ones(4) * np.sqrt(1 + 1e-3),
        "c.bn.beta": np.zeros(4),
        "c.bn.running_mean": np.zeros(4),
        "c.bn.running_var": np.ones(4),
    }
    np.testing.assert_allclose(conv_bn_act(x, w, "c", act="relu"), x, rtol=1e-6)


def test_conv_bn_act_stride_shape(rng):
    bp = BlockParams(BlockKind.CONV_BN_ACT, 3, 8, k=3, stride=2)
    assert bp.out_hw(640, 640) == (320, 320)
    x = rng.standard_normal((1, 3, 16, 16)).astype(np.float32)
    w = random_weights(bp, "c", rng)
    out = bp.forward(x, w, "c")
    assert out.shape == (1, 8, 8, 8)
    assert np.array_equal(out, ref_cba(x, w, "c", 2))


def test_pconv_full_ratio_is_conv(rng):
    x = rng.standard_normal((1, 4, 6, 6)).astype(np.float32)
    wt = rng.standard_normal((4, 4, 3, 3)).astype(np.float32)
    assert np.array_equal(pconv(x, wt, 4), conv2d(x, wt, None, 1, 1))


def test_pconv_zero_weights_pass_through(rng):
    x = rng.standard_normal((1, 8, 5, 5)).astype(np.float32)
    out = pconv(x, np.zeros((2, 2, 3, 3)), 2)
    assert np.all(out[:, :2] == 0)
    assert np.array_equal(out[:, 2:], x[:, 2:])


def test_pconv_slice_and_compare(rng):
    x = rng.standard_normal((1, 8, 7, 7)).astype(np.float32)
    wt = rng.standard_normal((2, 2, 3, 3)).astype(np.float32)
    out = pconv(x, wt, 2)
    assert out.shape == x.shape
    assert np.array_equal(out[:, 2:], x[:, 2:])
    assert np.array_equal(out[:, :2], conv2d(x[:, :2], wt, None, 1, 1))


def test_pconv_too_many_channels():
    with pytest.raises(ShapeError):
        pconv(np.zeros((1, 2, 4, 4)), np.zeros((3, 3, 3, 3)), 3)


def test_fasternet_zero_weights_identity(rng):
    bp = BlockParams(BlockKind.FASTERNET_BLOCK, 8, 8)
    x = rng.standard_normal((1, 8, 5, 5)).astype(np.float32)
    w = random_weights(bp, "f", rng, zero=True)
    assert np.array_equal(bp.forward(x, w, "f"), x)


def test_fasternet_channel_arithmetic():
    bp = BlockParams(BlockKind.FASTERNET_BLOCK, 4, 4)
    shapes = bp.weight_shapes("f")
    assert shapes["f.pconv.weight"] == (1, 1, 3, 3)
    assert shapes["f.pw1.conv.weight"] == (8, 4, 1, 1)
    assert shapes["f.pw2.weight"] == (4, 8, 1, 1)
    assert shapes["f.pw2.bias"] == (4,)


def test_fasternet_composition(rng):
    bp = BlockParams(BlockKind.FASTERNET_BLOCK, 8, 8)
    x = rng.standard_normal((1, 8, 6, 6)).astype(np.float32)
    w = random_weights(bp, "f", rng)
    np.testing.assert_allclose(fasternet_block(x, w, "f"), ref_fasternet(x, w, "f", 2), atol=1e-6, rtol=0)


def test_fasternet_bad_ratio():
    with pytest.raises(ConfigError):
        BlockParams(BlockKind.FASTERNET_BLOCK, 6, 6)


def test_bottleneck_variants(rng):
    bp = BlockParams(BlockKind.BOTTLENECK1, 4, 4)
    x = rng.standard_normal((1, 4, 5, 5)).astype(np.float32)
    zw = random_weights(bp, "b", rng, zero=True)
    assert np.array_equal(bottleneck(x, zw, "b", "backbone"), x)
    # zero conv + zero BN -> silu(0) == 0
    assert np.all(bottleneck(x, zw, "b", "neck") == 0)
    w = random_weights(bp, "b", rng)
    y_bb = bottleneck(x, w, "b", "backbone")
    y_nk = bottleneck(x, w, "b", "neck")
    assert np.array_equal(y_bb, x + y_nk)
    np.testing.assert_allclose(y_bb - y_nk, x, atol=1e-6)


def test_bottleneck1_needs_equal_channels(rng):
    with pytest.raises(ConfigError):
        BlockParams(BlockKind.BOTTLENECK1, 4, 8)
    bp = BlockParams(BlockKind.BOTTLENECK2, 4, 8)
    w = random_weights(bp, "b", rng)
    with pytest.raises(ConfigError):
        bottleneck(rng.standard_normal((1, 4, 3, 3)).astype(np.float32), w, "b", "backbone")


def test_c2f_n0_equals_cv2_cv1(rng):
    bp = BlockParams(BlockKind.C2F, 6, 8, n=0)
    x = rng.standard_normal((1, 6, 5, 5)).astype(np.float32)
    w = random_weights(bp, "c", rng)
    assert np.array_equal(c2f(x, w, "c", 0), ref_cba(ref_cba(x, w, "c.cv1"), w, "c.cv2"))


def test_c2f_channel_arithmetic():
    bp = BlockParams(BlockKind.C2F, 64, 64, n=2)
    assert bp.weight_shapes("c")["c.cv2.conv.weight"] == (64, 128, 1, 1)


def test_c2f_composition(rng):
    bp = BlockParams(BlockKind.C2F, 6, 8, n=1, shortcut=True)
    x = rng.standard_normal((1, 6, 5, 5)).astype(np.float32)
    w = random_weights(bp, "c", rng)
    y = ref_cba(x, w, "c.cv1")
    a, b = split_channels(y, [4, 4])
    m = b + ref_cba(ref_cba(b, w, "c.m.0.cv1"), w, "c.m.0.cv2")
    ref = ref_cba(concat_channels([a, b, m]), w, "c.cv2")
    assert np.array_equal(bp.forward(x, w, "c"), ref)


def test_c2f_odd_output():
    with pytest.raises(ConfigError):
        BlockParams(BlockKind.C2F, 4, 7)


def test_faster_c2f_drop_in_shape(rng):
    x = rng.standard_normal((1, 16, 6, 6)).astype(np.float32)
    for n in (1, 2):
        a = BlockParams(BlockKind.C2F, 16, 16, n=n)
        b = BlockParams(BlockKind.FASTER_C2F, 16, 16, n=n)
        assert (
            a.forward(x, random_weights(a, "c", rng), "c").shape == b.forward(x, random_weights(b, "c", rng), "c").shape
        )


def test_faster_c2f_zero_inner_blocks(rng):
    bp = BlockParams(BlockKind.FASTER_C2F, 8, 8, n=2)
    x = rng.standard_normal((1, 8, 5, 5)).astype(np.float32)
    w = random_weights(bp, "c", rng)
    for name in list(w):
        if ".m." in name:
            w[name] = np.zeros_like(w[name])
    # concat(a, b, b, b) must equal what faster_c2f feeds into cv2
    y = ref_cba(x, w, "c.cv1")
    a, b = split_channels(y, [4, 4])
    expected = ref_cba(concat_channels([a, b, b, b]), w, "c.cv2")
    assert np.array_equal(faster_c2f(x, w, "c", 2), expected)


def test_faster_c2f_composition(rng):
    bp = BlockParams(BlockKind.FASTER_C2F, 8, 16, n=1)
    x = rng.standard_normal((1, 8, 5, 5)).astype(np.float32)
    w = random_weights(bp, "c", rng)
    y = ref_cba(x, w, "c.cv1")
    a, b = split_channels(y, [8, 8])
    m = ref_fasternet(b, w, "c.m.0", 2)
    ref = ref_cba(concat_channels([a, b, m]), w, "c.cv2")
    np.testing.assert_allclose(bp.forward(x, w, "c"), ref, atol=1e-6, rtol=0)


def test_sppf_constant_input(rng):
    bp = BlockParams(BlockKind.SPPF, 8, 8)
    w = random_weights(bp, "s", rng)
    x = np.full((1, 8, 6, 6), 0.7, np.float32)
    y0 = ref_cba(x, w, "s.cv1")
    assert np.array_equal(max_pool2d(y0, 5, 1, 2), y0)
    assert np.array_equal(sppf(x, w, "s"), ref_cba(concat_channels([y0] * 4), w, "s.cv2"))


def test_sppf_shape_p5():
    bp = BlockParams(BlockKind.SPPF, 512, 512)
    assert bp.out_hw(20, 20) == (20, 20)
    shapes = bp.weight_shapes("s")
    assert shapes["s.cv1.conv.weight"] == (256, 512, 1, 1)
    assert shapes["s.cv2.conv.weight"] == (512, 1024, 1, 1)


def test_chained_pools_equal_wide_pools(rng):
    x = rng.standard_normal((1, 3, 15, 15)).astype(np.float32)
    p1 = max_pool2d(x, 5, 1, 2)
    p2 = max_pool2d(p1, 5, 1, 2)
    p3 = max_pool2d(p2, 5, 1, 2)
    assert np.array_equal(p2, max_pool2d(x, 9, 1, 4))
    assert np.array_equal(p3, max_pool2d(x, 13, 1, 6))


def test_residual_identity_under_zero_weights(rng):
    x = rng.standard_normal((1, 8, 4, 4)).astype(np.float32)
    for kind in (BlockKind.BOTTLENECK1, BlockKind.FASTERNET_BLOCK):
        bp = BlockParams(kind, 8, 8)
        assert np.array_equal(bp.forward(x, random_weights(bp, "r", rng, zero=True), "r"), x)


@pytest.mark.parametrize("c", [16, 32, 64, 128, 256])
def test_per_block_param_closed_forms(c):
    def count(bp):
        return sum(s.params for s in bp.convs("x"))

    assert count(BlockParams(BlockKind.BOTTLENECK1, c, c)) == bottleneck_params(c) == 18 * c * c + 4 * c
    fn = count(BlockParams(BlockKind.FASTERNET_BLOCK, c, c))
    assert fn == fasternet_block_params(c) == 9 * (c // 4) ** 2 + 4 * c * c + 5 * c
    conv_only = 9 * (c // 4) ** 2 + 4 * c * c
    assert conv_only / (18 * c * c) == pytest.approx(0.2535, abs=1e-4)
