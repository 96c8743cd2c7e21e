"""Composite layers: Conv-BN-act, bottlenecks, C2f, SPPF, PConv, FasterNet.

Each block reads its tensors from a flat ``name -> array`` mapping under a
dotted prefix, e.g. ``backbone.2.cv1.conv.weight``. ``BlockParams`` owns the
static description of a block (channels, repeats, kernel) and enumerates
its convolutions as ``ConvSpec`` rows, which the weight store and the cost
model both consume.
"""

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

import numpy as np

from .errors import ConfigError, ShapeError, WeightLoadError
from .tensor import (
    activation,
    batch_norm,
    concat_channels,
    conv2d,
    conv_output_size,
    max_pool2d,
    split_channels,
)

BN_EPS = 1e-3
BN_FIELDS = ("gamma", "beta", "running_mean", "running_var")
# running statistics are buffers, not learnable parameters
BN_BUFFERS = ("running_mean", "running_var")


class BlockKind(str, Enum):
    CONV_BN_ACT = "ConvBNAct"
    BOTTLENECK1 = "Bottleneck1"
    BOTTLENECK2 = "Bottleneck2"
    C2F = "C2f"
    FASTER_C2F = "FasterC2f"
    FASTERNET_BLOCK = "FasterNetBlock"
    SPPF = "SPPF"


@dataclass(frozen=True)
class ConvSpec:
    """A single convolution, optionally followed by batch norm."""

    name: str
    c_in: int
    c_out: int
    k: int
    stride: int = 1
    bn: bool = True
    bias: bool = False
    role: str = "conv"

    @property
    def padding(self):
        return self.k // 2

    def weight_shapes(self):
        shapes = {}
        if self.bn:
            shapes[f"{self.name}.conv.weight"] = (self.c_out, self.c_in, self.k, self.k)
            for f in BN_FIELDS:
                shapes[f"{self.name}.bn.{f}"] = (self.c_out,)
        else:
            shapes[f"{self.name}.weight"] = (self.c_out, self.c_in, self.k, self.k)
        if self.bias:
            shapes[f"{self.name}.bias"] = (self.c_out,)
        return shapes

    @property
    def params(self):
        n = self.c_out * self.c_in * self.k * self.k
        if self.bn:
            n += 2 * self.c_out
        if self.bias:
            n += self.c_out
        return n

    def out_hw(self, h, w):
        return (
            conv_output_size(h, self.k, self.stride, self.padding),
            conv_output_size(w, self.k, self.stride, self.padding),
        )

    def macs(self, h, w):
        oh, ow = self.out_hw(h, w)
        return self.c_in * self.c_out * self.k * self.k * oh * ow

    def mem_access(self, h, w):
        """Elements read + written: input slice, output, weights."""
        oh, ow = self.out_hw(h, w)
        return h * w * self.c_in + oh * ow * self.c_out + self.c_out * self.c_in * self.k * self.k


def _get(weights, name):
    try:
        return weights[name]
    except KeyError:
        raise WeightLoadError(f"missing weight tensor {name!r}") from None


def _bn(x, weights, prefix):
    g, b, m, v = (_get(weights, f"{prefix}.bn.{f}") for f in BN_FIELDS)
    return batch_norm(x, g, b, m, v, eps=BN_EPS)


def conv_bn_act(x, weights, prefix, stride=1, act="silu"):
    """activation(batch_norm(conv2d(x))) with 'same' padding k // 2."""
    w = _get(weights, f"{prefix}.conv.weight")
    y = conv2d(x, w, None, stride=stride, padding=w.shape[-1] // 2)
    return activation(_bn(y, weights, prefix), act)


def pconv(x, weight, c_p):
    """3x3 convolution over the first ``c_p`` channels; the rest pass through."""
    c = x.shape[1]
    if c_p > c or c_p < 1:
        raise ShapeError(f"partial channel count {c_p} not in [1, {c}]")
    weight = np.asarray(weight)
    if weight.shape != (c_p, c_p, 3, 3):
        raise ShapeError(f"pconv weight must be ({c_p}, {c_p}, 3, 3), got {weight.shape}")
    head, tail = split_channels(x, [c_p, c - c_p])
    return concat_channels([conv2d(head, weight, None, stride=1, padding=1), tail])


def fasternet_block(x, weights, prefix, c_p=None):
    """x + PW2(GELU(BN(PW1(PConv(x))))).

    ``c_p`` defaults to the size implied by the stored PConv weight.
    """
    pw = _get(weights, f"{prefix}.pconv.weight")
    if c_p is None:
        c_p = pw.shape[0]
    y = pconv(x, pw, c_p)
    y = conv2d(y, _get(weights, f"{prefix}.pw1.conv.weight"), None)
    y = activation(_bn(y, weights, prefix + ".pw1"), "gelu")
    y = conv2d(y, _get(weights, f"{prefix}.pw2.weight"), _get(weights, f"{prefix}.pw2.bias"))
    if y.shape != x.shape:
        raise ShapeError(f"FasterNet block output {y.shape} cannot be added to input {x.shape}")
    return x + y


def bottleneck(x, weights, prefix, variant="backbone"):
    """Two 3x3 Conv-BN-SiLU layers; the backbone variant adds the input back."""
    if variant not in ("backbone", "neck"):
        raise ConfigError(f"unknown bottleneck variant {variant!r}")
    y = conv_bn_act(conv_bn_act(x, weights, prefix + ".cv1"), weights, prefix + ".cv2")
    if variant == "backbone":
        if y.shape != x.shape:
            raise ConfigError(f"shortcut needs c_in == c_out, got {x.shape[1]} -> {y.shape[1]}")
        return x + y
    return y


def _c2f_body(x, weights, prefix, n, inner):
    y = conv_bn_act(x, weights, prefix + ".cv1")
    c_h = y.shape[1] // 2
    parts = split_channels(y, [c_h, c_h])
    for i in range(n):
        parts.append(inner(parts[-1], f"{prefix}.m.{i}"))
    return conv_bn_act(concat_channels(parts), weights, prefix + ".cv2")


def c2f(x, weights, prefix, n, shortcut=True):
    variant = "backbone" if shortcut else "neck"
    return _c2f_body(x, weights, prefix, n, lambda t, p: bottleneck(t, weights, p, variant))


def faster_c2f(x, weights, prefix, n):
    return _c2f_body(x, weights, prefix, n, lambda t, p: fasternet_block(t, weights, p))


def sppf(x, weights, prefix, k=5):
    y = [conv_bn_act(x, weights, prefix + ".cv1")]
    for _ in range(3):
        y.append(max_pool2d(y[-1], k, 1, k // 2))
    return conv_bn_act(concat_channels(y), weights, prefix + ".cv2")


@dataclass(frozen=True)
class BlockParams:
    """Static description of one block.

    ``n`` is the repeat count for the C2f family, ``shortcut`` selects the
    backbone (residual) bottleneck inside C2f, ``partial_ratio`` and
    ``expansion`` configure FasterNet blocks.
    """

    kind: BlockKind
    c_in: int
    c_out: int
    n: int = 1
    k: int = 1
    stride: int = 1
    partial_ratio: Fraction = field(default=Fraction(1, 4))
    expansion: int = 2
    shortcut: bool = True

    def __post_init__(self):
        object.__setattr__(self, "kind", BlockKind(self.kind))
        object.__setattr__(self, "partial_ratio", Fraction(self.partial_ratio))
        if self.c_in < 1 or self.c_out < 1:
            raise ConfigError(f"channel counts must be positive, got {self.c_in} -> {self.c_out}")
        if not 0 < self.partial_ratio <= 1:
            raise ConfigError(f"partial_ratio must lie in (0, 1], got {self.partial_ratio}")
        kind = self.kind
        if kind in (BlockKind.C2F, BlockKind.FASTER_C2F):
            if self.c_out % 2:
                raise ConfigError(f"C2f needs an even c_out, got {self.c_out}")
            if self.n < 0:
                raise ConfigError("repeat count must be >= 0")
        if kind == BlockKind.BOTTLENECK1 and self.c_in != self.c_out:
            raise ConfigError("Bottleneck1 has a residual add and needs c_in == c_out")
        if kind == BlockKind.FASTERNET_BLOCK and self.c_in != self.c_out:
            raise ConfigError("FasterNet block needs c_in == c_out")
        if kind == BlockKind.SPPF and self.c_in % 2:
            raise ConfigError("SPPF halves c_in, which must be even")
        if kind in (BlockKind.FASTERNET_BLOCK, BlockKind.FASTER_C2F):
            self.partial_channels(self.hidden)

    @property
    def hidden(self):
        """Width each inner block runs at."""
        if self.kind in (BlockKind.C2F, BlockKind.FASTER_C2F):
            return self.c_out // 2
        return self.c_out

    def partial_channels(self, c):
        c_p = c * self.partial_ratio
        if c_p.denominator != 1 or c_p < 1:
            raise ConfigError(f"{c} channels x partial_ratio {self.partial_ratio} is not a positive integer")
        return int(c_p)

    def convs(self, prefix):
        """Every convolution of the block in forward order."""
        k = self.kind
        if k == BlockKind.CONV_BN_ACT:
            return [ConvSpec(prefix, self.c_in, self.c_out, self.k, self.stride)]
        if k in (BlockKind.BOTTLENECK1, BlockKind.BOTTLENECK2):
            return _bottleneck_convs(prefix, self.c_in, self.c_out)
        if k == BlockKind.FASTERNET_BLOCK:
            return _fasternet_convs(prefix, self.c_out, self.partial_channels(self.c_out), self.expansion)
        if k == BlockKind.SPPF:
            c_h = self.c_in // 2
            return [ConvSpec(prefix + ".cv1", self.c_in, c_h, 1), ConvSpec(prefix + ".cv2", 4 * c_h, self.c_out, 1)]
        c_h = self.hidden
        out = [ConvSpec(prefix + ".cv1", self.c_in, 2 * c_h, 1)]
        for i in range(self.n):
            p = f"{prefix}.m.{i}"
            if k == BlockKind.C2F:
                out += _bottleneck_convs(p, c_h, c_h)
            else:
                out += _fasternet_convs(p, c_h, self.partial_channels(c_h), self.expansion)
        out.append(ConvSpec(prefix + ".cv2", (2 + self.n) * c_h, self.c_out, 1))
        return out

    def weight_shapes(self, prefix):
        shapes = {}
        for spec in self.convs(prefix):
            shapes.update(spec.weight_shapes())
        return shapes

    def out_hw(self, h, w):
        if self.kind == BlockKind.CONV_BN_ACT:
            return self.convs("_")[0].out_hw(h, w)
        return h, w

    def forward(self, x, weights, prefix):
        k = self.kind
        if x.shape[1] != self.c_in:
            raise ShapeError(f"{prefix}: expected {self.c_in} input channels, got {x.shape[1]}")
        if k == BlockKind.CONV_BN_ACT:
            return conv_bn_act(x, weights, prefix, self.stride)
        if k == BlockKind.BOTTLENECK1:
            return bottleneck(x, weights, prefix, "backbone")
        if k == BlockKind.BOTTLENECK2:
            return bottleneck(x, weights, prefix, "neck")
        if k == BlockKind.FASTERNET_BLOCK:
            return fasternet_block(x, weights, prefix, self.partial_channels(self.c_out))
        if k == BlockKind.SPPF:
            return sppf(x, weights, prefix)
        if k == BlockKind.C2F:
            return c2f(x, weights, prefix, self.n, self.shortcut)
        return faster_c2f(x, weights, prefix, self.n)


def _bottleneck_convs(prefix, c_in, c_out):
    return [ConvSpec(prefix + ".cv1", c_in, c_out, 3), ConvSpec(prefix + ".cv2", c_out, c_out, 3)]


def _fasternet_convs(prefix, c, c_p, expansion):
    return [
        ConvSpec(prefix + ".pconv", c_p, c_p, 3, bn=False, role="pconv"),
        ConvSpec(prefix + ".pw1", c, expansion * c, 1, role="pwconv"),
        ConvSpec(prefix + ".pw2", expansion * c, c, 1, bn=False, bias=True, role="pwconv"),
    ]
