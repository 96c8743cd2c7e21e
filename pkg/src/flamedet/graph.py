"""YOLOv8 n/s/m and the light (FasterNet C2f) variant as layer DAGs."""

import math
from dataclasses import dataclass, field

import numpy as np

from .blocks import BlockKind, BlockParams, ConvSpec, conv_bn_act
from .errors import ConfigError, ShapeError, WeightLoadError
from .tensor import as_tensor, concat_channels, conv2d, upsample_nearest2x

# (depth multiple, width multiple, max channels)
SCALES = {
    "v8n": (0.33, 0.25, 1024),
    "v8s": (0.33, 0.50, 1024),
    "v8m": (0.67, 0.75, 768),
    "light": (0.33, 0.50, 1024),
}
VARIANTS = tuple(SCALES)
STRIDES = (8, 16, 32)
REG_MAX = 16
N_BACKBONE = 10


@dataclass(frozen=True)
class DetectHead:
    """Decoupled anchor-free head: a box branch and a class branch per scale."""

    nc: int
    channels: tuple
    reg_max: int = REG_MAX

    @property
    def box_width(self):
        return max(16, self.channels[0] // 4, 4 * self.reg_max)

    @property
    def cls_width(self):
        return max(self.channels[0], min(self.nc, 100))

    @property
    def out_channels(self):
        return 4 * self.reg_max + self.nc

    def convs(self, prefix="head"):
        c2, c3 = self.box_width, self.cls_width
        out = []
        for lvl, ch in enumerate(self.channels):
            out += [
                ConvSpec(f"{prefix}.box.{lvl}.0", ch, c2, 3),
                ConvSpec(f"{prefix}.box.{lvl}.1", c2, c2, 3),
                ConvSpec(f"{prefix}.box.{lvl}.2", c2, 4 * self.reg_max, 1, bn=False, bias=True),
                ConvSpec(f"{prefix}.cls.{lvl}.0", ch, c3, 3),
                ConvSpec(f"{prefix}.cls.{lvl}.1", c3, c3, 3),
                ConvSpec(f"{prefix}.cls.{lvl}.2", c3, self.nc, 1, bn=False, bias=True),
            ]
        return out

    def forward(self, feats, weights, prefix="head"):
        outs = []
        for lvl, x in enumerate(feats):
            branches = []
            for br in ("box", "cls"):
                p = f"{prefix}.{br}.{lvl}"
                y = conv_bn_act(conv_bn_act(x, weights, p + ".0"), weights, p + ".1")
                branches.append(conv2d(y, weights[p + ".2.weight"], weights[p + ".2.bias"]))
            outs.append(concat_channels(branches))
        return outs


@dataclass(frozen=True)
class Node:
    id: int
    name: str
    op: str  # "block" | "upsample" | "concat" | "detect"
    inputs: tuple
    block: BlockParams = None
    head: DetectHead = None

    def convs(self):
        if self.block is not None:
            return self.block.convs(self.name)
        if self.head is not None:
            return self.head.convs(self.name)
        return []

    @property
    def kind(self):
        if self.block is not None:
            return self.block.kind.value
        return {"upsample": "Upsample", "concat": "Concat", "detect": "Detect"}[self.op]


@dataclass(frozen=True)
class ModelGraph:
    nodes: tuple
    outputs: tuple  # node ids feeding the head: P3, P4, P5
    variant: str
    nc: int
    imgsz: int
    reg_max: int = REG_MAX
    strides: tuple = field(default=STRIDES)

    def __post_init__(self):
        for node in self.nodes:
            if any(i >= node.id or i < 0 for i in node.inputs):
                raise ConfigError(f"node {node.name} references a later or invalid node: {node.inputs}")

    @property
    def head(self):
        return self.nodes[-1].head

    def convs(self):
        out = []
        for node in self.nodes:
            out += node.convs()
        return out

    def weight_shapes(self):
        shapes = {}
        for spec in self.convs():
            shapes.update(spec.weight_shapes())
        return shapes

    def node_shapes(self, imgsz=None):
        """(channels, height, width) produced by every node at input size ``imgsz``."""
        imgsz = self.imgsz if imgsz is None else imgsz
        shapes = []
        for node in self.nodes:
            if node.op == "block":
                src = shapes[node.inputs[0]] if node.inputs else (3, imgsz, imgsz)
                h, w = node.block.out_hw(src[1], src[2])
                shapes.append((node.block.c_out, h, w))
            elif node.op == "upsample":
                c, h, w = shapes[node.inputs[0]]
                shapes.append((c, 2 * h, 2 * w))
            elif node.op == "concat":
                srcs = [shapes[i] for i in node.inputs]
                shapes.append((sum(s[0] for s in srcs), srcs[0][1], srcs[0][2]))
            else:
                shapes.append((node.head.out_channels, 0, 0))
        return shapes


def _make_divisible(x, divisor=8):
    return math.ceil(x / divisor) * divisor


def build_model(variant, nc=1, imgsz=640, reg_max=REG_MAX):
    """Emit the canonical YOLOv8 topology scaled for ``variant``.

    ``light`` is v8s with all eight C2f blocks (4 backbone, 4 neck)
    replaced by FasterNet C2f blocks of identical shape.
    """
    if variant not in SCALES:
        raise ConfigError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    if imgsz % 32 or imgsz <= 0:
        raise ConfigError(f"imgsz must be a positive multiple of 32, got {imgsz}")
    if nc < 1:
        raise ConfigError(f"nc must be >= 1, got {nc}")
    depth, width, max_ch = SCALES[variant]
    c2f_kind = BlockKind.FASTER_C2F if variant == "light" else BlockKind.C2F

    def ch(c):
        return _make_divisible(min(c, max_ch) * width)

    def rep(n):
        return max(round(n * depth), 1)

    c1, c2, c3, c4, c5 = ch(64), ch(128), ch(256), ch(512), ch(1024)
    nodes = []

    def add(op, inputs, block=None, head=None):
        i = len(nodes)
        name = "head" if op == "detect" else f"{'backbone' if i < N_BACKBONE else 'neck'}.{i}"
        nodes.append(Node(i, name, op, tuple(inputs), block, head))
        return i

    def conv(src, c_in, c_out):
        return add(
            "block", [] if src is None else [src], BlockParams(BlockKind.CONV_BN_ACT, c_in, c_out, k=3, stride=2)
        )

    def csp(src, c_in, c_out, n, shortcut):
        return add("block", [src], BlockParams(c2f_kind, c_in, c_out, n=rep(n), shortcut=shortcut))

    # backbone
    x = conv(None, 3, c1)
    x = conv(x, c1, c2)
    x = csp(x, c2, c2, 3, True)
    x = conv(x, c2, c3)
    p3 = csp(x, c3, c3, 6, True)
    x = conv(p3, c3, c4)
    p4 = csp(x, c4, c4, 6, True)
    x = conv(p4, c4, c5)
    x = csp(x, c5, c5, 3, True)
    p5 = add("block", [x], BlockParams(BlockKind.SPPF, c5, c5))
    # neck: top-down (FPN) then bottom-up (PAN)
    x = add("upsample", [p5])
    x = add("concat", [x, p4])
    n12 = csp(x, c5 + c4, c4, 3, False)
    x = add("upsample", [n12])
    x = add("concat", [x, p3])
    out3 = csp(x, c4 + c3, c3, 3, False)
    x = conv(out3, c3, c3)
    x = add("concat", [x, n12])
    out4 = csp(x, c3 + c4, c4, 3, False)
    x = conv(out4, c4, c4)
    x = add("concat", [x, p5])
    out5 = csp(x, c4 + c5, c5, 3, False)
    add("detect", [out3, out4, out5], head=DetectHead(nc, (c3, c4, c5), reg_max))
    return ModelGraph(tuple(nodes), (out3, out4, out5), variant, nc, imgsz, reg_max)


def check_weights(graph, weights, strict=False):
    """Raise ``WeightLoadError`` naming the first missing or mis-shaped tensor."""
    expected = graph.weight_shapes()
    for name, shape in expected.items():
        if name not in weights:
            raise WeightLoadError(f"missing weight tensor {name!r}")
        got = tuple(np.shape(weights[name]))
        if got != tuple(shape):
            raise WeightLoadError(f"weight tensor {name!r} has shape {got}, expected {tuple(shape)}")
    if strict:
        extras = sorted(set(weights) - set(expected))
        if extras:
            raise WeightLoadError(f"unexpected weight tensors: {', '.join(extras)}")


def forward(graph, weights, x, check=True):
    """Run the network; returns the three raw head maps (P3, P4, P5)."""
    x = as_tensor(x)
    if x.shape[1] != 3 or x.shape[2:] != (graph.imgsz, graph.imgsz):
        raise ShapeError(f"input must be (n, 3, {graph.imgsz}, {graph.imgsz}), got {x.shape}")
    if check:
        check_weights(graph, weights)
    values = []
    for node in graph.nodes:
        if node.op == "block":
            src = values[node.inputs[0]] if node.inputs else x
            values.append(node.block.forward(src, weights, node.name))
        elif node.op == "upsample":
            values.append(upsample_nearest2x(values[node.inputs[0]]))
        elif node.op == "concat":
            values.append(concat_channels([values[i] for i in node.inputs]))
        else:
            values.append(node.head.forward([values[i] for i in node.inputs], weights, node.name))
    return values[-1]
