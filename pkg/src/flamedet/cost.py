"""Parameter, MAC/FLOP and memory-access accounting.

FLOPs follow the 2 x MAC convention over convolution layers only; batch
norm, activations, pooling, upsampling and concatenation are free. Batch
norm running statistics are buffers and are not counted as parameters.
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

from .errors import ConfigError


@dataclass(frozen=True)
class CostRow:
    name: str
    role: str
    params: int
    macs: int
    mem_access: int


@dataclass(frozen=True)
class CostReport:
    rows: tuple
    variant: str
    imgsz: int

    @property
    def params(self):
        return sum(r.params for r in self.rows)

    @property
    def macs(self):
        return sum(r.macs for r in self.rows)

    @property
    def flops(self):
        return 2 * self.macs

    @property
    def mem_access(self):
        return sum(r.mem_access for r in self.rows)

    def subtotal(self, prefix):
        """Sum the rows whose name is ``prefix`` or lies under it."""
        rows = [r for r in self.rows if r.name == prefix or r.name.startswith(prefix + ".")]
        return CostReport(tuple(rows), self.variant, self.imgsz)


def profile(graph, imgsz=None):
    """Per-convolution cost rows for ``graph`` at input size ``imgsz``."""
    imgsz = graph.imgsz if imgsz is None else imgsz
    if imgsz % 32 or imgsz <= 0:
        raise ConfigError(f"imgsz must be a positive multiple of 32, got {imgsz}")
    shapes = graph.node_shapes(imgsz)
    rows = []
    for node in graph.nodes:
        if node.op == "block":
            h, w = shapes[node.inputs[0]][1:] if node.inputs else (imgsz, imgsz)
            specs = [(s, h, w) for s in node.convs()]
        elif node.op == "detect":
            specs = []
            for s in node.convs():
                lvl = int(s.name.split(".")[2])
                _, h, w = shapes[node.inputs[lvl]]
                specs.append((s, h, w))
        else:
            continue
        for s, h, w in specs:
            rows.append(CostRow(s.name, s.role, s.params, s.macs(h, w), s.mem_access(h, w)))
    return CostReport(tuple(rows), graph.variant, imgsz)


def count_params(graph):
    return profile(graph, graph.imgsz)


def count_flops(graph, imgsz=None):
    return profile(graph, imgsz)


def reduction(base, other):
    """Fractional reduction of ``other`` relative to ``base``."""
    return (base - other) / base


class PConvCost(NamedTuple):
    flops_pconv: int
    mem_access_pconv: int
    flops_tshape: int
    flops_two_step: int


def pconv_cost(h, w, k, c, c_p):
    """Closed-form costs of a partial conv and its PConv + PWConv pairings.

    ``flops_pconv`` = h w k^2 c_p^2; ``mem_access_pconv`` = h w 2 c_p + k^2 c_p^2;
    ``flops_tshape`` = h w (k^2 c_p c + c (c - c_p)) for the fused T-shaped
    filter; ``flops_two_step`` = h w (k^2 c_p^2 + c^2) for PConv followed by
    a full PWConv.
    """
    if not 0 < c_p <= c:
        raise ConfigError(f"need 0 < c_p <= c, got c_p={c_p}, c={c}")
    hw = h * w
    return PConvCost(
        hw * k * k * c_p * c_p,
        hw * 2 * c_p + k * k * c_p * c_p,
        hw * (k * k * c_p * c + c * (c - c_p)),
        hw * (k * k * c_p * c_p + c * c),
    )


def pconv_mem_approx_error(h, w, k, c_p):
    """Relative error of dropping the k^2 c_p^2 weight term from PConv memory access."""
    exact = h * w * 2 * c_p + k * k * c_p * c_p
    return (exact - h * w * 2 * c_p) / exact


def conv_bn_params(c_in, c_out, k):
    return c_in * c_out * k * k + 2 * c_out


def bottleneck_params(c):
    """Two 3x3 Conv-BN layers at width ``c``: 18 c^2 weights + 4 c BN."""
    return 18 * c * c + 4 * c


def fasternet_block_params(c, r=Fraction(1, 4), expansion=2):
    """PConv 9 (r c)^2 + PW1 e c^2 (+ BN 2 e c) + PW2 e c^2 (+ c bias)."""
    c_p = Fraction(c) * Fraction(r)
    if c_p.denominator != 1:
        raise ConfigError(f"{c} x {r} is not an integer channel count")
    c_p = int(c_p)
    return 9 * c_p * c_p + 2 * expansion * c * c + 2 * expansion * c + c
