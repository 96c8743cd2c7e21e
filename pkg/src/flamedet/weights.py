"""Named tensor store, the LYF1 binary container, and seeded initialisation.

Container layout (little-endian)::

    "LYF1" | u32 version=1 | u32 tensor_count
    directory: tensor_count x {u16 name_len, utf-8 name, u8 dtype (0 = f32),
                               u8 rank, u32 dims[rank], u64 byte_offset}
    zero padding up to the next 64-byte boundary
    payload: contiguous f32 tensors, offsets relative to payload start,
             each offset a multiple of 64
"""

import math
import struct
from collections.abc import Mapping

import numpy as np

from .errors import FormatError

MAGIC = b"LYF1"
VERSION = 1
ALIGN = 64
DTYPE_F32 = 0


class WeightStore(Mapping):
    """Read-only mapping from dotted tensor name to float32 array."""

    def __init__(self, entries, variant=None, nc=None):
        self._entries = {k: np.ascontiguousarray(v, dtype=np.float32) for k, v in entries.items()}
        for arr in self._entries.values():
            arr.flags.writeable = False
        self.variant = variant
        self.nc = nc

    def __getitem__(self, name):
        return self._entries[name]

    def __iter__(self):
        return iter(self._entries)

    def __len__(self):
        return len(self._entries)

    def __repr__(self):
        return f"WeightStore({len(self)} tensors, variant={self.variant!r}, nc={self.nc!r})"

    def num_values(self):
        return sum(a.size for a in self._entries.values())


def _align(n):
    return -(-n // ALIGN) * ALIGN


def save_weights(store, path):
    names = list(store)
    directory = bytearray()
    offset = 0
    offsets = []
    for name in names:
        arr = store[name]
        raw = name.encode("utf-8")
        if len(raw) > 0xFFFF or arr.ndim > 0xFF:
            raise FormatError(f"tensor {name!r} cannot be represented in the container")
        directory += struct.pack("<H", len(raw)) + raw
        directory += struct.pack("<BB", DTYPE_F32, arr.ndim)
        directory += struct.pack(f"<{arr.ndim}I", *arr.shape)
        directory += struct.pack("<Q", offset)
        offsets.append(offset)
        offset = _align(offset + arr.size * 4)
    header = MAGIC + struct.pack("<II", VERSION, len(names)) + bytes(directory)
    payload_start = _align(len(header))
    with open(path, "wb") as f:
        f.write(header)
        f.write(b"\0" * (payload_start - len(header)))
        pos = 0
        for name, off in zip(names, offsets):
            f.write(b"\0" * (off - pos))
            data = store[name].astype("<f4", copy=False).tobytes()
            f.write(data)
            pos = off + len(data)


class _Reader:
    def __init__(self, buf):
        self.buf = buf
        self.pos = 0

    def take(self, fmt):
        size = struct.calcsize(fmt)
        if self.pos + size > len(self.buf):
            raise FormatError(f"truncated weight file: need {size} bytes at offset {self.pos}")
        vals = struct.unpack_from(fmt, self.buf, self.pos)
        self.pos += size
        return vals

    def raw(self, n):
        if self.pos + n > len(self.buf):
            raise FormatError(f"truncated weight file: need {n} bytes at offset {self.pos}")
        out = self.buf[self.pos : self.pos + n]
        self.pos += n
        return out


def load_weights(path, graph=None, strict=True):
    """Read a container; with ``graph`` given, check names and shapes.

    Strict mode rejects tensors the graph does not use; otherwise extras
    are dropped.
    """
    with open(path, "rb") as f:
        buf = f.read()
    if buf[:4] != MAGIC:
        raise FormatError(f"{path}: bad magic {buf[:4]!r}, expected {MAGIC!r}")
    rd = _Reader(buf)
    rd.pos = 4
    version, count = rd.take("<II")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    directory = []
    seen = set()
    for _ in range(count):
        (name_len,) = rd.take("<H")
        try:
            name = rd.raw(name_len).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError(f"{path}: tensor name is not utf-8") from exc
        dtype, rank = rd.take("<BB")
        if dtype != DTYPE_F32:
            raise FormatError(f"{path}: tensor {name!r} has unsupported dtype code {dtype}")
        dims = rd.take(f"<{rank}I")
        (offset,) = rd.take("<Q")
        if name in seen:
            raise FormatError(f"{path}: duplicate tensor name {name!r}")
        seen.add(name)
        directory.append((name, dims, offset))
    payload_start = _align(rd.pos)
    payload_len = len(buf) - payload_start
    entries = {}
    for name, dims, offset in directory:
        nbytes = math.prod(dims) * 4
        if offset % ALIGN:
            raise FormatError(f"{path}: tensor {name!r} offset {offset} is not {ALIGN}-byte aligned")
        if offset + nbytes > payload_len:
            raise FormatError(f"{path}: tensor {name!r} overflows the payload ({offset}+{nbytes} > {payload_len})")
        start = payload_start + offset
        entries[name] = np.frombuffer(buf, dtype="<f4", count=math.prod(dims), offset=start).reshape(dims)
    store = WeightStore(entries)
    if graph is not None:
        from .graph import check_weights

        check_weights(graph, store, strict=strict)
        if not strict:
            keep = graph.weight_shapes()
            store = WeightStore({k: v for k, v in entries.items() if k in keep})
        store.variant, store.nc = graph.variant, graph.nc
    return store


def init_weights(graph, seed=0):
    """Deterministic weights: conv kernels ~ U[-b, b] with b = fan_in^-1/2.

    Biases are zero and batch norm starts at gamma=1, beta=0, mean=0, var=1.
    """
    rng = np.random.default_rng(seed)
    entries = {}
    for spec in graph.convs():
        for name, shape in spec.weight_shapes().items():
            if name.endswith(".weight"):
                fan_in = spec.c_in * spec.k * spec.k
                bound = np.float32(1.0 / math.sqrt(fan_in))
                w = rng.uniform(-1.0, 1.0, size=shape).astype(np.float32) * bound
                entries[name] = np.clip(w, -bound, bound)
            elif name.endswith(".bias"):
                entries[name] = np.zeros(shape, np.float32)
            else:
                field_ = name.rsplit(".", 1)[1]
                fill = 1.0 if field_ in ("gamma", "running_var") else 0.0
                entries[name] = np.full(shape, fill, np.float32)
    return WeightStore(entries, graph.variant, graph.nc)
