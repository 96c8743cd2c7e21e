"""8-bit RGB images and the binary PPM (P6) codec."""

from dataclasses import dataclass

import numpy as np

from ..errors import FormatError


@dataclass(eq=False)
class Image:
    """RGB raster; ``pixels`` is a (height, width, 3) uint8 array."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.ascontiguousarray(self.pixels, dtype=np.uint8)
        if px.ndim != 3 or px.shape[2] != 3:
            raise ValueError(f"pixels must be (h, w, 3), got {px.shape}")
        self.pixels = px

    @property
    def width(self):
        return self.pixels.shape[1]

    @property
    def height(self):
        return self.pixels.shape[0]

    @classmethod
    def blank(cls, width, height, value=114):
        return cls(np.full((height, width, 3), value, np.uint8))

    def __eq__(self, other):
        return isinstance(other, Image) and np.array_equal(self.pixels, other.pixels)


def _header_tokens(data, count):
    """Read ``count`` whitespace-separated header tokens, skipping # comments."""
    tokens, i = [], 0
    while len(tokens) < count:
        while i < len(data) and data[i : i + 1].isspace():
            i += 1
        if i >= len(data):
            raise FormatError("truncated PPM header")
        if data[i : i + 1] == b"#":
            while i < len(data) and data[i : i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        j = i
        while j < len(data) and not data[j : j + 1].isspace() and data[j : j + 1] != b"#":
            j += 1
        tokens.append(data[i:j])
        i = j
    # exactly one whitespace byte separates the header from the raster
    if i >= len(data) or not data[i : i + 1].isspace():
        raise FormatError("PPM header must end with a single whitespace byte")
    return tokens, i + 1


def decode_ppm(data):
    if data[:2] != b"P6":
        raise FormatError(f"bad PPM magic {data[:2]!r}, expected b'P6'")
    (w_tok, h_tok, max_tok), start = _header_tokens(data[2:], 3)
    start += 2
    try:
        width, height, maxval = int(w_tok), int(h_tok), int(max_tok)
    except ValueError:
        raise FormatError("non-integer PPM header field") from None
    if maxval != 255:
        raise FormatError(f"unsupported PPM maxval {maxval}, expected 255")
    if width < 1 or height < 1:
        raise FormatError(f"invalid PPM size {width}x{height}")
    need = width * height * 3
    payload = data[start : start + need]
    if len(payload) < need:
        raise FormatError(f"short PPM payload: {len(payload)} of {need} bytes")
    return Image(np.frombuffer(payload, np.uint8).reshape(height, width, 3))


def encode_ppm(image):
    return f"P6\n{image.width} {image.height}\n255\n".encode("ascii") + image.pixels.tobytes()


def read_ppm(path):
    with open(path, "rb") as f:
        data = f.read()
    try:
        return decode_ppm(data)
    except FormatError as exc:
        raise FormatError(f"{path}: {exc}") from None


def write_ppm(image, path):
    with open(path, "wb") as f:
        f.write(encode_ppm(image))


def ppm_size(path):
    """(width, height) from the header only."""
    with open(path, "rb") as f:
        head = f.read(512)
    if head[:2] != b"P6":
        raise FormatError(f"{path}: bad PPM magic {head[:2]!r}")
    (w_tok, h_tok, _), _ = _header_tokens(head[2:], 3)
    return int(w_tok), int(h_tok)


def draw_boxes(image, boxes, color=(255, 0, 0), thickness=2):
    """Return a copy with box outlines burned in; boxes are absolute xyxy."""
    px = image.pixels.copy()
    h, w = px.shape[:2]
    for x1, y1, x2, y2 in boxes:
        x1, x2 = sorted((int(round(x1)), int(round(x2))))
        y1, y2 = sorted((int(round(y1)), int(round(y2))))
        x1, x2 = max(0, x1), min(w - 1, x2)
        y1, y2 = max(0, y1), min(h - 1, y2)
        if x1 > x2 or y1 > y2:
            continue
        t = thickness
        px[y1 : min(y1 + t, y2 + 1), x1 : x2 + 1] = color
        px[max(y2 - t + 1, y1) : y2 + 1, x1 : x2 + 1] = color
        px[y1 : y2 + 1, x1 : min(x1 + t, x2 + 1)] = color
        px[y1 : y2 + 1, max(x2 - t + 1, x1) : x2 + 1] = color
    return Image(px)
