"""Aspect-preserving resize + gray padding to a square network input."""

from typing import NamedTuple

import numpy as np

from ..losses import Box

PAD_VALUE = 114


class Letterbox(NamedTuple):
    tensor: np.ndarray  # (1, 3, target, target) float32 in [0, 1]
    scale: float
    pad_x: int
    pad_y: int


def _resize_nearest(px, new_w, new_h):
    h, w = px.shape[:2]
    ys = np.minimum(((np.arange(new_h) + 0.5) * h / new_h).astype(np.int64), h - 1)
    xs = np.minimum(((np.arange(new_w) + 0.5) * w / new_w).astype(np.int64), w - 1)
    return px[ys[:, None], xs[None, :]]


def _resize_bilinear(px, new_w, new_h):
    h, w = px.shape[:2]
    src = px.astype(np.float64)
    fy = np.clip((np.arange(new_h) + 0.5) * h / new_h - 0.5, 0, h - 1)
    fx = np.clip((np.arange(new_w) + 0.5) * w / new_w - 0.5, 0, w - 1)
    y0, x0 = np.floor(fy).astype(np.int64), np.floor(fx).astype(np.int64)
    y1, x1 = np.minimum(y0 + 1, h - 1), np.minimum(x0 + 1, w - 1)
    wy, wx = (fy - y0)[:, None, None], (fx - x0)[None, :, None]
    top = src[y0][:, x0] * (1 - wx) + src[y0][:, x1] * wx
    bot = src[y1][:, x0] * (1 - wx) + src[y1][:, x1] * wx
    return np.clip(np.rint(top * (1 - wy) + bot * wy), 0, 255).astype(np.uint8)


def letterbox(image, target=640, bilinear=False):
    """Resize so the long side equals ``target`` and pad centrally with 114.

    Returns the network tensor plus the ``scale``, ``pad_x`` and ``pad_y``
    needed by :func:`unletterbox_box`.
    """
    w, h = image.width, image.height
    if w < 1 or h < 1:
        raise ValueError("cannot letterbox an empty image")
    scale = target / max(w, h)
    new_w = min(target, max(1, round(w * scale)))
    new_h = min(target, max(1, round(h * scale)))
    resize = _resize_bilinear if bilinear else _resize_nearest
    resized = resize(image.pixels, new_w, new_h) if (new_w, new_h) != (w, h) else image.pixels
    pad_x = (target - new_w) // 2
    pad_y = (target - new_h) // 2
    canvas = np.full((target, target, 3), PAD_VALUE, np.uint8)
    canvas[pad_y : pad_y + new_h, pad_x : pad_x + new_w] = resized
    tensor = (canvas.transpose(2, 0, 1)[None].astype(np.float32) / np.float32(255.0)).copy()
    return Letterbox(tensor, scale, pad_x, pad_y)


def unletterbox_box(box, scale, pad_x, pad_y, img_w=None, img_h=None):
    """Map a box from network-input space back to the original image."""
    x1, y1, x2, y2 = box
    out = [(x1 - pad_x) / scale, (y1 - pad_y) / scale, (x2 - pad_x) / scale, (y2 - pad_y) / scale]
    if img_w is not None:
        out[0], out[2] = (min(max(v, 0.0), img_w) for v in (out[0], out[2]))
    if img_h is not None:
        out[1], out[3] = (min(max(v, 0.0), img_h) for v in (out[1], out[3]))
    return Box(*out)


def letterbox_box(box, scale, pad_x, pad_y):
    x1, y1, x2, y2 = box
    return Box(x1 * scale + pad_x, y1 * scale + pad_y, x2 * scale + pad_x, y2 * scale + pad_y)
