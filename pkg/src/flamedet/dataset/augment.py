"""Seeded augmentations: flip, crop, occlusion, Gaussian noise, brightness.

Every op is a pure function of ``(image, annotations, op)``; the same op
with the same seed always produces the same output.
"""

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .imageio import Image
from .labels import Annotation

KINDS = ("hflip", "crop", "occlude", "noise", "brightness")

DEFAULTS = {
    "crop": {"min_scale": 0.6, "max_scale": 1.0, "min_keep": 0.25},
    "occlude": {"min_count": 1, "max_count": 3, "min_area": 0.05, "max_area": 0.15, "fill_value": 114},
    "noise": {"min_sigma": 5.0, "max_sigma": 20.0},
    "brightness": {"min_factor": 0.6, "max_factor": 1.4},
    "hflip": {},
}


@dataclass(frozen=True)
class AugmentOp:
    kind: str
    rng_seed: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown augmentation {self.kind!r}; expected one of {KINDS}")
        unknown = set(self.params) - set(DEFAULTS[self.kind])
        if unknown:
            raise ValueError(f"unknown parameters for {self.kind}: {sorted(unknown)}")

    def param(self, name):
        return self.params.get(name, DEFAULTS[self.kind][name])


def derive_seed(global_seed, filename):
    """Per-file seed independent of processing order."""
    digest = hashlib.sha256(f"{global_seed}:{filename}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def _flip_coord(v):
    # snapping to 12 decimals makes the flip an involution on decimal inputs
    return round(1.0 - v, 12)


def hflip(image, anns):
    px = np.ascontiguousarray(image.pixels[:, ::-1])
    return Image(px), [Annotation(a.class_id, _flip_coord(a.cx), a.cy, a.w, a.h) for a in anns]


def crop(image, anns, rng, min_scale=0.6, max_scale=1.0, min_keep=0.25):
    W, H = image.width, image.height
    cw = max(1, min(W, round(W * rng.uniform(min_scale, max_scale))))
    ch = max(1, min(H, round(H * rng.uniform(min_scale, max_scale))))
    x0 = int(rng.integers(0, W - cw + 1))
    y0 = int(rng.integers(0, H - ch + 1))
    px = image.pixels[y0 : y0 + ch, x0 : x0 + cw]
    out = []
    for a in anns:
        bx1, bx2 = (a.cx - a.w / 2) * W, (a.cx + a.w / 2) * W
        by1, by2 = (a.cy - a.h / 2) * H, (a.cy + a.h / 2) * H
        area = (bx2 - bx1) * (by2 - by1)
        nx1, nx2 = max(bx1, x0), min(bx2, x0 + cw)
        ny1, ny2 = max(by1, y0), min(by2, y0 + ch)
        if nx2 <= nx1 or ny2 <= ny1:
            continue
        if (nx2 - nx1) * (ny2 - ny1) < min_keep * area:
            continue
        out.append(
            Annotation(
                a.class_id,
                ((nx1 + nx2) / 2 - x0) / cw,
                ((ny1 + ny2) / 2 - y0) / ch,
                (nx2 - nx1) / cw,
                (ny2 - ny1) / ch,
            )
        )
    return Image(px), out


def _rect_size(rng, W, H, min_area, max_area):
    total = W * H
    target = rng.uniform(min_area, max_area) * total
    aspect = math.exp(rng.uniform(math.log(0.5), math.log(2.0)))
    rw = int(min(W, max(1, round(math.sqrt(target * aspect)))))
    rh = int(min(H, max(1, round(target / rw))))
    # nudge into [min_area, max_area] after integer rounding
    while rw * rh < min_area * total and (rh < H or rw < W):
        if rh < H:
            rh += 1
        else:
            rw += 1
    while rw * rh > max_area * total and rh > 1:
        rh -= 1
    return rw, rh


def occlude(image, anns, rng, min_count=1, max_count=3, min_area=0.05, max_area=0.15, fill_value=114):
    """Paint 1-3 separated rectangles with random RGB noise or a constant gray."""
    W, H = image.width, image.height
    px = image.pixels.copy()
    placed = []
    for _ in range(int(rng.integers(min_count, max_count + 1))):
        rw, rh = _rect_size(rng, W, H, min_area, max_area)
        for _attempt in range(100):
            x = int(rng.integers(0, W - rw + 1))
            y = int(rng.integers(0, H - rh + 1))
            # keep a one-pixel gap so every rectangle stays its own component
            if all(x > px2 or x + rw < px1 or y > py2 or y + rh < py1 for px1, py1, px2, py2 in placed):
                break
        else:
            continue
        placed.append((x, y, x + rw, y + rh))
        if rng.random() < 0.5:
            px[y : y + rh, x : x + rw] = rng.integers(0, 256, size=(rh, rw, 3), dtype=np.uint8)
        else:
            px[y : y + rh, x : x + rw] = fill_value
    return Image(px), list(anns)


def noise(image, anns, rng, min_sigma=5.0, max_sigma=20.0):
    sigma = rng.uniform(min_sigma, max_sigma)
    noisy = image.pixels.astype(np.float64) + rng.normal(0.0, sigma, size=image.pixels.shape)
    return Image(np.clip(np.rint(noisy), 0, 255).astype(np.uint8)), list(anns)


def brightness(image, anns, rng, min_factor=0.6, max_factor=1.4):
    factor = rng.uniform(min_factor, max_factor)
    out = np.clip(np.rint(image.pixels.astype(np.float64) * factor), 0, 255).astype(np.uint8)
    return Image(out), list(anns)


def augment(image, annotations, op):
    """Apply ``op``; returns a new ``(Image, annotations)`` pair."""
    if op.kind == "hflip":
        return hflip(image, annotations)
    rng = np.random.default_rng(op.rng_seed)
    kwargs = {k: op.param(k) for k in DEFAULTS[op.kind]}
    fn = {"crop": crop, "occlude": occlude, "noise": noise, "brightness": brightness}[op.kind]
    return fn(image, annotations, rng, **kwargs)
