"""Box-regression and classification losses as pure scalar functions.

Boxes are ``(x1, y1, x2, y2)`` in absolute units. Nothing here computes
gradients; these are evaluators for comparison and testing.
"""

import math
from typing import NamedTuple

from .errors import DomainError

CE_EPS = 1e-7
IOU_KINDS = ("iou", "giou", "diou", "ciou", "eiou")


class Box(NamedTuple):
    x1: float
    y1: float
    x2: float
    y2: float

    @property
    def width(self):
        return self.x2 - self.x1

    @property
    def height(self):
        return self.y2 - self.y1

    @property
    def area(self):
        return self.width * self.height

    @property
    def center(self):
        return (self.x1 + self.x2) / 2, (self.y1 + self.y2) / 2


def ce_loss(y, y_hat, eps=CE_EPS):
    """Binary cross entropy with the prediction clamped to [eps, 1 - eps]."""
    p = min(max(float(y_hat), eps), 1.0 - eps)
    return -y * math.log(p) - (1 - y) * math.log(1.0 - p)


def _overlap(a, b):
    iw = max(0.0, min(a.x2, b.x2) - max(a.x1, b.x1))
    ih = max(0.0, min(a.y2, b.y2) - max(a.y1, b.y1))
    inter = iw * ih
    return inter, a.area + b.area - inter


def iou(a, b):
    a, b = Box(*a), Box(*b)
    inter, union = _overlap(a, b)
    return inter / union if union > 0 else 0.0


def _enclosing(a, b):
    return Box(min(a.x1, b.x1), min(a.y1, b.y1), max(a.x2, b.x2), max(a.y2, b.y2))


def _center_dist2(a, b):
    (ax, ay), (bx, by) = a.center, b.center
    return (ax - bx) ** 2 + (ay - by) ** 2


def aspect_penalty(pred, gt):
    """v = 4/pi^2 (atan(w_gt/h_gt) - atan(w/h))^2; zero-height boxes count as atan = pi/2."""

    def ang(bx):
        return math.atan2(bx.width, bx.height)

    return 4.0 / math.pi**2 * (ang(gt) - ang(pred)) ** 2


def iou_variant(kind, pred, gt):
    """Similarity value of ``kind``; for eiou the loss itself is returned.

    giou, diou, ciou lie in (-1, 1] with loss = 1 - value. eiou is only
    defined through its additive penalty form, so ``iou_variant("eiou", ...)``
    returns the loss ``1 - IoU + rho^2/c^2 + dw^2/cw^2 + dh^2/ch^2``.
    """
    pred, gt = Box(*pred), Box(*gt)
    inter, union = _overlap(pred, gt)
    value = inter / union if union > 0 else 0.0
    if kind == "iou":
        return value
    enc = _enclosing(pred, gt)
    if kind == "giou":
        if enc.area <= 0:
            return 0.0
        return value - (enc.area - union) / enc.area
    c2 = enc.width**2 + enc.height**2
    if c2 <= 0:
        return 0.0
    rho2 = _center_dist2(pred, gt)
    if kind == "diou":
        return value - rho2 / c2
    if kind == "ciou":
        v = aspect_penalty(pred, gt)
        alpha = v / ((1.0 - value) + v) if v > 0 else 0.0
        return value - (rho2 / c2 + alpha * v)
    if kind == "eiou":
        loss = 1.0 - value + rho2 / c2
        if enc.width > 0:
            loss += (pred.width - gt.width) ** 2 / enc.width**2
        if enc.height > 0:
            loss += (pred.height - gt.height) ** 2 / enc.height**2
        return loss
    raise ValueError(f"unknown IoU variant {kind!r}; expected one of {IOU_KINDS}")


def iou_loss(kind, pred, gt):
    """Regression loss for any IoU-family ``kind``."""
    if kind == "eiou":
        return iou_variant(kind, pred, gt)
    return 1.0 - iou_variant(kind, pred, gt)


def dfl_loss(dist, target):
    """Interpolated negative log-likelihood of ``target`` under a bin distribution."""
    dist = [float(p) for p in dist]
    reg_max = len(dist)
    if reg_max < 2:
        raise DomainError("distribution needs at least two bins")
    if abs(sum(dist) - 1.0) > 1e-6:
        raise DomainError(f"distribution sums to {sum(dist)}, not 1")
    if not 0 <= target <= reg_max - 1:
        raise DomainError(f"target {target} outside [0, {reg_max - 1}]")
    lo = math.floor(target)
    hi = math.ceil(target)
    if lo == hi:
        return -math.log(dist[lo]) if dist[lo] > 0 else math.inf
    w_lo, w_hi = hi - target, target - lo
    total = 0.0
    for wgt, p in ((w_lo, dist[lo]), (w_hi, dist[hi])):
        if wgt > 0:
            total -= wgt * (math.log(p) if p > 0 else -math.inf)
    return total
