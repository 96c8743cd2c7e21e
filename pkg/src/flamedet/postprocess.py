"""Raw head maps -> scored, class-aware, NMS-filtered detections."""

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, softmax

from . import kernels
from .errors import ShapeError
from .losses import Box

CONF_THRESH = 0.25
IOU_THRESH = 0.65


@dataclass(frozen=True)
class Detection:
    box: Box
    score: float
    class_id: int


def _sort_key(d):
    return (-d.score, d.class_id, tuple(d.box))


def decode(raw, reg_max=16, nc=1, strides=(8, 16, 32), conf_thresh=CONF_THRESH, imgsz=None):
    """Decode per-scale (1, 4*reg_max + nc, H, W) maps into detections.

    Each side distance is the softmax expectation over ``reg_max`` bins,
    scaled by the stride; boxes are clipped to ``[0, imgsz]``. ``imgsz``
    defaults to the first map's height times its stride.
    """
    if len(raw) != len(strides):
        raise ShapeError(f"{len(raw)} maps for {len(strides)} strides")
    depth = 4 * reg_max + nc
    if imgsz is None:
        imgsz = raw[0].shape[2] * strides[0]
    dets = []
    bins = np.arange(reg_max, dtype=np.float64)
    for fmap, s in zip(raw, strides):
        fmap = np.asarray(fmap)
        if fmap.ndim != 4 or fmap.shape[0] != 1 or fmap.shape[1] != depth:
            raise ShapeError(f"expected (1, {depth}, H, W) map, got {fmap.shape}")
        _, _, h, w = fmap.shape
        flat = fmap[0].reshape(depth, h * w).astype(np.float64)
        scores = expit(flat[4 * reg_max :])  # (nc, hw)
        cls = scores.argmax(axis=0)
        best = scores[cls, np.arange(h * w)]
        keep = np.nonzero(best >= conf_thresh)[0]
        if keep.size == 0:
            continue
        logits = flat[: 4 * reg_max, keep].reshape(4, reg_max, keep.size)
        dist = softmax(logits, axis=1)
        ltrb = np.einsum("sbk,b->sk", dist, bins) * s
        ii, jj = np.divmod(keep, w)
        ax, ay = (jj + 0.5) * s, (ii + 0.5) * s
        x1 = np.clip(ax - ltrb[0], 0, imgsz)
        y1 = np.clip(ay - ltrb[1], 0, imgsz)
        x2 = np.clip(ax + ltrb[2], 0, imgsz)
        y2 = np.clip(ay + ltrb[3], 0, imgsz)
        for n in range(keep.size):
            dets.append(
                Detection(
                    Box(float(x1[n]), float(y1[n]), float(x2[n]), float(y2[n])),
                    float(best[keep[n]]),
                    int(cls[keep[n]]),
                )
            )
    return dets


def nms(dets, iou_thresh=IOU_THRESH):
    """Class-aware greedy NMS; suppresses same-class boxes with IoU > ``iou_thresh``.

    Output is ordered by descending score, then class id, then box coords.
    """
    ordered = sorted(dets, key=_sort_key)
    by_class = {}
    for d in ordered:
        by_class.setdefault(d.class_id, []).append(d)
    kept = []
    for group in by_class.values():
        boxes = np.array([tuple(d.box) for d in group], dtype=np.float64)
        kept.extend(group[i] for i in kernels.nms_sorted(boxes, iou_thresh))
    return sorted(kept, key=_sort_key)


def postprocess(raw, reg_max=16, nc=1, strides=(8, 16, 32), conf_thresh=CONF_THRESH, iou_thresh=IOU_THRESH):
    return nms(decode(raw, reg_max, nc, strides, conf_thresh), iou_thresh)
