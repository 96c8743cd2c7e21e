"""Detection evaluation (matching, P/R/F1, AP, mAP) and an FPS harness."""

import statistics
import time
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import kernels
from .losses import Box

IOU_THRESHOLDS = tuple(round(0.5 + 0.05 * i, 2) for i in range(10))
# division, not linspace: keeps i/100 correctly rounded so exact recalls compare right
RECALL_POINTS = np.arange(101) / 100


class GroundTruth(NamedTuple):
    box: Box
    class_id: int


class Scored(NamedTuple):
    """One matched prediction: the fields the PR curve needs."""

    score: float
    class_id: int
    tp: bool
    image: int
    box: tuple


@dataclass
class MatchResult:
    records: list
    fn: int
    n_gt: dict  # class_id -> ground-truth count

    @property
    def tp(self):
        return sum(r.tp for r in self.records)

    @property
    def fp(self):
        return len(self.records) - self.tp


@dataclass
class EvalReport:
    precision: float
    recall: float
    f1: float
    ap_per_threshold: dict
    map50: float
    map50_95: float
    tp: int
    fp: int
    fn: int
    n_images: int = 0
    extra: dict = field(default_factory=dict)

    def lines(self):
        """Stable key: value report lines."""
        out = [
            f"images: {self.n_images}",
            f"tp: {self.tp}",
            f"fp: {self.fp}",
            f"fn: {self.fn}",
            f"precision: {self.precision:.6f}",
            f"recall: {self.recall:.6f}",
            f"f1: {self.f1:.6f}",
            f"map50: {self.map50:.6f}",
            f"map50_95: {self.map50_95:.6f}",
        ]
        out += [f"ap@{t:.2f}: {ap:.6f}" for t, ap in sorted(self.ap_per_threshold.items())]
        return out


def _pred_key(d):
    return (-d.score, d.class_id, tuple(d.box))


def match(preds, gts, iou_thresh=0.5):
    """Greedy per-image, per-class matching.

    ``preds`` and ``gts`` are per-image sequences. Predictions are visited
    by descending score and each takes the unmatched ground truth of its
    class with the highest IoU >= ``iou_thresh`` (ties go to the lower
    index). Unmatched ground truths are false negatives.
    """
    records, fn, n_gt = [], 0, {}
    for img, (p_img, g_img) in enumerate(zip(preds, gts, strict=True)):
        for g in g_img:
            n_gt[g.class_id] = n_gt.get(g.class_id, 0) + 1
        ordered = sorted(p_img, key=_pred_key)
        used = [False] * len(g_img)
        if ordered and g_img:
            ious = kernels.box_iou_matrix([tuple(d.box) for d in ordered], [tuple(g.box) for g in g_img])
        for i, d in enumerate(ordered):
            best, best_iou = -1, -1.0
            for j, g in enumerate(g_img):
                if used[j] or g.class_id != d.class_id:
                    continue
                if ious[i, j] >= iou_thresh and ious[i, j] > best_iou:
                    best, best_iou = j, ious[i, j]
            if best >= 0:
                used[best] = True
            records.append(Scored(d.score, d.class_id, best >= 0, img, tuple(d.box)))
        fn += used.count(False)
    return MatchResult(records, fn, n_gt)


def pr_f1(flags, fn_count):
    """Precision, recall and F1 from TP/FP flags and a false-negative count."""
    tp = sum(1 for f in flags if f)
    fp = len(flags) - tp
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn_count) if tp + fn_count else 0.0
    return precision, recall, f1_score(precision, recall)


def f1_score(precision, recall):
    s = precision + recall
    return 2 * precision * recall / s if s > 0 else 0.0


def interpolated_ap(recall, precision, points=RECALL_POINTS):
    """Mean envelope precision at fixed recall points (101 by default)."""
    if len(recall) == 0:
        return 0.0
    envelope = np.maximum.accumulate(np.asarray(precision, dtype=np.float64)[::-1])[::-1]
    idx = np.searchsorted(recall, points, side="left")
    vals = np.where(idx < len(envelope), envelope[np.minimum(idx, len(envelope) - 1)], 0.0)
    return float(vals.mean())


def eleven_point_ap(recall, precision):
    return interpolated_ap(recall, precision, np.arange(11) / 10)


def average_precision(flags, n_gt, interpolate=interpolated_ap):
    """AP of score-ordered TP/FP ``flags`` against ``n_gt`` ground truths."""
    if n_gt == 0:
        return 0.0
    tps = np.asarray(flags, dtype=np.float64)
    ctp = np.cumsum(tps)
    cfp = np.cumsum(1.0 - tps)
    recall = ctp / n_gt
    precision = ctp / np.maximum(ctp + cfp, np.finfo(np.float64).tiny)
    return interpolate(recall, precision)


def _dataset_order(records):
    return sorted(records, key=lambda r: (-r.score, r.image, r.class_id, r.box))


def mean_ap(result, interpolate=interpolated_ap):
    """Mean over classes that have ground truth of their pooled AP."""
    if not result.n_gt:
        return 0.0
    ordered = _dataset_order(result.records)
    aps = []
    for c, n in sorted(result.n_gt.items()):
        flags = [r.tp for r in ordered if r.class_id == c]
        aps.append(average_precision(flags, n, interpolate))
    return float(np.mean(aps))


def map50_95(preds, gts, thresholds=IOU_THRESHOLDS):
    aps = [mean_ap(match(preds, gts, t)) for t in thresholds]
    return aps[0], float(np.mean(aps))


def evaluate(preds, gts, iou_thresh=0.5, thresholds=IOU_THRESHOLDS):
    """Full report; P/R/F1 and counts are taken at ``iou_thresh``."""
    op = match(preds, gts, iou_thresh)
    p, r, f1 = pr_f1([rec.tp for rec in op.records], op.fn)
    ap = {t: mean_ap(match(preds, gts, t)) for t in thresholds}
    return EvalReport(
        precision=p,
        recall=r,
        f1=f1,
        ap_per_threshold=ap,
        map50=ap[thresholds[0]],
        map50_95=float(np.mean(list(ap.values()))),
        tp=op.tp,
        fp=op.fp,
        fn=op.fn,
        n_images=len(gts),
    )


@dataclass
class BenchReport:
    runs: int
    warmup: int
    fps_forward: float
    fps_end_to_end: float
    forward_ms: dict
    end_to_end_ms: dict
    macs: int = 0

    def lines(self):
        out = [
            f"runs: {self.runs}",
            f"warmup: {self.warmup}",
            f"macs: {self.macs}",
            f"fps_forward: {self.fps_forward:.3f}",
            f"fps_end_to_end: {self.fps_end_to_end:.3f}",
        ]
        out += [f"forward_{k}_ms: {v:.3f}" for k, v in self.forward_ms.items()]
        out += [f"end_to_end_{k}_ms: {v:.3f}" for k, v in self.end_to_end_ms.items()]
        return out


def _percentiles(samples):
    arr = np.asarray(samples, dtype=np.float64) * 1e3
    return {f"p{q}": float(np.percentile(arr, q)) for q in (50, 90, 99)}


def fps_bench(graph, weights, runs=100, warmup=10, clock=time.perf_counter, forward_fn=None, image=None):
    """Median-latency FPS of forward alone and of letterbox+forward+postprocess.

    ``clock`` and ``forward_fn`` are injectable so tests can drive the
    harness deterministically.
    """
    from .cost import count_flops
    from .dataset.imageio import Image
    from .dataset.letterbox import letterbox
    from .graph import forward
    from .postprocess import postprocess

    if runs < 1:
        raise ValueError("runs must be >= 1")
    if forward_fn is None:

        def forward_fn(x):
            return forward(graph, weights, x, check=False)

    if image is None:
        image = Image.blank(graph.imgsz, graph.imgsz)
    x, *_ = letterbox(image, graph.imgsz)

    def one_forward():
        t0 = clock()
        forward_fn(x)
        return clock() - t0

    def one_e2e():
        t0 = clock()
        inp, *_ = letterbox(image, graph.imgsz)
        postprocess(forward_fn(inp), graph.reg_max, graph.nc, graph.strides)
        return clock() - t0

    for _ in range(warmup):
        forward_fn(x)
    fwd = [one_forward() for _ in range(runs)]
    e2e = [one_e2e() for _ in range(runs)]
    return BenchReport(
        runs=runs,
        warmup=warmup,
        fps_forward=1.0 / statistics.median(fwd),
        fps_end_to_end=1.0 / statistics.median(e2e),
        forward_ms=_percentiles(fwd),
        end_to_end_ms=_percentiles(e2e),
        macs=count_flops(graph).macs,
    )


def format_predictions(dets):
    """Prediction-file text: ``class_id score x1 y1 x2 y2`` per line, absolute pixels."""
    return "".join(
        f"{d.class_id} {d.score:.6f} {d.box[0]:.2f} {d.box[1]:.2f} {d.box[2]:.2f} {d.box[3]:.2f}\n" for d in dets
    )


def parse_predictions(text, path=None):
    from .errors import FormatError
    from .postprocess import Detection

    dets = []
    for lineno, line in enumerate(text.splitlines(), 1):
        parts = line.split()
        if not parts:
            continue
        if len(parts) != 6:
            raise FormatError(f"{path or '<predictions>'}:{lineno}: expected 6 fields, got {len(parts)}")
        try:
            cls, score, *box = int(parts[0]), *map(float, parts[1:])
        except ValueError:
            raise FormatError(f"{path or '<predictions>'}:{lineno}: malformed prediction line") from None
        dets.append(Detection(Box(*box), score, cls))
    return dets
