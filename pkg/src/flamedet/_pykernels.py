"""Pure NumPy versions of the hot kernels.

Same signatures and bit-identical results as the compiled ``_ckernels``
module; used whenever the extension is unavailable.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def im2col(x, k, stride, pad):
    """Unfold a (C, H, W) float32 map into (C*k*k, OH*OW) float64 columns.

    Row order is (c, ki, kj) with kj fastest, matching a flattened
    (C_out, C_in, k, k) weight.
    """
    c, h, w = x.shape
    oh = (h + 2 * pad - k) // stride + 1
    ow = (w + 2 * pad - k) // stride + 1
    if pad:
        x = np.pad(x, ((0, 0), (pad, pad), (pad, pad)))
    win = sliding_window_view(x, (k, k), axis=(1, 2))
    win = win[:, : (oh - 1) * stride + 1 : stride, : (ow - 1) * stride + 1 : stride]
    # (c, oh, ow, k, k) -> (c, k, k, oh, ow)
    cols = np.empty((c, k, k, oh, ow), dtype=np.float64)
    cols[...] = win.transpose(0, 3, 4, 1, 2)
    return cols.reshape(c * k * k, oh * ow)


def max_pool2d(x, k, stride, pad):
    n, c, h, w = x.shape
    oh = (h + 2 * pad - k) // stride + 1
    ow = (w + 2 * pad - k) // stride + 1
    if pad:
        x = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)), constant_values=-np.inf)
    # separable max: rows then columns
    rows = sliding_window_view(x, k, axis=3)[:, :, :, : (ow - 1) * stride + 1 : stride].max(axis=-1)
    out = sliding_window_view(rows, k, axis=2)[:, :, : (oh - 1) * stride + 1 : stride].max(axis=-1)
    return np.ascontiguousarray(out, dtype=np.float32)


def box_iou_matrix(a, b):
    a = np.asarray(a, dtype=np.float64).reshape(-1, 4)
    b = np.asarray(b, dtype=np.float64).reshape(-1, 4)
    iw = np.minimum(a[:, None, 2], b[None, :, 2]) - np.maximum(a[:, None, 0], b[None, :, 0])
    ih = np.minimum(a[:, None, 3], b[None, :, 3]) - np.maximum(a[:, None, 1], b[None, :, 1])
    inter = np.clip(iw, 0.0, None) * np.clip(ih, 0.0, None)
    area_a = (a[:, 2] - a[:, 0]) * (a[:, 3] - a[:, 1])
    area_b = (b[:, 2] - b[:, 0]) * (b[:, 3] - b[:, 1])
    union = area_a[:, None] + area_b[None, :] - inter
    out = np.zeros_like(inter)
    np.divide(inter, union, out=out, where=union > 0)
    return out


def nms_sorted(boxes, iou_thresh):
    """Greedy suppression over boxes already in priority order.

    Returns the kept row indices in that same order.
    """
    boxes = np.asarray(boxes, dtype=np.float64).reshape(-1, 4)
    n = len(boxes)
    suppressed = np.zeros(n, dtype=bool)
    keep = []
    for i in range(n):
        if suppressed[i]:
            continue
        keep.append(i)
        if i + 1 < n:
            ious = box_iou_matrix(boxes[i : i + 1], boxes[i + 1 :])[0]
            suppressed[i + 1 :] |= ious > iou_thresh
    return np.asarray(keep, dtype=np.int64)
