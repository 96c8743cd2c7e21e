# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Mirrors ``_pykernels`` exactly."""
import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY
from libc.string cimport memset

cnp.import_array()


def im2col(const float[:, :, ::1] x, int k, int stride, int pad):
    cdef Py_ssize_t c = x.shape[0], h = x.shape[1], w = x.shape[2]
    cdef Py_ssize_t oh = (h + 2 * pad - k) // stride + 1
    cdef Py_ssize_t ow = (w + 2 * pad - k) // stride + 1
    out = np.empty((c * k * k, oh * ow), dtype=np.float64)
    cdef double[:, ::1] cols = out
    cdef Py_ssize_t ci, ki, kj, oi, oj, ii, lo, hi, off
    cdef double *dst
    cdef const float *src
    with nogil:
        for ci in range(c):
            for ki in range(k):
                for kj in range(k):
                    off = kj - pad
                    # output columns whose input column oj*stride + off lies in [0, w)
                    lo = 0 if off >= 0 else (-off + stride - 1) // stride
                    hi = (w - 1 - off) // stride + 1 if w - 1 - off >= 0 else 0
                    if hi > ow:
                        hi = ow
                    if lo > hi:
                        lo = hi
                    for oi in range(oh):
                        ii = oi * stride + ki - pad
                        dst = &cols[(ci * k + ki) * k + kj, oi * ow]
                        if ii < 0 or ii >= h:
                            memset(dst, 0, ow * sizeof(double))
                            continue
                        if lo > 0:
                            memset(dst, 0, lo * sizeof(double))
                        if hi < ow:
                            memset(dst + hi, 0, (ow - hi) * sizeof(double))
                        src = &x[ci, ii, 0]
                        if stride == 1:
                            src = src + off
                            for oj in range(lo, hi):
                                dst[oj] = src[oj]
                        else:
                            for oj in range(lo, hi):
                                dst[oj] = src[oj * stride + off]
    return out


def max_pool2d(const float[:, :, :, ::1] x, int k, int stride, int pad):
    cdef Py_ssize_t n = x.shape[0], c = x.shape[1], h = x.shape[2], w = x.shape[3]
    cdef Py_ssize_t oh = (h + 2 * pad - k) // stride + 1
    cdef Py_ssize_t ow = (w + 2 * pad - k) // stride + 1
    out = np.empty((n, c, oh, ow), dtype=np.float32)
    cdef float[:, :, :, ::1] y = out
    # row-max buffer over the padded height
    rows_arr = np.empty((h, ow), dtype=np.float32)
    cdef float[:, ::1] rows = rows_arr
    cdef Py_ssize_t b, ci, i, oi, oj, t, jj, ii
    cdef float m, v
    with nogil:
        for b in range(n):
            for ci in range(c):
                for i in range(h):
                    for oj in range(ow):
                        m = -INFINITY
                        for t in range(k):
                            jj = oj * stride + t - pad
                            if 0 <= jj < w:
                                v = x[b, ci, i, jj]
                                if v > m:
                                    m = v
                        rows[i, oj] = m
                for oi in range(oh):
                    for oj in range(ow):
                        m = -INFINITY
                        for t in range(k):
                            ii = oi * stride + t - pad
                            if 0 <= ii < h:
                                v = rows[ii, oj]
                                if v > m:
                                    m = v
                        y[b, ci, oi, oj] = m
    return out


cdef inline double _iou(double ax1, double ay1, double ax2, double ay2,
                        double bx1, double by1, double bx2, double by2) nogil:
    cdef double iw = (ax2 if ax2 < bx2 else bx2) - (ax1 if ax1 > bx1 else bx1)
    cdef double ih = (ay2 if ay2 < by2 else by2) - (ay1 if ay1 > by1 else by1)
    if iw < 0.0:
        iw = 0.0
    if ih < 0.0:
        ih = 0.0
    cdef double inter = iw * ih
    cdef double union = (ax2 - ax1) * (ay2 - ay1) + (bx2 - bx1) * (by2 - by1) - inter
    if union > 0.0:
        return inter / union
    return 0.0


def box_iou_matrix(a, b):
    cdef const double[:, ::1] A = np.ascontiguousarray(a, dtype=np.float64).reshape(-1, 4)
    cdef const double[:, ::1] B = np.ascontiguousarray(b, dtype=np.float64).reshape(-1, 4)
    out = np.empty((A.shape[0], B.shape[0]), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j
    with nogil:
        for i in range(A.shape[0]):
            for j in range(B.shape[0]):
                o[i, j] = _iou(A[i, 0], A[i, 1], A[i, 2], A[i, 3],
                               B[j, 0], B[j, 1], B[j, 2], B[j, 3])
    return out


def nms_sorted(boxes, double iou_thresh):
    cdef const double[:, ::1] bx = np.ascontiguousarray(boxes, dtype=np.float64).reshape(-1, 4)
    cdef Py_ssize_t n = bx.shape[0]
    supp_arr = np.zeros(n, dtype=np.uint8)
    keep_arr = np.empty(n, dtype=np.int64)
    cdef unsigned char[::1] supp = supp_arr
    cdef long long[::1] keep = keep_arr
    cdef Py_ssize_t i, j, nk = 0
    with nogil:
        for i in range(n):
            if supp[i]:
                continue
            keep[nk] = i
            nk += 1
            for j in range(i + 1, n):
                if not supp[j] and _iou(bx[i, 0], bx[i, 1], bx[i, 2], bx[i, 3],
                                        bx[j, 0], bx[j, 1], bx[j, 2], bx[j, 3]) > iou_thresh:
                    supp[j] = 1
    return keep_arr[:nk].copy()
