"""NCHW float32 tensors and the primitive kernels the network is built from.

A tensor is a plain 4-d ``numpy.ndarray`` of dtype float32. Every function
here is pure and returns a new C-contiguous float32 array.
"""

import numpy as np
from scipy.special import erf, expit

from . import kernels
from .errors import ShapeError

DTYPE = np.float32


def as_tensor(x):
    """Validate ``x`` as a rank-4 tensor and return it as contiguous float32."""
    arr = np.ascontiguousarray(x, dtype=DTYPE)
    if arr.ndim != 4:
        raise ShapeError(f"expected a rank-4 NCHW tensor, got shape {arr.shape}")
    return arr


def zeros(n, c, h, w):
    return np.zeros((n, c, h, w), dtype=DTYPE)


def conv_output_size(size, k, stride, padding):
    return (size + 2 * padding - k) // stride + 1


def conv2d(x, weight, bias=None, stride=1, padding=0):
    """Zero-padded 2-d cross-correlation.

    Accumulates in float64 and rounds the result to float32 once.
    """
    x = as_tensor(x)
    weight = np.asarray(weight, dtype=DTYPE)
    if weight.ndim != 4 or weight.shape[2] != weight.shape[3]:
        raise ShapeError(f"weight must be (c_out, c_in, k, k), got {weight.shape}")
    if stride < 1 or padding < 0:
        raise ShapeError(f"invalid stride={stride} / padding={padding}")
    n, c, h, w = x.shape
    c_out, c_in, k, _ = weight.shape
    if c != c_in:
        raise ShapeError(f"input has {c} channels but weight expects {c_in}")
    if k > h + 2 * padding or k > w + 2 * padding:
        raise ShapeError(f"kernel {k} exceeds padded input {h + 2 * padding}x{w + 2 * padding}")
    if bias is not None:
        bias = np.asarray(bias, dtype=DTYPE)
        if bias.shape != (c_out,):
            raise ShapeError(f"bias must have shape ({c_out},), got {bias.shape}")
    oh = conv_output_size(h, k, stride, padding)
    ow = conv_output_size(w, k, stride, padding)
    wmat = weight.reshape(c_out, c_in * k * k).astype(np.float64)
    out = np.empty((n, c_out, oh, ow), dtype=DTYPE)
    for b in range(n):
        if k == 1 and stride == 1 and padding == 0:
            cols = x[b].reshape(c, h * w).astype(np.float64)
        else:
            cols = kernels.im2col(x[b], k, stride, padding)
        acc = wmat @ cols
        if bias is not None:
            acc += bias.astype(np.float64)[:, None]
        out[b] = acc.reshape(c_out, oh, ow)
    return out


def batch_norm(x, gamma, beta, running_mean, running_var, eps=1e-3):
    """Inference-mode batch normalisation from running statistics."""
    x = as_tensor(x)
    c = x.shape[1]
    params = [np.asarray(p, dtype=DTYPE) for p in (gamma, beta, running_mean, running_var)]
    for p in params:
        if p.shape != (c,):
            raise ShapeError(f"batch_norm parameter of shape {p.shape} does not match {c} channels")
    gamma, beta, mean, var = params
    if np.any(var < 0):
        raise ShapeError("running_var must be non-negative")
    scale = gamma / np.sqrt(var + DTYPE(eps))
    # (x - mean) first so x == mean maps to beta exactly
    y = (x - mean[None, :, None, None]) * scale[None, :, None, None] + beta[None, :, None, None]
    return y.astype(DTYPE, copy=False)


def sigmoid(x):
    return expit(np.asarray(x, dtype=DTYPE))


def silu(x):
    x = np.asarray(x, dtype=DTYPE)
    return x * sigmoid(x)


def gelu(x):
    """Exact GELU, x * Phi(x) with the Gaussian CDF written via erf."""
    x = np.asarray(x, dtype=DTYPE)
    return (x * (DTYPE(0.5) * (DTYPE(1.0) + erf(x * DTYPE(1 / np.sqrt(2)))))).astype(DTYPE, copy=False)


def relu(x):
    x = np.asarray(x, dtype=DTYPE)
    return np.maximum(x, DTYPE(0.0))


ACTIVATIONS = {"silu": silu, "gelu": gelu, "relu": relu, "sigmoid": sigmoid}


def activation(x, kind):
    try:
        fn = ACTIVATIONS[kind]
    except KeyError:
        raise ValueError(f"unknown activation {kind!r}; expected one of {sorted(ACTIVATIONS)}") from None
    return fn(x)


def max_pool2d(x, k, stride=None, padding=0):
    """Sliding-window maximum; padding never wins (it is -inf)."""
    x = as_tensor(x)
    stride = k if stride is None else stride
    if k < 1 or stride < 1 or padding < 0:
        raise ShapeError(f"invalid pooling k={k} stride={stride} padding={padding}")
    h, w = x.shape[2:]
    if k > h + 2 * padding or k > w + 2 * padding:
        raise ShapeError(f"window {k} exceeds padded input {h + 2 * padding}x{w + 2 * padding}")
    return kernels.max_pool2d(x, k, stride, padding)


def upsample_nearest2x(x):
    x = as_tensor(x)
    return np.ascontiguousarray(x.repeat(2, axis=2).repeat(2, axis=3))


def concat_channels(parts):
    if not parts:
        raise ShapeError("concat_channels needs at least one tensor")
    parts = [as_tensor(p) for p in parts]
    n, _, h, w = parts[0].shape
    for p in parts[1:]:
        if (p.shape[0], p.shape[2], p.shape[3]) != (n, h, w):
            raise ShapeError(f"cannot concat {p.shape} with {parts[0].shape}")
    return np.concatenate(parts, axis=1)


def split_channels(x, sizes):
    x = as_tensor(x)
    if sum(sizes) != x.shape[1] or any(s < 0 for s in sizes):
        raise ShapeError(f"split sizes {list(sizes)} do not sum to {x.shape[1]} channels")
    out, start = [], 0
    for s in sizes:
        out.append(np.ascontiguousarray(x[:, start : start + s]))
        start += s
    return out
