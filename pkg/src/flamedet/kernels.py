"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the NumPy
fallback. Set ``FLAMEDET_KERNELS=python`` to force the fallback.
"""

import os

from . import _pykernels

BACKENDS = {"python": _pykernels}

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None
else:
    BACKENDS["cython"] = _ckernels


def _select():
    wanted = os.environ.get("FLAMEDET_KERNELS", "").strip().lower()
    if wanted:
        if wanted not in BACKENDS:
            raise ImportError(f"FLAMEDET_KERNELS={wanted!r} is not available; have {sorted(BACKENDS)}")
        return wanted
    return "cython" if "cython" in BACKENDS else "python"


BACKEND = _select()
_impl = BACKENDS[BACKEND]

im2col = _impl.im2col
max_pool2d = _impl.max_pool2d
box_iou_matrix = _impl.box_iou_matrix
nms_sorted = _impl.nms_sorted


def get_backend(name):
    """Return the kernel module registered under ``name``."""
    return BACKENDS[name]
