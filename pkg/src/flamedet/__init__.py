"""Lightweight YOLOv8 flame detection engine and analysis toolkit.

NumPy inference for YOLOv8 n/s/m and the ``light`` variant whose C2f
blocks use FasterNet (partial conv + pointwise conv) bottlenecks, plus the
cost model, IoU-family losses, detection metrics and YOLO dataset tools.
"""

__version__ = "0.1.0"

from .cost import count_flops, count_params, pconv_cost
from .graph import build_model, forward
from .kernels import BACKEND as KERNEL_BACKEND
from .postprocess import Detection, decode, nms
from .weights import WeightStore, init_weights, load_weights, save_weights

__all__ = [
    "Detection",
    "KERNEL_BACKEND",
    "WeightStore",
    "build_model",
    "count_flops",
    "count_params",
    "decode",
    "forward",
    "init_weights",
    "load_weights",
    "nms",
    "pconv_cost",
    "save_weights",
]
