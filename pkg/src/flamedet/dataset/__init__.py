"""YOLO-format dataset tooling: labels, PPM rasters, splits, augmentation."""

from .augment import AugmentOp, augment, derive_seed
from .imageio import Image, draw_boxes, read_ppm, write_ppm
from .labels import Annotation, cxcywh_to_xyxy, parse_labels, write_labels, xyxy_to_cxcywh
from .layout import ValidationReport, read_config, validate_dataset, write_config
from .letterbox import letterbox, unletterbox_box
from .split import SplitManifest, split_dataset

__all__ = [
    "Annotation",
    "AugmentOp",
    "Image",
    "SplitManifest",
    "ValidationReport",
    "augment",
    "cxcywh_to_xyxy",
    "derive_seed",
    "draw_boxes",
    "letterbox",
    "parse_labels",
    "read_config",
    "read_ppm",
    "split_dataset",
    "unletterbox_box",
    "validate_dataset",
    "write_config",
    "write_labels",
    "write_ppm",
    "xyxy_to_cxcywh",
]
