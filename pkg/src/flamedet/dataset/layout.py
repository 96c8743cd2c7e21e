"""On-disk dataset layout, validation and the key: value dataset config.

Layout::

    <root>/images/{train,val,test}/*.ppm
    <root>/labels/{train,val,test}/*.txt
"""

import os
from dataclasses import dataclass, field

from ..errors import FormatError, LabelParseError
from .labels import read_label_file
from .split import SPLITS

IMAGE_EXT = ".ppm"
LABEL_EXT = ".txt"


@dataclass(frozen=True)
class Violation:
    path: str
    message: str
    line: int = None

    def __str__(self):
        where = self.path if self.line is None else f"{self.path}:{self.line}"
        return f"{where}: {self.message}"


@dataclass
class ValidationReport:
    counts: dict = field(default_factory=dict)  # split -> images
    boxes: dict = field(default_factory=dict)  # class -> box count
    mean_size: dict = field(default_factory=dict)  # class -> (mean w, mean h), normalised
    violations: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations

    def lines(self):
        out = [f"{s}_images: {self.counts.get(s, 0)}" for s in SPLITS]
        for c in sorted(self.boxes):
            mw, mh = self.mean_size[c]
            out.append(f"class_{c}_boxes: {self.boxes[c]}")
            out.append(f"class_{c}_mean_wh: {mw:.6f} {mh:.6f}")
        out.append(f"violations: {len(self.violations)}")
        out += [f"violation: {v}" for v in self.violations]
        return out


def _stems(directory, ext):
    if not os.path.isdir(directory):
        return None
    return {
        os.path.splitext(f)[0]: os.path.join(directory, f) for f in sorted(os.listdir(directory)) if f.endswith(ext)
    }


def validate_dataset(root):
    report = ValidationReport()
    sums = {}
    for split in SPLITS:
        img_dir = os.path.join(root, "images", split)
        lbl_dir = os.path.join(root, "labels", split)
        images = _stems(img_dir, IMAGE_EXT)
        labels = _stems(lbl_dir, LABEL_EXT)
        if images is None:
            report.violations.append(Violation(img_dir, "missing directory"))
        if labels is None:
            report.violations.append(Violation(lbl_dir, "missing directory"))
        images, labels = images or {}, labels or {}
        report.counts[split] = len(images)
        for stem in sorted(set(images) - set(labels)):
            report.violations.append(Violation(images[stem], "image has no label file"))
        for stem in sorted(set(labels) - set(images)):
            report.violations.append(Violation(labels[stem], "orphan label file (no image)"))
        for stem in sorted(labels):
            try:
                anns = read_label_file(labels[stem])
            except LabelParseError as exc:
                report.violations.append(Violation(labels[stem], exc.reason, exc.line))
                continue
            for a in anns:
                report.boxes[a.class_id] = report.boxes.get(a.class_id, 0) + 1
                sw, sh = sums.get(a.class_id, (0.0, 0.0))
                sums[a.class_id] = (sw + a.w, sh + a.h)
    for c, n in report.boxes.items():
        report.mean_size[c] = (sums[c][0] / n, sums[c][1] / n)
    return report


CONFIG_KEYS = ("root", "train", "val", "test", "nc", "names")


def read_config(path):
    """Parse a ``key: value`` dataset config (root, train, val, test, nc, names)."""
    cfg = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition(":")
            key, value = key.strip(), value.strip()
            if not sep or key not in CONFIG_KEYS:
                raise FormatError(f"{path}:{lineno}: expected one of {CONFIG_KEYS} as 'key: value'")
            cfg[key] = value
    if "nc" in cfg:
        cfg["nc"] = int(cfg["nc"])
    if "names" in cfg:
        cfg["names"] = [n.strip() for n in cfg["names"].split(",") if n.strip()]
        if "nc" in cfg and len(cfg["names"]) != cfg["nc"]:
            raise FormatError(f"{path}: nc={cfg['nc']} but {len(cfg['names'])} names")
    return cfg


def write_config(path, root, nc=1, names=("flame",)):
    lines = [
        f"root: {root}",
        "train: images/train",
        "val: images/val",
        "test: images/test",
        f"nc: {nc}",
        f"names: {', '.join(names)}",
    ]
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")
