"""YOLO text labels: one ``class cx cy w h`` line per box, normalised."""

from dataclasses import dataclass

from ..errors import LabelParseError
from ..losses import Box

FIELDS = ("cx", "cy", "w", "h")


@dataclass(frozen=True)
class Annotation:
    class_id: int
    cx: float
    cy: float
    w: float
    h: float

    def clamped(self):
        """Same box with its extent clipped into the unit square."""
        inside_x = 0 <= self.cx - self.w / 2 and self.cx + self.w / 2 <= 1
        inside_y = 0 <= self.cy - self.h / 2 and self.cy + self.h / 2 <= 1
        if inside_x and inside_y:
            return self
        x1, x2 = max(0.0, self.cx - self.w / 2), min(1.0, self.cx + self.w / 2)
        y1, y2 = max(0.0, self.cy - self.h / 2), min(1.0, self.cy + self.h / 2)
        return Annotation(self.class_id, (x1 + x2) / 2, (y1 + y2) / 2, x2 - x1, y2 - y1)


def parse_labels(text, path=None):
    anns = []
    for lineno, line in enumerate(text.splitlines(), 1):
        parts = line.split()
        if not parts:
            continue
        if len(parts) != 5:
            raise LabelParseError(f"expected 5 fields, got {len(parts)}", lineno, path)
        try:
            cls_f = float(parts[0])
            vals = [float(p) for p in parts[1:]]
        except ValueError:
            raise LabelParseError(f"non-numeric field in {line.strip()!r}", lineno, path) from None
        if cls_f != int(cls_f) or cls_f < 0:
            raise LabelParseError(f"class id must be a non-negative integer, got {parts[0]}", lineno, path)
        for name, v in zip(FIELDS, vals):
            if not 0.0 <= v <= 1.0:
                raise LabelParseError(f"{name} out of range [0, 1]: {v}", lineno, path)
        if vals[2] <= 0 or vals[3] <= 0:
            raise LabelParseError("box width and height must be positive", lineno, path)
        anns.append(Annotation(int(cls_f), *vals))
    return anns


def _fit6(center, size):
    # round to the written precision, then shrink so the rounded box still fits
    c, s = round(center, 6), round(size, 6)
    while s > 1e-6 and (c - s / 2 < 0 or c + s / 2 > 1):
        s = round(s - 1e-6, 6)
    return c, s


def write_labels(annotations):
    lines = []
    for a in annotations:
        c = a.clamped()
        cx, w = _fit6(c.cx, c.w)
        cy, h = _fit6(c.cy, c.h)
        lines.append(f"{c.class_id} {cx:.6f} {cy:.6f} {w:.6f} {h:.6f}")
    return "".join(line + "\n" for line in lines)


def read_label_file(path):
    with open(path, encoding="utf-8") as f:
        return parse_labels(f.read(), path=path)


def write_label_file(path, annotations):
    with open(path, "w", encoding="utf-8") as f:
        f.write(write_labels(annotations))


def cxcywh_to_xyxy(a, img_w, img_h):
    return Box(
        (a.cx - a.w / 2) * img_w,
        (a.cy - a.h / 2) * img_h,
        (a.cx + a.w / 2) * img_w,
        (a.cy + a.h / 2) * img_h,
    )


def xyxy_to_cxcywh(box, img_w, img_h, class_id=0):
    x1, y1, x2, y2 = box
    return Annotation(
        class_id,
        (x1 + x2) / 2 / img_w,
        (y1 + y2) / 2 / img_h,
        (x2 - x1) / img_w,
        (y2 - y1) / img_h,
    )
