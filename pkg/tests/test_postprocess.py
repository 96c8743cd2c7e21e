import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flamedet import kernels
from flamedet.errors import ShapeError
from flamedet.losses import Box
from flamedet.postprocess import Detection, decode, nms

REG = 16


def maps(rng, nc=1, sizes=(8, 4, 2), scale=3.0):
    return [rng.normal(0, scale, (1, 4 * REG + nc, s, s)).astype(np.float32) for s in sizes]


def test_uniform_logits_half_range():
    for s, n in ((8, 8), (16, 4), (32, 2)):
        raw = np.zeros((1, 4 * REG + 1, n, n), np.float32)
        raw[0, 4 * REG :] = 10.0
        dets = decode([raw], REG, 1, strides=(s,), imgsz=10_000)
        assert len(dets) == n * n
        half = s * (REG - 1) / 2
        unclipped = [d for d in dets if d.box.x1 > 0 and d.box.y1 > 0]
        for d in unclipped:
            assert d.box.width == pytest.approx(2 * half)
            assert d.box.height == pytest.approx(2 * half)
            cx, _ = d.box.center
            assert cx / s - 0.5 == pytest.approx(round(cx / s - 0.5))
        # x2 is never clipped here, so every anchor is x2 - half
        anchors = sorted({d.box.x2 - half for d in dets})
        assert anchors == pytest.approx([(j + 0.5) * s for j in range(n)])


def test_one_hot_bin0_zero_size():
    raw = [np.full((1, 4 * REG + 1, n, n), -50.0, np.float32) for n in (4, 2, 1)]
    for r in raw:
        r[0, 0 : 4 * REG : REG] = 50.0
        r[0, 4 * REG :] = 5.0
    dets = decode(raw, REG, 1)
    assert len(dets) == 21
    anchors = {(d.box.x1, d.box.y1) for d in dets}
    for d in dets:
        assert d.box.x1 == d.box.x2 and d.box.y1 == d.box.y2
    assert (4.0, 4.0) in anchors and (16.0, 16.0) in anchors


def test_conf_above_one_empty(rng):
    raw = maps(rng)
    for r in raw:
        r[0, 4 * REG :] = 80.0
    assert decode(raw, REG, 1, conf_thresh=1.0 + 1e-9) == []


def test_channel_mismatch():
    with pytest.raises(ShapeError):
        decode([np.zeros((1, 60, 2, 2), np.float32)] * 3, REG, 1)
    with pytest.raises(ShapeError):
        decode([np.zeros((1, 65, 2, 2), np.float32)] * 2, REG, 1)


def test_decode_invariants(rng):
    raw = maps(rng, nc=3)
    dets = decode(raw, REG, 3, conf_thresh=0.3, imgsz=64)
    assert dets
    for d in dets:
        b = d.box
        assert 0 <= b.x1 <= b.x2 <= 64 and 0 <= b.y1 <= b.y2 <= 64
        assert 0.3 <= d.score <= 1 and 0 <= d.class_id < 3


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.05, 0.95), st.floats(0.05, 0.95))
def test_decode_monotone_in_threshold(seed, t1, t2):
    lo, hi = sorted((t1, t2))
    raw = maps(np.random.default_rng(seed), nc=2)
    a = set(decode(raw, REG, 2, conf_thresh=lo))
    b = set(decode(raw, REG, 2, conf_thresh=hi))
    assert b <= a


def test_nms_examples():
    a = Detection(Box(0, 0, 10, 10), 0.9, 0)
    b = Detection(Box(0, 0, 10, 10), 0.8, 0)
    c = Detection(Box(20, 20, 30, 30), 0.7, 0)
    assert nms([b, a]) == [a]
    assert nms([c, a]) == [a, c]
    other = Detection(Box(0, 0, 10, 10), 0.8, 1)
    assert nms([a, other]) == [a, other]


def _iou(p, q):
    iw = max(0.0, min(p[2], q[2]) - max(p[0], q[0]))
    ih = max(0.0, min(p[3], q[3]) - max(p[1], q[1]))
    inter = iw * ih
    union = (p[2] - p[0]) * (p[3] - p[1]) + (q[2] - q[0]) * (q[3] - q[1]) - inter
    return inter / union if union > 0 else 0.0


def brute_nms(dets, thresh):
    # O(n^2): keep a detection unless a kept, higher-ranked same-class box overlaps it
    order = sorted(dets, key=lambda d: (-d.score, d.class_id, tuple(d.box)))
    kept = []
    for d in order:
        if all(k.class_id != d.class_id or _iou(k.box, d.box) <= thresh for k in kept):
            kept.append(d)
    return kept


def random_dets(rng, n, nc=2):
    out = []
    for _ in range(n):
        x, y = rng.uniform(0, 80, 2)
        w, h = rng.uniform(5, 40, 2)
        score = float(np.round(rng.uniform(0.25, 1), 2))
        out.append(Detection(Box(x, y, x + w, y + h), score, int(rng.integers(nc))))
    return out


@pytest.mark.parametrize("seed", range(10))
def test_nms_matches_bruteforce(seed, backend, monkeypatch):
    monkeypatch.setattr(kernels, "nms_sorted", backend.nms_sorted)
    rng = np.random.default_rng(seed)
    dets = random_dets(rng, 100)
    assert nms(dets, 0.65) == brute_nms(dets, 0.65)
    assert nms(dets, 0.3) == brute_nms(dets, 0.3)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 40), st.floats(0.1, 0.9))
def test_nms_properties(seed, n, thresh):
    dets = random_dets(np.random.default_rng(seed), n)
    out = nms(dets, thresh)
    assert set(out) <= set(dets)
    assert [d.score for d in out] == sorted((d.score for d in out), reverse=True)
    for i, p in enumerate(out):
        for q in out[i + 1 :]:
            if p.class_id == q.class_id:
                assert _iou(p.box, q.box) <= thresh + 1e-12
