"""Time each hot kernel under every available backend.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--forward]

``--forward`` also times a full light-model forward at 640 per backend.
"""

import argparse
import statistics
import time
from functools import partial

import numpy as np

from flamedet import kernels


def _time(fn, repeat):
    fn()
    samples = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return statistics.median(samples)


def _cases(rng):
    x = rng.standard_normal((64, 80, 80)).astype(np.float32)
    pool = rng.standard_normal((1, 256, 20, 20)).astype(np.float32)
    xy = rng.uniform(0, 600, (2000, 2))
    wh = rng.uniform(5, 80, (2000, 2))
    boxes = np.hstack([xy, xy + wh])
    return {
        "im2col 64x80x80 k3": lambda k: k.im2col(x, 3, 1, 1),
        "max_pool2d 256x20x20 k5": lambda k: k.max_pool2d(pool, 5, 1, 2),
        "box_iou_matrix 2000x2000": lambda k: k.box_iou_matrix(boxes, boxes),
        "nms_sorted 2000 boxes": lambda k: k.nms_sorted(boxes, 0.65),
    }


def _forward_case():
    from flamedet.graph import build_model, forward
    from flamedet.weights import init_weights

    graph = build_model("light", nc=1, imgsz=640)
    weights = init_weights(graph, 0)
    x = np.random.default_rng(0).random((1, 3, 640, 640), dtype=np.float32)

    def run(k):
        saved = {n: getattr(kernels, n) for n in ("im2col", "max_pool2d")}
        try:
            kernels.im2col, kernels.max_pool2d = k.im2col, k.max_pool2d
            forward(graph, weights, x, check=False)
        finally:
            for n, f in saved.items():
                setattr(kernels, n, f)

    return run


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--forward", action="store_true")
    args = ap.parse_args()

    names = sorted(kernels.BACKENDS)
    cases = _cases(np.random.default_rng(0))
    if args.forward:
        cases["light forward 640"] = _forward_case()
    print(f"default backend: {kernels.BACKEND}")
    print(f"{'case':<28}" + "".join(f"{n + ' ms':>14}" for n in names) + (f"{'speedup':>10}" if len(names) > 1 else ""))
    for label, fn in cases.items():
        times = {n: _time(partial(fn, kernels.BACKENDS[n]), args.repeat) for n in names}
        row = f"{label:<28}" + "".join(f"{times[n] * 1e3:>14.2f}" for n in names)
        if "cython" in times:
            row += f"{times['python'] / times['cython']:>9.2f}x"
        print(row)


if __name__ == "__main__":
    main()
