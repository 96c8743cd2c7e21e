import numpy as np
import pytest

from flamedet import kernels


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(params=sorted(kernels.BACKENDS))
def backend(request):
    return kernels.get_backend(request.param)


def naive_conv2d(x, w, b=None, stride=1, pad=0):
    """Six nested loops in float64; the reference for every conv test."""
    n, c, h, wd = x.shape
    co, ci, k, _ = w.shape
    xp = np.zeros((n, c, h + 2 * pad, wd + 2 * pad))
    xp[:, :, pad : pad + h, pad : pad + wd] = x
    oh = (h + 2 * pad - k) // stride + 1
    ow = (wd + 2 * pad - k) // stride + 1
    out = np.zeros((n, co, oh, ow))
    for bi in range(n):
        for o in range(co):
            for i in range(oh):
                for j in range(ow):
                    acc = 0.0 if b is None else float(b[o])
                    for cc in range(c):
                        for ki in range(k):
                            for kj in range(k):
                                acc += float(xp[bi, cc, i * stride + ki, j * stride + kj]) * float(w[o, cc, ki, kj])
                    out[bi, o, i, j] = acc
    return out


def naive_max_pool(x, k, stride, pad):
    n, c, h, w = x.shape
    oh = (h + 2 * pad - k) // stride + 1
    ow = (w + 2 * pad - k) // stride + 1
    out = np.empty((n, c, oh, ow), dtype=x.dtype)
    for bi in range(n):
        for cc in range(c):
            for i in range(oh):
                for j in range(ow):
                    best = -np.inf
                    for ki in range(k):
                        for kj in range(k):
                            r, s = i * stride + ki - pad, j * stride + kj - pad
                            if 0 <= r < h and 0 <= s < w:
                                best = max(best, x[bi, cc, r, s])
                    out[bi, cc, i, j] = best
    return out


ACCEPTANCE_TITLES = {
    1: "parameter counts v8n/v8s/v8m",
    2: "light model params, reduction, closed-form savings",
    3: "FLOPs at 640",
    4: "PConv cost calculators",
    5: "IoU-family losses vs geometric oracle",
    6: "F1 cells from precision/recall",
    7: "forward-pass contract at 640",
    8: "matching/AP vs enumerator, IoU 0.55 fixture",
    9: "dataset round trips, flip, split",
    10: "trained accuracy and absolute FPS",
}
_acceptance_key = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_acceptance_key] = {}


@pytest.fixture
def acceptance(request):
    """Record one sub-check of an acceptance criterion, then assert it."""
    results = request.config.stash[_acceptance_key]

    def check(criterion, ok, detail):
        results.setdefault(criterion, []).append((bool(ok), detail))
        assert ok, detail

    return check


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(_acceptance_key, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n, title in ACCEPTANCE_TITLES.items():
        checks = results.get(n)
        if n == 10:
            terminalreporter.write_line(f"criterion {n:>2}: N/A   {title} (needs training; declared out of scope)")
        elif not checks:
            terminalreporter.write_line(f"criterion {n:>2}: NOT RUN {title}")
        else:
            ok = all(c[0] for c in checks)
            failed = [d for good, d in checks if not good]
            detail = "; ".join(failed) if failed else "; ".join(d for _, d in checks)
            terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {title} | {detail}")
