"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat N]

Both backends are imported side by side; the compiled one is skipped with a
note when the extension was not built.
"""

import argparse
import timeit

import numpy as np

from curvesig import _fallback
from curvesig.dataset import gaussian_blur, synth_blob_image

try:
    from curvesig import _kernels
except ImportError:
    _kernels = None


def cases(rng):
    img = gaussian_blur(synth_blob_image(rng, 448), 2.0).pixels
    t = np.linspace(0, 2 * np.pi, 5000, endpoint=False)
    ring = np.c_[np.cos(t), np.sin(t)] * 100
    pts = rng.normal(size=(600, 2)) * 50
    B, L = 64 * 7, 13
    idx = (rng.integers(0, 600, B)[:, None] + np.arange(L)) % 600
    lin = np.broadcast_to(np.eye(2), (B, 2, 2)).copy()
    shift = np.zeros((B, 2))
    win = rng.normal(size=(4096, 40, 2))
    return {
        "trace_isolines 448x448": lambda m: m.trace_isolines(img, 0.5),
        "circumcurvature 5000 pts": lambda m: m.circumcurvature(ring, True),
        "gather_normalize 448x13": lambda m: m.gather_normalize(pts, idx, lin, shift, L // 2),
        "normalize_windows 4096x40": lambda m: m.normalize_windows(win, 20),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"{'kernel':28s} {'python ms':>10s} {'cython ms':>10s} {'speedup':>8s}")
    for name, fn in cases(rng).items():
        n = 3
        py = min(timeit.repeat(lambda: fn(_fallback), number=n, repeat=args.repeat)) / n * 1e3
        if _kernels is None:
            print(f"{name:28s} {py:10.3f} {'n/a':>10s} {'':>8s}")
            continue
        cy = min(timeit.repeat(lambda: fn(_kernels), number=n, repeat=args.repeat)) / n * 1e3
        print(f"{name:28s} {py:10.3f} {cy:10.3f} {py / cy:7.1f}x")


if __name__ == "__main__":
    main()
