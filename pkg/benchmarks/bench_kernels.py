#!/usr/bin/env python3
"""Time the compiled kernels against the numpy fallback.

Runs each kernel on pipeline-sized inputs with both backends, checks the
outputs still agree bit for bit, and prints a small table. Usage:

    python3 benchmarks/bench_kernels.py [--repeats N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from ross.kernels import _fallback

try:
    from ross.kernels import _native
except ImportError:
    _native = None


def _workloads():
    rng = np.random.default_rng(0)
    h = w = 512

    energy = rng.integers(0, 65536, (400, 256)).astype(np.uint16)
    cc, cr = w // 2, h // 2
    x = (np.arange(w) - cc) * 0.25
    y = (cr - np.arange(h)) * 0.25
    xg, yg = np.meshgrid(x, y)
    theta = np.arctan2(yg, xg)
    rr = np.hypot(xg, yg)
    yield "polar_sample", lambda k: k.polar_sample(
        energy, theta, rr, -np.pi, 2 * np.pi / 400, 0.25
    )

    src = rng.integers(0, 65536, (h, w)).astype(np.uint16)
    m = np.array([[0.9689, 0.2474, 1.3], [-0.2474, 0.9689, -0.7]])
    yield "warp_nn", lambda k: k.warp_nn(src, m, cc, cr, 0.25)

    rows = rng.integers(0, h, 200_000).astype(np.int64)
    cols = rng.integers(0, w, 200_000).astype(np.int64)
    labels = rng.integers(0, 4, 200_000).astype(np.uint8)
    yield "splat_priority", lambda k: k.splat_priority(
        np.zeros((h, w), np.uint8), rows, cols, labels
    )

    profile = rng.integers(0, 40000, 4096).astype(np.uint16)
    yield "cfar_mask", lambda k: k.cfar_mask(profile, 2, 8, 2.0)


def _best_of(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=20)
    args = parser.parse_args()

    if _native is None:
        print("compiled extension not importable; timing the fallback only")

    print(f"{'kernel':<16}{'python':>12}{'native':>12}{'speedup':>10}")
    for name, run in _workloads():
        if _native is not None and not np.array_equal(run(_fallback), run(_native)):
            raise SystemExit(f"{name}: backends disagree, refusing to time")
        tp = _best_of(lambda: run(_fallback), args.repeats)
        if _native is None:
            print(f"{name:<16}{tp * 1e3:>10.3f}ms{'':>12}{'':>10}")
            continue
        tn = _best_of(lambda: run(_native), args.repeats)
        print(f"{name:<16}{tp * 1e3:>10.3f}ms{tn * 1e3:>10.3f}ms{tp / tn:>9.1f}x")


if __name__ == "__main__":
    main()
