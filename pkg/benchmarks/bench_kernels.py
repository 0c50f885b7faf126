"""Compare the compiled and NumPy convolution kernels.

Usage: python3 benchmarks/bench_kernels.py [--batch 64] [--length 250]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from looptune.neural import kernels, kernels_numpy

try:
    from looptune.neural import _kernels
except ImportError:
    _kernels = None


def bench(fn, args, repeats: int = 20) -> float:
    fn(*args)  # warm-up
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - start)
    return float(np.median(times))


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--batch", type=int, default=64)
    ap.add_argument("--length", type=int, default=250)
    ap.add_argument("--in-channels", type=int, default=64)
    ap.add_argument("--out-channels", type=int, default=32)
    ap.add_argument("--kernel", type=int, default=3)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    x = rng.normal(size=(args.batch, args.length, args.in_channels))
    w = rng.normal(size=(args.kernel, args.in_channels, args.out_channels))
    b = rng.normal(size=args.out_channels)
    dy = rng.normal(size=(args.batch, args.length - args.kernel + 1,
                          args.out_channels))

    print(f"active backend: {kernels.BACKEND}")
    print(f"shape: x{x.shape} w{w.shape}")

    t_np_f = bench(kernels_numpy.conv1d_forward, (x, w, b))
    t_np_b = bench(kernels_numpy.conv1d_backward, (x, w, dy))
    print(f"numpy   forward {t_np_f * 1e3:8.3f} ms   backward {t_np_b * 1e3:8.3f} ms")

    if _kernels is None:
        print("cython  extension not built; skipping")
        return

    xc = np.ascontiguousarray(x)
    wc = np.ascontiguousarray(w)
    dyc = np.ascontiguousarray(dy)
    t_cy_f = bench(_kernels.conv1d_forward_cy, (xc, wc, b))
    t_cy_b = bench(_kernels.conv1d_backward_cy, (xc, wc, dyc))
    print(f"cython  forward {t_cy_f * 1e3:8.3f} ms   backward {t_cy_b * 1e3:8.3f} ms")
    print(f"speedup forward {t_np_f / t_cy_f:6.2f}x   backward {t_np_b / t_cy_b:6.2f}x")

    y1 = kernels_numpy.conv1d_forward(x, w, b)
    y2 = _kernels.conv1d_forward_cy(xc, wc, b)
    print(f"max |forward diff| {np.abs(np.asarray(y1) - np.asarray(y2)).max():.3g}")


if __name__ == "__main__":
    main()
