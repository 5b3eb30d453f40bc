"""Benchmark the compiled sweep kernel against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--size 512] [--images 50]
"""

import argparse
import time

import numpy as np

from fitzcal import _kernels_py
from fitzcal.metrics import _impl


def bench(fn, probs, labels, repeats):
    start = time.perf_counter()
    for p, m in zip(probs, labels):
        for _ in range(repeats):
            fn(p, m)
    return time.perf_counter() - start


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--size", type=int, default=512, help="square image side")
    parser.add_argument("--images", type=int, default=50)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    n = args.size * args.size
    probs = [rng.integers(0, 1001, size=n).astype(np.uint16) for _ in range(args.images)]
    labels = [rng.integers(0, 2, size=n).astype(np.uint8) for _ in range(args.images)]

    backends = [("python", _kernels_py.sweep_counts)]
    if _impl.BACKEND != "python":
        backends.insert(0, (_impl.BACKEND, _impl.sweep_counts))

    print(f"{args.images} images of {args.size}x{args.size}, {args.repeats} repeats")
    times = {}
    for name, fn in backends:
        elapsed = bench(fn, probs, labels, args.repeats)
        times[name] = elapsed
        per_image = elapsed / (args.images * args.repeats)
        mpix = n / per_image / 1e6
        print(f"  {name:>8}: {elapsed:7.3f} s total  {per_image * 1e3:7.3f} ms/image  "
              f"{mpix:8.1f} Mpix/s")
    if len(times) == 2:
        fast, slow = (t for t in times.values())
        print(f"  speedup: {slow / fast:.2f}x")


if __name__ == "__main__":
    main()
