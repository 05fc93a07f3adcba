"""Compare the compiled and numpy kernel backends on representative sizes.

    python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from kickent import _pykernels

try:
    from kickent import _ckernels
except ImportError:
    _ckernels = None


def cases(rng):
    d = rng.normal(size=(200, 200))
    h = np.log10(rng.random((256, 256)))
    th, ph = np.meshgrid(np.linspace(0.01, 3.13, 256), np.linspace(0, 2 * np.pi, 256, endpoint=False), indexing="ij")
    smooth = np.cos(7 * th) * np.sin(5 * ph) + 0.1 * th
    return [
        ("diagonal_means T=200", "diagonal_means", (d, 4)),
        ("cumulative_block_sums T=200", "cumulative_block_sums", (d,)),
        ("sphere_minima 256x256 random", "sphere_minima", (h, 0.0, 0.0)),
        ("sphere_minima 256x256 smooth", "sphere_minima", (smooth, 5.0, 5.0)),
    ]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=50)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"{'kernel':32s} {'python [ms]':>12s} {'cython [ms]':>12s} {'speedup':>8s}")
    for label, fn, a in cases(rng):
        py = min(timeit.repeat(lambda: getattr(_pykernels, fn)(*a), number=1, repeat=args.repeat))
        if _ckernels is None:
            print(f"{label:32s} {py * 1e3:12.3f} {'n/a':>12s} {'':>8s}")
            continue
        cy = min(timeit.repeat(lambda: getattr(_ckernels, fn)(*a), number=1, repeat=args.repeat))
        print(f"{label:32s} {py * 1e3:12.3f} {cy * 1e3:12.3f} {py / cy:8.1f}")


if __name__ == "__main__":
    main()
