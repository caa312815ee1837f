"""Times the compiled kernels against the pure NumPy fallback.

Runs the three hot paths (hessian pyramid, descriptor extraction,
centroid assignment) on synthetic inputs under both backends, checks the
outputs agree bit for bit, and prints a timing table with speedups.

Usage: python3 benchmarks/bench_kernels.py [--size 256] [--repeats 5]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from cbirkit._kernels import fallback
from cbirkit.features import filter_sizes, integral_image, padded_integral

try:
    from cbirkit._kernels import native
except ImportError:
    native = None


def best_of(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def hessian_pyramid(mod, iip):
    out = []
    for octave in range(3):
        step = 2 << octave if octave else 2
        for size in filter_sizes(octave, 4):
            out.append(mod.hessian_layer(iip, step, size, 0.9))
    return out


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--size", type=int, default=256,
                        help="synthetic image side length")
    parser.add_argument("--repeats", type=int, default=5,
                        help="timed repeats per case, best run counts")
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    gray = rng.uniform(size=(args.size, args.size))
    iip = padded_integral(integral_image(gray))
    points = np.column_stack([
        rng.uniform(30, args.size - 30, size=500),
        rng.uniform(30, args.size - 30, size=500),
        rng.uniform(1.2, 4.8, size=500),
    ])
    descriptors = rng.normal(size=(20000, 64))
    centroids = rng.normal(size=(128, 64))

    cases = [
        ("hessian pyramid", lambda m: hessian_pyramid(m, iip)),
        ("descriptors (500 pts)", lambda m: m.upright_descriptors(iip, points)),
        ("assign (20k x 128)", lambda m: m.assign_nearest(descriptors, centroids)),
    ]

    if native is None:
        print("compiled extension unavailable, timing the fallback only")
    else:
        for name, run in cases:
            got = run(native)
            want = run(fallback)
            flat_got = got if isinstance(got, list) else [got]
            flat_want = want if isinstance(want, list) else [want]
            for g, w in zip(flat_got, flat_want):
                g = g if isinstance(g, tuple) else (g,)
                w = w if isinstance(w, tuple) else (w,)
                for a, b in zip(g, w):
                    assert np.array_equal(a, b), f"{name}: backends disagree"

    header = f"{'kernel':<24}{'fallback':>12}{'native':>12}{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for name, run in cases:
        slow = best_of(lambda: run(fallback), args.repeats)
        if native is None:
            print(f"{name:<24}{slow * 1e3:>10.2f}ms{'-':>12}{'-':>10}")
            continue
        fast = best_of(lambda: run(native), args.repeats)
        print(f"{name:<24}{slow * 1e3:>10.2f}ms{fast * 1e3:>10.2f}ms"
              f"{slow / fast:>9.1f}x")


if __name__ == "__main__":
    main()
