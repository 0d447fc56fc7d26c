"""Time the compiled kernels against the NumPy fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat R]
"""

import argparse
import timeit

import numpy as np

from mfisp import _fallback

try:
    from mfisp import _kernels
except ImportError:  # pragma: no cover
    _kernels = None


def cases():
    rng = np.random.default_rng(0)
    x = rng.uniform(0.01, 80.0, 20000)
    small = rng.uniform(0.01, 30.0, 200)
    bx, by = 1.5 * np.cos(np.linspace(0, 2 * np.pi, 200)), 1.5 * np.sin(np.linspace(0, 2 * np.pi, 200))
    r = np.sqrt(rng.uniform(0, 1, 160 * 64))
    t = rng.uniform(0, 2 * np.pi, r.size)
    nx, ny = r * np.cos(t), r * np.sin(t)
    w = rng.normal(size=r.size) + 0j
    return {
        "besselj(5, 20000 pts)": lambda mod: mod.besselj(5, x),
        "bessely(3, 20000 pts)": lambda mod: mod.bessely(3, x),
        "besselj_orders(60, 200 pts)": lambda mod: mod.besselj_orders(60, small),
        "bessely_orders(60, 200 pts)": lambda mod: mod.bessely_orders(60, small),
        "hankel0(20000 pts)": lambda mod: mod.hankel0(x),
        "green_sum(200 x 10240)": lambda mod: mod.green_sum(7.0, bx, by, nx, ny, w),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _kernels is None:
        print("compiled kernels not built; nothing to compare")
        return
    print(f"{'kernel':32s} {'cython [ms]':>12s} {'numpy [ms]':>12s} {'speedup':>8s} {'max rel diff':>13s}")
    for name, fn in cases().items():
        times = {}
        for label, mod in (("cy", _kernels), ("py", _fallback)):
            fn(mod)
            times[label] = min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat)) * 1e3
        a, b = np.asarray(fn(_kernels)), np.asarray(fn(_fallback))
        scale = np.maximum(np.abs(b), 1e-300)
        finite = np.isfinite(a) & np.isfinite(b)
        diff = float(np.max(np.abs(a - b)[finite] / scale[finite]))
        print(f"{name:32s} {times['cy']:12.2f} {times['py']:12.2f} {times['py'] / times['cy']:8.1f} {diff:13.1e}")


if __name__ == "__main__":
    main()
