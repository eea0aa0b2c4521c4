"""Timing of the compiled Airy kernel against the pure-Python fallback.

Usage: python benchmarks/bench_airy.py [--points N] [--repeat R]

Both kernels are run on the same random points covering the Maclaurin disk,
the continuation annulus and the asymptotic region; the maximum relative
difference between them is reported alongside the timings.
"""

import argparse
import time

import numpy as np

from compstab.airy import _kernel_py

try:
    from compstab.airy import _kernel_c
except ImportError:
    _kernel_c = None


def sample_points(n, seed=0):
    rng = np.random.default_rng(seed)
    r = np.concatenate([rng.uniform(0.0, 3.0, n // 3), rng.uniform(3.0, 14.0, n // 3),
                        rng.uniform(14.0, 80.0, n - 2 * (n // 3))])
    th = rng.uniform(-np.pi, np.pi, n)
    return r * np.exp(1j * th)


def best_time(func, z, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = func(z)
        times.append(time.perf_counter() - t)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=3000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    z = sample_points(args.points)
    t_py, v_py = best_time(_kernel_py.airy_scaled_array, z, args.repeat)
    print(f"python  {args.points} points  {t_py:.4f} s  ({1e6 * t_py / args.points:.2f} us/pt)")
    if _kernel_c is None:
        print("cython  extension not built")
        return
    t_c, v_c = best_time(_kernel_c.airy_scaled_array, z, args.repeat)
    print(f"cython  {args.points} points  {t_c:.4f} s  ({1e6 * t_c / args.points:.2f} us/pt)")
    rel = np.max(np.abs(v_c - v_py) / np.maximum(np.abs(v_py), 1e-300))
    print(f"speedup {t_py / t_c:.1f}x   max relative difference {rel:.2e}")


if __name__ == "__main__":
    main()
