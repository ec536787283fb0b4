"""Compiled vs NumPy kernels.

    python benchmarks/bench_kernels.py [--repeat N]

Times the block-tridiagonal solve at the sizes used by the decaying-solution
solver and the third-derivative remainder at the sizes used by the Picard
map, checks that both backends agree, and prints one line per case.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from lowscat import _kernels_py

try:
    from lowscat import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None


def block_case(n: int, d: int, m: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    lower = rng.normal(size=(n, d, d))
    upper = rng.normal(size=(n, d, d))
    diag = rng.normal(size=(n, d, d)) + 8.0 * np.eye(d)
    rhs = rng.normal(size=(n, d, m))
    return lower, diag, upper, rhs


def remainder_case(n: int, d: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    L = 8
    y = rng.normal(size=(n, d)) * 50.0
    y += 10.0 * y / np.linalg.norm(y, axis=1, keepdims=True)
    z = rng.normal(size=(n, d))
    pts = y[None] + np.linspace(0.05, 0.95, L)[:, None, None] * z[None]
    r = np.linalg.norm(pts, axis=-1)
    d1, d2, d3 = r**-2, -2.0 * r**-3, 6.0 * r**-4
    w = np.full(L, 1.0 / L)
    return pts, r, np.ascontiguousarray(z), d1, d2, d3, w


def bench(fn, args, repeat: int) -> float:
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if _compiled is None:
        print("compiled extension not available; only the NumPy backend can be timed")
    cases = [("block_thomas", f"n={n} d={d} m={m}", block_case(n, d, m), "block_thomas")
             for n, d, m in ((1000, 2, 1), (4000, 2, 1), (4000, 3, 2))]
    cases += [("radial_remainder", f"n={n} d={d}", remainder_case(n, d), "radial_remainder")
              for n, d in ((1000, 2), (4000, 2), (4000, 3))]
    print(f"{'kernel':<18}{'case':<18}{'numpy [ms]':>12}{'cython [ms]':>13}{'speedup':>9}{'max diff':>11}")
    for label, case, data, name in cases:
        py = getattr(_kernels_py, name)
        t_py = bench(py, data, args.repeat)
        if _compiled is None:
            print(f"{label:<18}{case:<18}{1e3 * t_py:>12.3f}{'-':>13}{'-':>9}{'-':>11}")
            continue
        cy = getattr(_compiled, name)
        t_cy = bench(cy, data, args.repeat)
        diff = float(np.max(np.abs(np.asarray(py(*data)) - np.asarray(cy(*data)))))
        print(f"{label:<18}{case:<18}{1e3 * t_py:>12.3f}{1e3 * t_cy:>13.3f}"
              f"{t_py / t_cy:>9.1f}{diff:>11.1e}")


if __name__ == "__main__":
    main()
