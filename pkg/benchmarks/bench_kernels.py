"""Time the masked per-column loadings solve: compiled kernel vs numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeat 5] [--threads 1]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from srpca import _fallback
from srpca.core import REL_PIVOT, _ObservedIndex
from srpca.observation import ObservedMatrix, random_mask

try:
    from srpca import _kernels
except ImportError:  # extension not built
    _kernels = None

SIZES = [(200, 100, 3), (475, 344, 30), (1682, 943, 5), (2000, 1000, 20)]


def _best_of(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--missing", type=float, default=0.5)
    args = ap.parse_args(argv)

    print(f"{'m':>6} {'n':>6} {'r':>4} {'python ms':>11} {'cython ms':>11} {'speedup':>8} {'max diff':>10}")
    for m, n, r in SIZES:
        rng = np.random.default_rng(0)
        x = ObservedMatrix(rng.standard_normal((m, n)), random_mask(m, n, args.missing, 1))
        idx = _ObservedIndex(x)
        p = rng.standard_normal((m, r))
        call = (p, idx.indptr, idx.indices, idx.data, 1e-10, REL_PIVOT)
        t_py, (u_py, _) = _best_of(lambda: _fallback.solve_loadings_csc(*call, n_threads=args.threads), args.repeat)
        if _kernels is None:
            print(f"{m:>6} {n:>6} {r:>4} {1e3 * t_py:>11.2f} {'n/a':>11} {'':>8} {'':>10}")
            continue
        t_cy, (u_cy, _) = _best_of(lambda: _kernels.solve_loadings_csc(*call, n_threads=args.threads), args.repeat)
        diff = float(np.max(np.abs(u_py - u_cy)))
        print(f"{m:>6} {n:>6} {r:>4} {1e3 * t_py:>11.2f} {1e3 * t_cy:>11.2f} {t_py / t_cy:>7.1f}x {diff:>10.2e}")


if __name__ == "__main__":
    main()
