"""Fincke-Pohst enumeration: compiled kernel against the pure-Python kernel.

Usage: python benchmarks/bench_enumeration.py [--repeat N] [--max-dim D] [--count-only]

Each case enumerates the lattice points of a pulled-back gamma-power ellipsoid
with both kernels, checks that the outputs agree, and reports the best time.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from ivpcap import _enum_py, _kernels
from ivpcap.acceptance import random_unipotent
from ivpcap.lattice import enumerate_ellipsoid, gamma_power_ellipsoid, pulled_back


def best_time(fn, repeat: int):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--max-dim", type=int, default=6)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--count-only", action="store_true",
                    help="count interior points instead of recording them")
    args = ap.parse_args(argv)

    try:
        compiled = _kernels.get_kernel("cython")
    except ImportError:
        compiled = None
        print("compiled kernel not built; only the Python kernel is available")
    rng = np.random.default_rng(args.seed)
    print(f"{'dim':>3} {'gamma':>5} {'t':>3} {'points':>9} {'python s':>9} "
          f"{'cython s':>9} {'speedup':>8}")
    for d in range(1, args.max_dim):
        for gamma, t in (("0.9", 3), ("0.8", 4)):
            e = pulled_back(gamma_power_ellipsoid(gamma, t, d), random_unipotent(rng, d))
            tp, rp = best_time(lambda: enumerate_ellipsoid(e, kernel=_enum_py.fp_enumerate,
                                                         count_only=args.count_only),
                               args.repeat)
            if compiled is None:
                print(f"{d + 1:>3} {gamma:>5} {t:>3} {rp.count_inclusive:>9} {tp:>9.4f}")
                continue
            tc, rc = best_time(lambda: enumerate_ellipsoid(e, kernel=compiled,
                                                             count_only=args.count_only), args.repeat)
            if not (np.array_equal(rp.points, rc.points)
                    and np.array_equal(rp.ambiguous, rc.ambiguous)):
                raise SystemExit(f"kernels disagree at dim {d + 1}")
            print(f"{d + 1:>3} {gamma:>5} {t:>3} {rc.count_inclusive:>9} {tp:>9.4f} "
                  f"{tc:>9.4f} {tp / tc:>7.1f}x")


if __name__ == "__main__":
    main()
