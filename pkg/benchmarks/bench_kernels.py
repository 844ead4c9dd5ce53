"""Time the compiled kernels against the pure-Python fallback.

Run from the repository root:

    python3 benchmarks/bench_kernels.py [--rows 12000] [--cells 2000]

Shapes default to one desk-scale replication: ~12k sample rows, 28
schools, ~2k poststratification cells.
"""

import argparse
import time

import numpy as np

from mrpsim.kernels import _pykern

try:
    from mrpsim.kernels import _ckern
except ImportError:
    _ckern = None


def _time(fn, args, repeats, inner):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        for _ in range(inner):
            fn(*args)
        best = min(best, (time.perf_counter() - t0) / inner)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--rows", type=int, default=12000)
    ap.add_argument("--cells", type=int, default=2000)
    ap.add_argument("--groups", type=int, default=28)
    ap.add_argument("--repeats", type=int, default=7)
    ap.add_argument("--inner", type=int, default=20)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    lo, hi, sigma = 0.0, 4.33, 0.6
    y = rng.uniform(lo, hi, args.rows)
    eta = rng.uniform(lo, hi, args.rows)
    codes = rng.integers(0, args.groups, args.rows).astype(np.int32)
    values = rng.normal(size=args.rows)
    mu = rng.uniform(lo, hi, args.cells)
    u = rng.uniform(1e-6, 1 - 1e-6, args.cells)

    cases = [
        ("tn_loglik_rows", "tn_loglik_rows", (y, eta, sigma, lo, hi)),
        ("tn_loglik_total", "tn_loglik_total", (y, eta, sigma, lo, hi)),
        ("tn_loglik_grouped", "tn_loglik_grouped",
         (y, eta, sigma, lo, hi, codes, args.groups)),
        ("group_sums", "group_sums", (values, codes, args.groups)),
        ("tn_mean", "tn_mean", (mu, sigma, lo, hi)),
        ("tn_ppf", "tn_ppf", (u, mu, sigma, lo, hi)),
    ]

    print(f"rows={args.rows} cells={args.cells} groups={args.groups} "
          f"(best of {args.repeats} x {args.inner} calls)")
    print(f"{'kernel':<18} {'python':>10} {'c':>10} {'speedup':>8}")
    for label, name, fargs in cases:
        t_py = _time(getattr(_pykern, name), fargs, args.repeats, args.inner)
        if _ckern is None:
            print(f"{label:<18} {t_py * 1e6:>8.1f}us {'n/a':>10} {'':>8}")
            continue
        t_c = _time(getattr(_ckern, name), fargs, args.repeats, args.inner)
        print(f"{label:<18} {t_py * 1e6:>8.1f}us {t_c * 1e6:>8.1f}us "
              f"{t_py / t_c:>7.1f}x")


if __name__ == "__main__":
    main()
