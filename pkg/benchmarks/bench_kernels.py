"""Timing comparison of the jitted loop kernels against the numpy fallbacks.

Run from the repository root:

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --repeats 50

Each kernel is exercised on randomized workloads at a few sizes; the jitted
variant is warmed up before timing so compilation cost is not charged to it.
Without numba (or with AAM_DISABLE_NUMBA=1) only the numpy column is filled.
"""
import argparse
import time

import numpy as np

from aam import _kernels
from aam._kernels import (NUMBA_ENABLED, _cand_area_angle_numpy,
                          _lag_filter_numpy, _max_lambda_numpy, _sweep_numpy,
                          backend)


def _max_lambda_case(rng, nm):
    flow_base = rng.normal(0.0, 1.0, nm)
    flow_dir = rng.normal(0.0, 1.0, nm)
    flow_dir[rng.random(nm) < 0.2] = 0.0
    limits = np.abs(rng.normal(1.5, 0.5, nm)) + 0.1
    scan = rng.random(nm) < 0.8
    return flow_base, flow_dir, limits, scan


def _sweep_case(rng, nb, nm, nk):
    theta_b = rng.normal(0.0, 0.5, nb)
    theta_d = rng.normal(0.0, 0.5, nb)
    s_cols = rng.normal(0.0, 0.3, (nb, nk))
    pairs = rng.integers(0, nb, (nm, 2))
    same = pairs[:, 0] == pairs[:, 1]
    pairs[same, 1] = (pairs[same, 0] + 1) % nb
    br_from, br_to = pairs[:, 0].astype(np.int64), pairs[:, 1].astype(np.int64)
    br_b = rng.uniform(0.5, 5.0, nm)
    br_limit = np.abs(rng.normal(2.0, 1.0, nm)) + 0.2
    scan = rng.random(nm) < 0.85
    enter_sign = rng.choice([-1.0, 0.0, 1.0], nm)
    cand_pos = rng.choice(nm, nk, replace=False).astype(np.int64)
    return (theta_b, theta_d, s_cols, cand_pos, br_from[cand_pos],
            br_to[cand_pos], br_b[cand_pos], br_from, br_to, br_b, br_limit,
            scan, enter_sign)


def _cand_case(rng, nb, nk):
    theta = rng.normal(0.0, 0.5, nb)
    s_cols = rng.normal(0.0, 0.3, (nb, nk))
    pairs = rng.integers(0, nb, (nk, 2))
    same = pairs[:, 0] == pairs[:, 1]
    pairs[same, 1] = (pairs[same, 0] + 1) % nb
    nbound = max(2, nb // 4)
    bidx = rng.choice(nb, nbound, replace=False).astype(np.int64)
    w = rng.normal(0.0, 1.0, nbound)
    return (theta, s_cols, pairs[:, 0].astype(np.int64),
            pairs[:, 1].astype(np.int64), rng.uniform(0.5, 5.0, nk), bidx, w)


def _lag_case(rng, nt, nc):
    return (rng.normal(0.0, 10.0, (nt, nc)), 0.065)


def _time(fn, args, repeats):
    fn(*args)  # warmup (and JIT compile on the numba path)
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


WORKLOADS = [
    ("max_lambda", "_max_lambda", _max_lambda_case,
     [{"nm": 100}, {"nm": 1_000}, {"nm": 20_000}]),
    ("sweep_max_transfer", "_sweep", _sweep_case,
     [{"nb": 30, "nm": 60, "nk": 20}, {"nb": 60, "nm": 150, "nk": 60},
      {"nb": 120, "nm": 400, "nk": 150}]),
    ("candidate_area_angles", "_cand_area_angle", _cand_case,
     [{"nb": 40, "nk": 50}, {"nb": 120, "nk": 500}]),
    ("lag_filter", "_lag_filter", _lag_case,
     [{"nt": 1_000, "nc": 2}, {"nt": 30_000, "nc": 4}]),
]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=20,
                        help="timed calls per kernel/size (best-of)")
    parser.add_argument("--seed", type=int, default=42)
    args = parser.parse_args()

    print(f"active dispatch backend: {backend()}"
          + ("" if NUMBA_ENABLED else "  (numba unavailable or disabled)"))
    header = f"{'kernel':<24}{'size':<28}{'numba':>12}{'numpy':>12}{'speedup':>10}"
    print(header)
    print("-" * len(header))

    rng = np.random.default_rng(args.seed)
    for name, stem, case, sizes in WORKLOADS:
        jitted = getattr(_kernels, stem + "_numba", None)
        plain = getattr(_kernels, stem + "_numpy")
        for size in sizes:
            work = case(rng, **size)
            t_np = _time(plain, work, args.repeats)
            label = ",".join(f"{k}={v}" for k, v in size.items())
            if jitted is None:
                print(f"{name:<24}{label:<28}{'-':>12}{t_np * 1e3:>10.3f}ms"
                      f"{'-':>10}")
                continue
            t_nb = _time(jitted, work, args.repeats)
            print(f"{name:<24}{label:<28}{t_nb * 1e3:>10.3f}ms"
                  f"{t_np * 1e3:>10.3f}ms{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
