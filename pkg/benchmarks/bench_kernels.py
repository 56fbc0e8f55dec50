"""Time the numba loop bodies against the numpy bodies of every hot kernel.

Usage::

    python3 benchmarks/bench_kernels.py [--d 200] [--n 60] [--repeat 20]

Both bodies are called directly, so one process measures both paths
regardless of ``IPGD_DISABLE_NUMBA``.  The first numba call (compilation)
is excluded from the timings.
"""
import argparse
import statistics
import time

import numpy as np

from ipgd import kernels
from ipgd._accel import HAVE_NUMBA, backend


def best_of(fn, args, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times), statistics.median(times)


def cases(n, d, rng):
    Ai = rng.standard_normal((n, d))
    K = rng.standard_normal((d, d))
    sym = Ai.T @ Ai
    small = sym[: min(d, 60), : min(d, 60)].copy()
    return {
        "ipg_agent": (kernels._ipg_agent_nb, kernels._ipg_agent_np,
                      (Ai, np.ascontiguousarray(Ai.T), rng.standard_normal(n),
                       rng.standard_normal(d), K, 0.5, 10)),
        "round_half_away": (kernels._round_half_away_nb, kernels._round_half_away_np,
                            (rng.standard_normal(d * d), 4)),
        "frobenius_dist": (kernels._frob_nb, kernels._frob_np,
                           (K, rng.standard_normal((d, d)))),
        "jacobi_eigh": (kernels._jacobi_nb, kernels._jacobi_np, (small, 1e-13, 100)),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=60, help="rows per agent")
    ap.add_argument("--d", type=int, default=200, help="problem dimension")
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if not HAVE_NUMBA:
        print("numba is not installed; nothing to compare")
        return 1
    rng = np.random.default_rng(args.seed)
    print(f"active backend: {backend()}   n={args.n} d={args.d} repeat={args.repeat}")
    print(f"{'kernel':<16} {'numba[ms]':>10} {'numpy[ms]':>10} {'speedup':>8}")
    for name, (nb, npy, call) in cases(args.n, args.d, rng).items():
        nb(*call)  # compile
        t_nb, _ = best_of(nb, call, args.repeat)
        t_np, _ = best_of(npy, call, args.repeat)
        print(f"{name:<16} {1e3 * t_nb:>10.3f} {1e3 * t_np:>10.3f} {t_np / t_nb:>8.2f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
