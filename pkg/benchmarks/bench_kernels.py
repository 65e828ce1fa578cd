"""Compare the numba and numpy backends of the permutation-sum kernel.

Run with ``python benchmarks/bench_kernels.py [--lmax 8] [--repeat 5]``.
The numba timings exclude the one-off compilation, which is reported
separately.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from fbasis import _kernels
from fbasis.dwpf import kernel_matrices, random_instance


def best_of(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--lmax", type=int, default=8)
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--seed", type=int, default=7)
    args = p.parse_args()

    if not _kernels.HAVE_NUMBA:
        print("numba is not installed; only the numpy backend is available")
    else:
        perms = _kernels.permutation_table(2)
        m = np.ones((2, 2), complex)
        t0 = time.perf_counter()
        _kernels.perm_terms_numba(perms, m, m, m, m)
        print(f"numba compile: {time.perf_counter() - t0:.3f} s")

    print(f"{'L':>2} {'terms':>7} {'numpy [ms]':>11} {'numba [ms]':>11} {'speedup':>8} {'max diff':>9}")
    for L in range(2, args.lmax + 1):
        inst, table = random_instance("C2", L, args.seed)
        mats = [np.ascontiguousarray(x) for x in kernel_matrices("C2", table, inst.aux, inst.inhomogeneities)]
        perms = _kernels.permutation_table(L)
        t_np = best_of(lambda: _kernels.perm_terms_numpy(perms, *mats), args.repeat)
        ref = _kernels.perm_terms_numpy(perms, *mats)
        if _kernels.HAVE_NUMBA:
            t_nb = best_of(lambda: _kernels.perm_terms_numba(perms, *mats), args.repeat)
            diff = float(np.max(np.abs(_kernels.perm_terms_numba(perms, *mats) - ref)))
            print(f"{L:>2} {len(perms):>7} {1e3 * t_np:>11.3f} {1e3 * t_nb:>11.3f} {t_np / t_nb:>8.1f} {diff:>9.1e}")
        else:
            print(f"{L:>2} {len(perms):>7} {1e3 * t_np:>11.3f} {'-':>11} {'-':>8} {'-':>9}")


if __name__ == "__main__":
    main()
