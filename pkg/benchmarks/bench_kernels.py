"""Compare the numba and numpy kernels.

    python benchmarks/bench_kernels.py [--sites 4 6 8 10] [--repeat 5]

Prints the best wall time per kernel and the largest deviation between
implementations. The numba column is skipped when numba is not installed.
"""
import argparse
import time

import numpy as np

from opscramble import kernels
from opscramble._accel import HAVE_NUMBA
from opscramble.haar import sample_haar_unitary


def best_of(fn, arg, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn(arg)
        times.append(time.perf_counter() - t)
    return min(times), out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sites", type=int, nargs="+", default=[4, 6, 8, 10])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    if HAVE_NUMBA:
        # compile outside the timed region
        kernels.walsh_hadamard_numba(np.ones((1, 2), dtype=complex))
        kernels.commutation_sums_numba(1)

    print(f"{'kernel':<22}{'N':>4}{'numpy [s]':>12}{'numba [s]':>12}{'max dev':>12}")
    for n in args.sites:
        u = sample_haar_unitary(1 << n, rng)
        op = u @ np.diag(rng.standard_normal(1 << n)) @ u.conj().T
        stripes = kernels._diagonal_stripes(op)
        t_np, ref = best_of(kernels.walsh_hadamard_numpy, stripes, args.repeat)
        t_nb, dev = float("nan"), 0.0
        if HAVE_NUMBA:
            t_nb, nb = best_of(lambda a: kernels.walsh_hadamard_numba(a.copy()), stripes, args.repeat)
            dev = np.abs(nb - ref).max()
        print(f"{'walsh_hadamard':<22}{n:>4}{t_np:>12.4g}{t_nb:>12.4g}{dev:>12.2g}")
        t_direct, direct = best_of(kernels.pauli_coefficients_direct, op, args.repeat)
        dev = np.abs(direct - kernels.pauli_coefficients_fast(op)).max()
        print(f"{'  direct (BLAS) ref':<22}{n:>4}{t_direct:>12.4g}{'':>12}{dev:>12.2g}")

    for n in [s for s in args.sites if s <= 5]:
        t_np, ref = best_of(kernels.commutation_sums_numpy, n, args.repeat)
        t_nb, dev = float("nan"), 0
        if HAVE_NUMBA:
            t_nb, nb = best_of(kernels.commutation_sums_numba, n, args.repeat)
            dev = int(np.abs(nb - ref).max())
        print(f"{'commutation_sums':<22}{n:>4}{t_np:>12.4g}{t_nb:>12.4g}{dev:>12}")


if __name__ == "__main__":
    main()
