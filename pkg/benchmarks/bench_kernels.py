"""Time the numba and numpy variants of each hot kernel.

    python benchmarks/bench_kernels.py [--repeat N] [--size P]

The numba variants are compiled (or loaded from cache) before timing.
"""

import argparse
import timeit

import numpy as np

from stochperf import _kernels as K


def cases(size: int, k: int):
    rng = np.random.default_rng(0)
    x = rng.lognormal(5.0, 0.3, size)
    f = np.sort(rng.random(size))
    idx = rng.integers(0, size, size=(k, size))
    t = rng.standard_t(4, size) * 2.0 + 50.0
    return {
        "ks_gap": (K.ks_gap_numba, K.ks_gap_numpy, (f,)),
        "loo_harmonic": (K.loo_harmonic_numba, K.loo_harmonic_numpy, (x,)),
        "resample_harmonic": (K.resample_harmonic_numba, K.resample_harmonic_numpy, (x, idx)),
        "t_em": (K.t_em_numba, K.t_em_numpy, (t, 4.0, 50.0, 2.0)),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=200)
    ap.add_argument("--size", type=int, default=500, help="sample size")
    ap.add_argument("--k", type=int, default=100, help="bootstrap resamples")
    args = ap.parse_args(argv)
    if not K.HAVE_NUMBA:
        print("numba not installed; only the numpy variants exist")
    print(f"{'kernel':<20}{'numba us':>12}{'numpy us':>12}{'speedup':>10}")
    for name, (nb, npy, call_args) in cases(args.size, args.k).items():
        nb(*call_args)
        t_nb = min(timeit.repeat(lambda: nb(*call_args), number=args.repeat, repeat=3)) / args.repeat * 1e6
        t_np = min(timeit.repeat(lambda: npy(*call_args), number=args.repeat, repeat=3)) / args.repeat * 1e6
        print(f"{name:<20}{t_nb:>12.1f}{t_np:>12.1f}{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
