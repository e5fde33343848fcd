"""Time the compiled kernels against the pure-Python reference.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from funcreg import kernels


def subset_inputs(n, zmax=100, seed=0):
    rng = np.random.default_rng(seed)
    z = np.minimum(rng.poisson(10.0, n), zmax).astype(np.int64)
    u = rng.random((n, zmax))
    alpha = rng.uniform(-10.0, 10.0, (n, zmax))
    eta = np.ones(2 * zmax)
    return z, u, alpha, eta


def mgs_inputs(m, npts=2000, seed=0):
    rng = np.random.default_rng(seed)
    return np.ascontiguousarray(rng.standard_normal((m, npts))), np.full(npts, 2.0 / npts)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    found = kernels.backends()
    if "cython" not in found:
        print("compiled extension not built; only the reference backend is available")
    cases = {
        "fill_subset_coefficients n=5000": lambda mod: (
            lambda a=subset_inputs(5000): mod.fill_subset_coefficients(*a, np.zeros((5000, 200)))),
        "mgs_weighted 60x2000": lambda mod: (lambda a=mgs_inputs(60): mod.mgs_weighted(*a, 1e-12)),
    }
    print(f"{'kernel':<36}" + "".join(f"{name:>14}" for name in found) + f"{'speedup':>10}")
    for label, make in cases.items():
        times = {name: min(timeit.repeat(make(mod), number=1, repeat=args.repeat)) for name, mod in found.items()}
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        print(f"{label:<36}" + "".join(f"{t * 1e3:>12.2f}ms" for t in times.values()) + f"{speed:>9.1f}x")


if __name__ == "__main__":
    main()
