"""Compare the compiled weight-assembly kernel against the NumPy fallback.

Run from the repository root after installing the package:

    python benchmarks/bench_kernels.py
    python benchmarks/bench_kernels.py --sizes 2000x500,8000x2000 --repeat 5
"""

import argparse
import time

import numpy as np

from morphkit import _kernels
from morphkit._kernels import numpy_backend


def bench(backend, targets, controls, p, tol, repeat):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        _kernels.assemble_weight_matrix(targets, controls, p, tol,
                                        backend=backend)
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="500x200,2000x500,5000x1500,10000x3000",
                        help="comma-separated n_targets x n_controls pairs")
    parser.add_argument("--repeat", type=int, default=3,
                        help="take the best of this many runs")
    parser.add_argument("--p", type=int, default=4)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    print(f"active backend: {_kernels.backend_name()} "
          f"(compiled available: {_kernels.compiled_available()})")
    header = f"{'size':>14} {'numpy [s]':>12} {'compiled [s]':>14} {'speedup':>9}"
    print(header)
    print("-" * len(header))
    for size in args.sizes.split(","):
        n, m = (int(v) for v in size.lower().split("x"))
        targets = rng.random((n, 3))
        controls = rng.random((m, 3))
        tol = 1e-12 * np.sqrt(3.0)
        t_numpy = bench(numpy_backend, targets, controls, args.p, tol,
                        args.repeat)
        if _kernels.compiled_available():
            t_comp = bench(_kernels._idw_core, targets, controls, args.p, tol,
                           args.repeat)
            print(f"{size:>14} {t_numpy:12.4f} {t_comp:14.4f} "
                  f"{t_numpy / t_comp:8.2f}x")
        else:
            print(f"{size:>14} {t_numpy:12.4f} {'n/a':>14} {'n/a':>9}")


if __name__ == "__main__":
    main()
