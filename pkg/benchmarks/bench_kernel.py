"""Compare the compiled and numpy velocity-node kernels.

Run with ``python benchmarks/bench_kernel.py [--nodes N] [--repeat R]``.
"""

import argparse
import timeit

import numpy as np

from doublelambda import FieldState, VelocityGrid, kernel, na2_hinze
from doublelambda.doppler import node_detunings


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nodes", type=int, nargs="+", default=[257, 1801, 7201])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    params = na2_hinze()
    fields = FieldState.from_mhz((1000, 0, 242, 1), 2140, 2140, 1770)
    print(f"compiled kernel available: {kernel.BACKEND == 'cython'}")
    print(f"{'nodes':>6} {'mixing':>6} {'numpy ms':>10} {'cython ms':>10} {'speedup':>8} {'max rel diff':>12}")
    for n in args.nodes:
        grid = VelocityGrid.for_params(params, n=n)
        O = node_detunings(params, fields, grid)
        for mixing in (False, True):
            def call(backend):
                return kernel.average_response(params, fields.G[0], fields.G[2], O, grid.weights,
                                               mixing=mixing, backend=backend)

            t_np = min(timeit.repeat(lambda: call("numpy"), number=1, repeat=args.repeat)) * 1e3
            if kernel.BACKEND != "cython":
                print(f"{n:6d} {mixing!s:>6} {t_np:10.2f} {'-':>10} {'-':>8} {'-':>12}")
                continue
            t_c = min(timeit.repeat(lambda: call("cython"), number=1, repeat=args.repeat)) * 1e3
            a, b = call("numpy"), call("cython")
            diff = max(np.max(np.abs(x - y)) / max(np.max(np.abs(x)), 1e-300) for x, y in zip(a, b))
            print(f"{n:6d} {mixing!s:>6} {t_np:10.2f} {t_c:10.2f} {t_np / t_c:8.1f} {diff:12.2e}")


if __name__ == "__main__":
    main()
