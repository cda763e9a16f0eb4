"""Time the numpy and compiled kernel backends side by side.

    python benchmarks/bench_kernels.py [--sizes 32,64,128] [--iters 500]

Prints one row per (kernel, N) with the mean wall time of each backend and the
speedup.  Without the compiled extension only the numpy column is filled.
"""

import argparse
import time

import numpy as np

from buot import _backend
from buot.generators import gaussians2d
from buot.grid import FluxField, ScalarField, divergence, gradient, make_grid
from buot.pdhg import SolverConfig, solve


def best_of(fn, repeat=5):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def cases(N, iters):
    g = make_grid(2, 1.0, N)
    rng = np.random.default_rng(0)
    m = FluxField(g, rng.standard_normal((2, g.n_points)))
    u = ScalarField(g, rng.standard_normal(g.n_points))
    rho0, rho1 = gaussians2d(g)
    # fixed iteration count: tol is unreachable so every backend does the same work
    ot = SolverConfig(p=2, tol=1e-300, max_iters=iters)
    uot = SolverConfig(alpha=0.5, p=2, tol=1e-300, max_iters=iters)
    return {
        "divergence": lambda: divergence(m),
        "gradient": lambda: gradient(u),
        f"OT solve x{iters}": lambda: solve(rho0, rho1, ot),
        f"UOT solve x{iters}": lambda: solve(rho0, rho1, uot),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="32,64,128")
    ap.add_argument("--iters", type=int, default=500)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    backends = ["python"] + (["cython"] if _backend.compiled is not None else [])
    print(f"{'kernel':<22}{'N':>6}" + "".join(f"{b + ' [s]':>14}" for b in backends)
          + ("   speedup" if len(backends) > 1 else ""))
    previous = _backend.NAME
    try:
        for N in (int(s) for s in args.sizes.split(",")):
            timings = {}
            for b in backends:
                _backend.use(b)
                for name, fn in cases(N, args.iters).items():
                    timings.setdefault(name, []).append(best_of(fn, args.repeat))
            for name, ts in timings.items():
                row = f"{name:<22}{N:>6}" + "".join(f"{t:>14.6f}" for t in ts)
                if len(ts) > 1:
                    row += f"{ts[0] / ts[1]:>9.1f}x"
                print(row)
    finally:
        _backend.use(previous)


if __name__ == "__main__":
    main()
