"""Time the hot kernels on both backends.

    python benchmarks/bench_kernels.py --nx 137 --ny 97 --repeat 5

Each kernel is called once untimed (so numba compilation is excluded),
then ``--repeat`` times; the best time is reported.
"""
from __future__ import annotations

import argparse
import json
import time

import numpy as np

from mzres._backend import HAVE_NUMBA
from mzres.core import FreestreamConditions
from mzres.discretization import Discretization, NumericalFluxConfig
from mzres.gridgen import FlatPlateGridSpec, generate_flatplate_grid
from mzres.solver import ImplicitSolver, SolverConfig


def _best(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench(backend, nx, ny, repeat):
    fs = FreestreamConditions(mach=0.15, reynolds=1e4)
    grid = generate_flatplate_grid(FlatPlateGridSpec(nx=nx, ny=ny))
    disc = Discretization(grid, fs, NumericalFluxConfig(viscous=True), backend=backend)
    rng = np.random.default_rng(0)
    w = np.tile(fs.w_inf, (grid.n_nodes, 1))
    w[:, 1] *= 1.0 + 0.05 * rng.random(grid.n_nodes)
    w[:, 3] *= 1.0 + 0.01 * rng.random(grid.n_nodes)
    res = disc.residual(w).values
    diag, offd = disc.jacobian(w)
    solver = ImplicitSolver(disc, SolverConfig(sweeps=10))
    return {
        "residual": _best(lambda: disc.residual(w), repeat),
        "jacobian": _best(lambda: disc.jacobian(w), repeat),
        "sgs_10_sweeps": _best(lambda: solver._solve_linear(w, res, diag, offd, 100.0), repeat),
    }


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--nx", type=int, default=137)
    p.add_argument("--ny", type=int, default=97)
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--json", help="also write the timings here")
    args = p.parse_args(argv)

    backends = ["numpy"] + (["numba"] if HAVE_NUMBA else [])
    results = {b: bench(b, args.nx, args.ny, args.repeat) for b in backends}
    print(f"grid {args.nx}x{args.ny}, best of {args.repeat} (seconds)")
    print(f"{'kernel':<16}" + "".join(f"{b:>12}" for b in backends)
          + ("     speed-up" if len(backends) == 2 else ""))
    for k in results["numpy"]:
        row = f"{k:<16}" + "".join(f"{results[b][k]:12.4f}" for b in backends)
        if len(backends) == 2:
            row += f"{results['numpy'][k] / results['numba'][k]:12.1f}x"
        print(row)
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"nx": args.nx, "ny": args.ny, "timings": results}, fh, indent=2)


if __name__ == "__main__":
    main()
