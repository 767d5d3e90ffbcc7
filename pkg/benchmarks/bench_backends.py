#!/usr/bin/env python
"""Benchmark the numba kernels against the pure-numpy fallback.

Times the two hot loops of the package on identical inputs:

* ``trig_eval`` — trigonometric-polynomial evaluation on a dense grid
  (the measurement-operator adjoint evaluated for plots and scans);
* ``pdhg_tgv`` — the primal-dual iteration at the core of the
  grid-based total-generalized-variation oracle, run for a fixed
  number of iterations so both backends do identical work.

The numba variants are JIT-compiled on a warm-up call that is excluded
from the timing.  Besides wall times the script reports the maximum
absolute disagreement between the two implementations, which should sit
at the floating-point round-off level.

Run from the repository root after an editable install:

    python benchmarks/bench_backends.py
    python benchmarks/bench_backends.py --grid 2000000 --repeats 5
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from tgv1d import kernels


def _best_of(repeats, fn, *args):
    """Return (best wall time in seconds, last result) over `repeats` calls."""
    best = np.inf
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, result


def bench_trig_eval(n_grid, repeats, rng):
    """Time trig_eval on an n_grid-point grid with 8 frequencies."""
    x = np.linspace(0.0, 10.0, n_grid)
    freqs = np.array([(j * 10.0) / 9.0 for j in range(1, 9)])
    cos_c = rng.standard_normal(8)
    sin_c = rng.standard_normal(8)
    poly_c = rng.standard_normal(3)

    rows = []
    t_np, y_np = _best_of(repeats, kernels.trig_eval_numpy, x, freqs, cos_c, sin_c, poly_c)
    rows.append(("numpy", t_np, 0.0))
    if kernels.BACKEND == "numba":
        kernels.trig_eval_numba(x[:8], freqs, cos_c, sin_c, poly_c)  # JIT warm-up
        t_nb, y_nb = _best_of(repeats, kernels.trig_eval_numba, x, freqs, cos_c, sin_c, poly_c)
        rows.append(("numba", t_nb, float(np.max(np.abs(y_nb - y_np)))))
    return rows


def bench_pdhg(n_cells, n_iter, repeats, rng):
    """Time pdhg_tgv for exactly n_iter iterations on an n_cells problem."""
    d = np.cumsum(rng.standard_normal(n_cells)) * 0.1
    h = np.full(n_cells, 10.0 / n_cells)
    w0 = np.zeros(n_cells)
    q0 = np.zeros(n_cells - 1)
    # An unreachable dual value and tol=0 force exactly n_iter iterations,
    # so both backends execute the same amount of work.
    args = (d, h, 2.205, 2.5344, -1e300, 0.0, n_iter, n_iter)

    rows = []
    t_np, out_np = _best_of(repeats, kernels.pdhg_tgv_numpy, w0, q0, *args)
    rows.append(("numpy", t_np, 0.0))
    if kernels.BACKEND == "numba":
        kernels.pdhg_tgv_numba(w0[:16], q0[:15], d[:16], h[:16], 2.205, 2.5344, -1e300, 0.0, 8, 8)
        t_nb, out_nb = _best_of(repeats, kernels.pdhg_tgv_numba, w0, q0, *args)
        rows.append(("numba", t_nb, float(np.max(np.abs(out_nb[0] - out_np[0])))))
    return rows


def _print_table(title, rows):
    print(title)
    base = rows[0][1]
    for name, seconds, err in rows:
        speedup = base / seconds if seconds > 0 else float("inf")
        print(f"  {name:<6} {seconds * 1e3:10.2f} ms   x{speedup:5.2f}   max |diff| = {err:.3e}")
    print()


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--grid", type=int, default=1_000_000,
                        help="grid points for trig_eval (default 1e6)")
    parser.add_argument("--cells", type=int, default=20_000,
                        help="cells for the primal-dual iteration (default 20000)")
    parser.add_argument("--iters", type=int, default=2_000,
                        help="primal-dual iterations per run (default 2000)")
    parser.add_argument("--repeats", type=int, default=3,
                        help="repetitions per measurement, best-of (default 3)")
    parser.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    args = parser.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    print(f"active backend: {kernels.BACKEND}")
    if kernels.BACKEND != "numba":
        print("numba not active (set TGV1D_BACKEND=numba to require it); "
              "timing the numpy path only\n")
    else:
        print()

    _print_table(
        f"trig_eval: {args.grid:,} points, 8 frequencies, best of {args.repeats}",
        bench_trig_eval(args.grid, args.repeats, rng),
    )
    _print_table(
        f"pdhg_tgv: {args.cells:,} cells x {args.iters:,} iterations, best of {args.repeats}",
        bench_pdhg(args.cells, args.iters, args.repeats, rng),
    )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
