"""Timing comparison of the compiled kernels against the numpy fallback.

Run as:  python3 benchmarks/bench_kernels.py [--nx 64] [--steps 50]

Times the three hot kernels (CSR matvec, Jacobi-CG solve, taxis assembly)
on operators from an nx-by-nx mesh, then a short IMEX stepping run under
each backend. Prints one table; speedup is python time over compiled time.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from igpsim._kernels import available_backends
from igpsim import fem as fem_mod
from igpsim import sparse_la as la_mod
from igpsim.fem import build_operators
from igpsim.io_cli import loads_config
from igpsim.mesh import build_rect_mesh
from igpsim.stepper import run

RUN_CFG = """
[model]
id = 1

[params]
e1 = 1.0
e2 = 10.0

[mesh]
nx = {nx}
ny = {nx}

[time]
dt = 0.001
t_end = {t_end}

[fields]
K = "2*exp(-5*((x+.75)^2+(y-.75)^2))+2*exp(-5*((x-.75)^2+(y+.75)^2))+2*exp(-5*((x+.75)^2+(y+.75)^2))+2*exp(-5*((x-.75)^2+(y-.75)^2))"
u0 = "2*exp(-10*(x^2+(y-.9)^2))*(1-x^2)^2*(1-y^2)^2"
v0 = "2*exp(-(x+.9)^2-(y+.9)^2)*(1-x^2)^2*(1-y^2)^2"
w0 = "1.5"
"""


def _best_of(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_kernels(nx: int, repeats: int) -> dict[str, dict[str, float]]:
    backends = available_backends()
    m = build_rect_mesh(nx, nx)
    ops = build_operators(m)
    mat = ops.M.with_data(ops.M.data + 1e-4 * ops.S.data)
    diag = mat.diagonal()
    rng = np.random.default_rng(3)
    x = rng.standard_normal(m.n_nodes)
    b = mat.matvec(x)
    chi = rng.uniform(-1.0, 1.0, m.n_nodes)
    s = rng.uniform(0.0, 2.0, m.n_nodes)

    out: dict[str, dict[str, float]] = {}
    for name, mod in backends.items():
        res: dict[str, float] = {}
        res["matvec"] = _best_of(
            lambda: mod.csr_matvec(mat.indptr, mat.indices, mat.data, x),
            repeats * 10,
        )
        res["cg_solve"] = _best_of(
            lambda: mod.cg_jacobi(
                mat.indptr, mat.indices, mat.data, diag, b,
                np.zeros(m.n_nodes), 1e-10, 2000,
            ),
            repeats,
        )
        res["taxis"] = _best_of(
            lambda: mod.taxis_rhs(
                m.elements, m.area, m.grad_x, m.grad_y, chi, s, m.n_nodes
            ),
            repeats * 10,
        )
        out[name] = res
    return out


def bench_run(nx: int, steps: int) -> dict[str, float]:
    backends = available_backends()
    cfg = loads_config(RUN_CFG.format(nx=nx, t_end=steps * 1e-3), source="bench")
    out: dict[str, float] = {}
    saved = (la_mod._matvec_backend, la_mod._cg_backend, fem_mod._taxis_backend)
    try:
        for name, mod in backends.items():
            la_mod._matvec_backend = mod.csr_matvec
            la_mod._cg_backend = mod.cg_jacobi
            fem_mod._taxis_backend = mod.taxis_rhs
            t0 = time.perf_counter()
            run(cfg)
            out[name] = time.perf_counter() - t0
    finally:
        la_mod._matvec_backend, la_mod._cg_backend, fem_mod._taxis_backend = saved
    return out


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--nx", type=int, default=64, help="mesh cells per side")
    ap.add_argument("--steps", type=int, default=50, help="time steps in the run benchmark")
    ap.add_argument("--repeats", type=int, default=5, help="best-of repeat count")
    args = ap.parse_args()

    backends = available_backends()
    print(f"backends available: {', '.join(backends)}")
    if "compiled" not in backends:
        print("compiled extension not importable; timing the fallback only")

    kern = bench_kernels(args.nx, args.repeats)
    n = (args.nx + 1) ** 2
    print(f"\nkernels on a {args.nx}x{args.nx} mesh ({n} nodes), best of {args.repeats}:")
    header = f"{'kernel':<10}" + "".join(f"{name:>14}" for name in kern)
    if len(kern) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for key in ("matvec", "cg_solve", "taxis"):
        row = f"{key:<10}"
        times = [kern[name][key] for name in kern]
        for t in times:
            row += f"{t * 1e3:>12.3f}ms"
        if len(times) == 2:
            row += f"{times[0] / times[1]:>9.1f}x"
        print(row)

    runs = bench_run(args.nx, args.steps)
    print(f"\nIMEX run, {args.steps} steps at {args.nx}x{args.nx}:")
    for name, t in runs.items():
        print(f"  {name:<10} {t:.3f}s  ({t / args.steps * 1e3:.2f} ms/step)")
    if len(runs) == 2:
        print(f"  speedup    {runs['python'] / runs['compiled']:.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
