#!/usr/bin/env python3
"""Benchmark the solver hot kernels: compiled extension vs numpy fallback.

Times the two per-iteration kernels (injection evaluation and Jacobian
assembly) on synthetic dense networks of increasing size, then a full
Newton solve through whichever backend is active.

    python3 benchmarks/bench_powerflow.py [--sizes 20,50,100,200] [--repeat 200]
"""

import argparse
import time

import numpy as np

import sgml.powerflow._accel_py as pure

try:
    import sgml.powerflow._accel as compiled
except ImportError:
    compiled = None


def synthetic_case(n: int, seed: int = 7):
    """Random radial-ish admittance structure with realistic magnitudes."""
    rng = np.random.default_rng(seed)
    g = np.zeros((n, n))
    b = np.zeros((n, n))
    for i in range(1, n):
        j = int(rng.integers(0, i))
        r = rng.uniform(0.004, 0.02)
        x = rng.uniform(0.03, 0.12)
        y = 1.0 / complex(r, x)
        g[i, i] += y.real
        g[j, j] += y.real
        b[i, i] += y.imag
        b[j, j] += y.imag
        g[i, j] -= y.real
        g[j, i] -= y.real
        b[i, j] -= y.imag
        b[j, i] -= y.imag
    vm = rng.uniform(0.95, 1.05, n)
    va = rng.uniform(-0.1, 0.1, n)
    va[0] = 0.0
    pvpq = np.arange(1, n, dtype=np.intp)
    pq = np.arange(1, n, dtype=np.intp)
    return g, b, vm, va, pvpq, pq


def time_backend(impl, g, b, vm, va, pvpq, pq, repeat: int) -> tuple[float, float]:
    p, q = impl.calc_injections(g, b, vm, va)
    impl.build_jacobian(g, b, vm, va, p, q, pvpq, pq)  # warm-up
    t0 = time.perf_counter()
    for _ in range(repeat):
        p, q = impl.calc_injections(g, b, vm, va)
    t_inj = (time.perf_counter() - t0) / repeat
    t0 = time.perf_counter()
    for _ in range(repeat):
        impl.build_jacobian(g, b, vm, va, p, q, pvpq, pq)
    t_jac = (time.perf_counter() - t0) / repeat
    return t_inj * 1e6, t_jac * 1e6


def bench_full_solve(repeat: int) -> None:
    from sgml.fixtures import multisub_files
    from sgml.build import build_range_model
    from sgml.parsing import source_from_bytes
    from sgml.powerflow import SolverSettings, accel, build_network, \
        injections_from_model, solve

    files = multisub_files()
    sources = [source_from_bytes(d, n) for n, d in files.items()]
    model = build_range_model(sources).model.substation
    net = build_network(model)
    inj = injections_from_model(model)
    solve(net, inj, model, SolverSettings())  # warm-up
    t0 = time.perf_counter()
    for _ in range(repeat):
        state = solve(net, inj, model, SolverSettings())
    per_solve = (time.perf_counter() - t0) / repeat * 1e3
    print(f"\nfull solve, 5-substation model ({len(net.bus_ids)} buses, "
          f"backend={accel.BACKEND}): {per_solve:.3f} ms/solve "
          f"({state.iterations} iterations)")


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--sizes", default="20,50,100,200")
    parser.add_argument("--repeat", type=int, default=200)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    if compiled is None:
        print("compiled extension not built; showing numpy fallback only")
    header = f"{'n':>5} | {'numpy inj us':>12} {'numpy jac us':>12}"
    if compiled is not None:
        header += f" | {'cython inj us':>13} {'cython jac us':>13} | {'jac speedup':>11}"
    print(header)
    print("-" * len(header))
    for n in sizes:
        case = synthetic_case(n)
        p_inj, p_jac = time_backend(pure, *case, repeat=args.repeat)
        row = f"{n:>5} | {p_inj:>12.1f} {p_jac:>12.1f}"
        if compiled is not None:
            c_inj, c_jac = time_backend(compiled, *case, repeat=args.repeat)
            row += f" | {c_inj:>13.1f} {c_jac:>13.1f} | {p_jac / c_jac:>10.2f}x"
            pn, qn = pure.calc_injections(*case[:4])
            pc, qc = compiled.calc_injections(*case[:4])
            assert np.allclose(pn, pc) and np.allclose(qn, qc)
        print(row)

    bench_full_solve(max(20, args.repeat // 10))


if __name__ == "__main__":
    main()
