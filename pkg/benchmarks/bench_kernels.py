"""Compare the compiled and numpy path kernels.

    python3 benchmarks/bench_kernels.py [--paths N] [--repeat R]

Reports wall time and ns per path-step for each available backend and
checks that both produce the same numbers.
"""

import argparse
import time

import numpy as np

from landscape_lab import _backend, model
from landscape_lab.grid import make_grid
from landscape_lab.pathint import PathConfig, exit_times, run_paths


def best_of(fn, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--paths", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    g = make_grid(2, -0.5, 0.5, 129)
    V = model.build_potential(g, model.desk_potential_spec())
    mspec = model.desk_magnetic_spec(70.0)
    A = model.build_magnetic(g, mspec)
    dA = model.divergence_field(g, mspec)
    cfg = PathConfig(args.paths, 1e-5, (1e-4, 5e-4), seed=1, bridge_correction=True)
    n_steps = int(round(cfg.t_grid[-1] / cfg.dt))

    cases = {
        "walk (V only)": lambda be: run_paths(V, [0.1, -0.2], cfg, backend=be).sv,
        "walk (magnetic)": lambda be: run_paths(V, [0.1, -0.2], cfg, A=A, div_A=dA, backend=be).phase,
        "exit_times (d=2)": lambda be: exit_times(2, 0.05, 1e-5, n_steps, 3, args.paths, backend=be),
    }
    print(f"{args.paths} paths x {n_steps} steps, best of {args.repeat}")
    print(f"{'kernel':<18} {'backend':<8} {'seconds':>9} {'ns/step':>9} {'speedup':>8}")
    for name, fn in cases.items():
        times, outs = {}, {}
        for be in _backend.available():
            times[be], outs[be] = best_of(lambda: fn(be), args.repeat)
        base = times.get("python")
        for be, t in times.items():
            ns = 1e9 * t / (args.paths * n_steps)
            print(f"{name:<18} {be:<8} {t:9.3f} {ns:9.1f} {base / t:7.1f}x")
        if len(outs) == 2:
            a, b = outs["cython"], outs["python"]
            fin = np.isfinite(a)
            same = np.array_equal(fin, np.isfinite(b)) and np.allclose(a[fin], b[fin], rtol=0, atol=1e-12)
            print(f"{'':<18} backends agree: {same}")


if __name__ == "__main__":
    main()
