"""Time the numba and numpy kernel backends on representative grids.

    python benchmarks/bench_kernels.py [--repeat N] [--size 2d|3d|all]

Each kernel is warmed up once (numba compilation is excluded) and the best
of ``--repeat`` runs is reported together with the max abs difference
between the two backends.
"""
import argparse
import time

import numpy as np

from lrseg import kernels
from lrseg.interaction import stencil_from_radius

CASES = {
    "2d": dict(shape=(320, 320), h=1 / 128, R=0.25),
    "3d": dict(shape=(76, 76, 76), h=1 / 48, R=0.25),
}


def _time(fn, repeat):
    fn()
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench(case, repeat):
    rng = np.random.default_rng(0)
    spec = CASES[case]
    shape = spec["shape"]
    n = len(shape)
    field = rng.random(shape)
    c = rng.random(shape) * 10
    omega = np.zeros(shape, dtype=bool)
    omega[(slice(2, -2),) * n] = True
    mask = rng.random(shape) < 0.01
    st = stencil_from_radius(spec["R"], spec["h"], n, "average")
    jobs = {
        "ball_sum": lambda: kernels.ball_sum(field, st.rows, st.widths, omega),
        "ball_max": lambda: kernels.ball_max(field, st.rows, st.widths, omega),
        "relax_jacobi": lambda: kernels.relax_jacobi(field, c, omega, spec["h"] ** 2, 0.8),
        "relax_redblack": lambda: kernels.relax_redblack(field, c, omega, spec["h"] ** 2, 0.8),
        "laplacian": lambda: kernels.laplacian(field, spec["h"] ** 2),
        "squared_edt": lambda: kernels.squared_edt(mask),
    }
    print(f"\n{case} grid {shape}, stencil cells {st.cell_count}")
    print(f"{'kernel':<16}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}{'max diff':>12}")
    for name, fn in jobs.items():
        times, outs = {}, {}
        for backend in ("numba", "numpy"):
            kernels.set_backend(backend)
            times[backend] = _time(fn, repeat)
            outs[backend] = fn()
        diff = float(np.abs(outs["numba"] - outs["numpy"]).max())
        print(f"{name:<16}{times['numba']:>12.4f}{times['numpy']:>12.4f}"
              f"{times['numpy'] / times['numba']:>10.1f}{diff:>12.2e}")
    kernels.set_backend("numba")


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--size", choices=("2d", "3d", "all"), default="all")
    args = p.parse_args()
    for case in (("2d", "3d") if args.size == "all" else (args.size,)):
        bench(case, args.repeat)


if __name__ == "__main__":
    main()
