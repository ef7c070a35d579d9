"""Compare the compiled kernels with the numpy fallback.

    python benchmarks/bench_kernels.py [--grid 12] [--radius 4] [--repeat 3]

Times a full ball-mass field, a sup field and one relaxation sweep on each
backend and checks that both produce identical results.
"""

import argparse
import math
import time

import numpy as np

from gaugelab import _kernels_py
from gaugelab.lattice import Lattice
from gaugelab.su2 import identity_frame, random_links

try:
    from gaugelab import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def _ball(impl, lat, values, k, mode):
    triples, half = lat.triples(k)
    win = impl.line_windows(values, math.isqrt(k), lat.periodic, mode, 1)
    return impl.ball_reduce(win, triples, half, lat.periodic, mode, 1)


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def run(grid, radius, repeat):
    lat = Lattice.cubic(grid, 1.0)
    k = lat.radius_key(radius)
    rng = np.random.default_rng(0)
    values = rng.random(lat.dims)
    U = random_links(lat, 1)
    links = np.ascontiguousarray(U.links)
    rows = []
    impls = [("python", _kernels_py)] + ([("cython", _ckernels)] if _ckernels else [])
    results = {}
    for name, impl in impls:
        t_sum, s = _best(lambda: _ball(impl, lat, values, k, impl.SUM), repeat)
        t_max, m = _best(lambda: _ball(impl, lat, s, k, impl.MAX), repeat)

        def sweep():
            f = np.array(identity_frame(lat).values, order="C")
            impl.relax_sweep(links, f, 0, 1.7, 1.0, 1)
            return f

        t_relax, f = _best(sweep, repeat)
        results[name] = (s, m, f)
        rows.append((name, t_sum, t_max, t_relax))
    print(f"grid {grid}^4, radius {radius} (key {k}), best of {repeat}")
    print(f"{'backend':8s} {'ball sum':>10s} {'ball max':>10s} {'sweep':>10s}")
    for name, a, b, c in rows:
        print(f"{name:8s} {a:10.4f} {b:10.4f} {c:10.4f}")
    if len(rows) == 2:
        py, cy = rows
        print(f"{'speedup':8s} {py[1] / cy[1]:10.1f} {py[2] / cy[2]:10.1f} {py[3] / cy[3]:10.1f}")
        same = all(np.array_equal(x, y) for x, y in zip(results["python"][:2], results["cython"][:2]))
        close = np.max(np.abs(results["python"][2] - results["cython"][2]))
        print(f"ball fields identical: {same}; sweep max difference: {close:.2e}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--grid", type=int, default=12)
    ap.add_argument("--radius", type=float, default=4.0)
    ap.add_argument("--repeat", type=int, default=3)
    a = ap.parse_args()
    run(a.grid, a.radius, a.repeat)


if __name__ == "__main__":
    main()
