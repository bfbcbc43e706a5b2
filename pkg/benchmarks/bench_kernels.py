"""Compare the numba-compiled kernels against the pure-Python fallback.

Run with the package installed:

    python3 benchmarks/bench_kernels.py

With DUALPOL_DISABLE_NUMBA=1 only the fallback path exists and the script
reports its timings alone.
"""

import math
import time

import numpy as np

from dualpol import kernels
from dualpol.raytrace.scene import Building, build_scene
from dualpol.raytrace.trace import EDGE_TOL, END_TOL


def packed_scene():
    rng = np.random.default_rng(0)
    buildings = []
    for i in range(2):
        sign = -1.0 if i == 0 else 1.0
        cx = sign * rng.uniform(9, 14)
        w, d = rng.uniform(4, 9), rng.uniform(15, 40)
        fp = np.array(
            [
                [cx - w / 2, -d / 2],
                [cx + w / 2, -d / 2],
                [cx + w / 2, d / 2],
                [cx - w / 2, d / 2],
            ]
        )
        buildings.append(Building(fp, float(rng.uniform(8, 35))))
    return build_scene(37.0, 127.0, buildings, ground_plane=True).packed()


def timeit(func, *args, repeat=5):
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        func(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_ray_blocked(fn, rays):
    verts, offsets, normals, dvals, infinite = packed_scene()
    origins, dirs = rays

    def run():
        hits = 0
        for origin, direction in zip(origins, dirs):
            if fn(verts, offsets, normals, dvals, infinite,
                  origin, direction, -1.0, -1, -1, EDGE_TOL, END_TOL):
                hits += 1
        return hits

    return timeit(run)


def bench_kepler(fn, m, e):
    return timeit(lambda: fn(m, e, 1e-12, 50))


def main():
    rng = np.random.default_rng(1)
    n_rays = 5000
    origins = rng.uniform(-20, 20, size=(n_rays, 3))
    origins[:, 2] = rng.uniform(0.5, 25, size=n_rays)
    dirs = rng.normal(size=(n_rays, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    rays = (origins, dirs)

    m = rng.uniform(-2 * math.pi, 2 * math.pi, size=200_000)
    e = rng.uniform(0.0, 0.1, size=200_000)

    print(f"numba enabled: {kernels.NUMBA_ENABLED}")
    rows = []
    if kernels.NUMBA_ENABLED:
        # warm-up compiles outside the timed region
        bench_ray_blocked(kernels.ray_blocked, rays)
        bench_kepler(kernels.solve_kepler_batch, m[:10], e[:10])
        jit_ray = bench_ray_blocked(kernels.ray_blocked, rays)
        jit_kep = bench_kepler(kernels.solve_kepler_batch, m, e)
        py_ray = bench_ray_blocked(kernels.ray_blocked.py_func, rays)
        py_kep = bench_kepler(kernels.solve_kepler_batch.py_func, m, e)
        rows.append(("ray_blocked (5k rays)", py_ray, jit_ray))
        rows.append(("solve_kepler_batch (200k)", py_kep, jit_kep))
        for name, py, jit in rows:
            print(f"{name:28s} python {py * 1e3:9.2f} ms   "
                  f"numba {jit * 1e3:9.2f} ms   speedup {py / jit:6.1f}x")
    else:
        py_ray = bench_ray_blocked(kernels.ray_blocked, rays)
        py_kep = bench_kepler(kernels.solve_kepler_batch, m, e)
        print(f"ray_blocked (5k rays)        python {py_ray * 1e3:9.2f} ms")
        print(f"solve_kepler_batch (200k)    python {py_kep * 1e3:9.2f} ms")


if __name__ == "__main__":
    main()
