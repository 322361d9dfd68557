"""Compiled vs. fallback timings of the hot kernels.

Run: python3 benchmarks/bench_kernels.py

The same workloads are timed twice: once in this process (numba kernels)
and once in a child process started with CONDRDP_DISABLE_NUMBA=1, where
every kernel runs as plain Python/NumPy.
"""
import json
import os
import subprocess
import sys
import time

import numpy as np


def best_of(fn, repeat=3):
    fn()  # warm-up (compilation on the numba path)
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def workloads():
    from condrdp import build_envelope
    from condrdp._envelope import min_planes
    from condrdp._ot import transport_simplex
    from condrdp._rdp_kernel import al_solve

    rng = np.random.default_rng(0)
    env = build_envelope(256)
    dq = rng.uniform(0, 0.5, 20_000)
    pq = rng.uniform(0, 0.5, 20_000)
    n = 24
    a = rng.dirichlet(np.ones(n))
    b = rng.dirichlet(np.ones(n))
    C = rng.uniform(size=(n, n))
    p = np.array([0.5, 0.5])
    d = 1.0 - np.eye(2)
    E0 = rng.dirichlet(np.ones(6), 2)
    G0 = rng.dirichlet(np.ones(2), 6)
    return {
        f"envelope min over {env.n_facets} planes": lambda: min_planes(env.plane_a, env.plane_b, env.plane_c, dq, pq),
        f"transport simplex {n}x{n}": lambda: transport_simplex(a, b, C, 1e-12),
        "augmented Lagrangian (3x50 steps)": lambda: al_solve(p, d, d, 0.3, 0.05, E0, G0, False, 3, 50,
                                                              10.0, 1e-8, 0.0, 0.0),
    }


def timings(repeat):
    return {name: best_of(fn, repeat) for name, fn in workloads().items()}


def main():
    if "--child" in sys.argv:
        print(json.dumps(timings(1)))
        return
    from condrdp._accel import backend

    fast = timings(3)
    env = dict(os.environ, CONDRDP_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, __file__, "--child"], env=env, check=True,
                         capture_output=True, text=True).stdout
    slow = json.loads(out.strip().splitlines()[-1])
    print(f"in-process backend: {backend()}")
    for name, t in fast.items():
        s = slow[name]
        print(f"{name:36s} numba {t * 1e3:9.3f} ms   fallback {s * 1e3:10.3f} ms   x{s / t:8.1f}")


if __name__ == "__main__":
    main()
