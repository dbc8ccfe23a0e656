#!/usr/bin/env python3
"""Compare the compiled and pure-numpy kernel backends on the hot paths.

Usage:  python3 benchmarks/bench_kernels.py

The backend is fixed at import time by the HENIGCERT_PURE_NUMPY
environment variable, so the driver re-runs itself once per backend in a
subprocess and prints a side-by-side table: batch max-affine evaluation,
the grid efficiency oracle, and certificate generation (a long run of
small simplex solves).
"""

import json
import os
import subprocess
import sys
import time

WORKER_FLAG = "--worker"


def run_workloads():
    import numpy as np

    from henigcert import BACKEND
    from henigcert._kernels import max_affine_batch, warmup
    from henigcert import example_q
    from henigcert.certificates import generate_eps_certificate
    from henigcert.cones import PolyhedralCone
    from henigcert.convex import PolyhedralFn, Polyhedron
    from henigcert.fractional import FractionalProblem, henig_check_bruteforce
    from henigcert.grids import GridSpec

    warmup()
    results = {"backend": BACKEND}

    rng = np.random.default_rng(0)
    A = rng.normal(size=(8, 3))
    b = rng.normal(size=8)
    X = rng.normal(size=(200_000, 3))
    t0 = time.perf_counter()
    for _ in range(20):
        max_affine_batch(A, b, X)
    results["max_affine 20 x 200k points"] = time.perf_counter() - t0

    prob = example_q.build_problem()
    grid = GridSpec.parse("401x401:[0,10]x[0,1]")
    t0 = time.perf_counter()
    verdict = henig_check_bruteforce(prob, example_q.XBAR, grid)
    assert verdict.kind == "properly_efficient"
    results["efficiency oracle 401x401"] = time.perf_counter() - t0

    absfn = PolyhedralFn([[1.0], [-1.0]], [0.0, 0.0])
    neg_one = PolyhedralFn([[0.0]], [-1.0])
    toy = FractionalProblem(
        1,
        [(absfn, neg_one), (absfn, neg_one)],
        [PolyhedralFn([[1.0]], [-1.0])],
        PolyhedralCone.nonneg_orthant(1),
        Polyhedron(A=[[1.0], [-1.0]], b=[1.0, 1.0]),
    )
    t0 = time.perf_counter()
    _, trace = generate_eps_certificate(toy, np.zeros(1), N=400)
    assert float(np.max(trace)) <= 1e-9
    results["certificate generation N=400"] = time.perf_counter() - t0

    return results


def run_backend(pure_numpy):
    env = dict(os.environ)
    if pure_numpy:
        env["HENIGCERT_PURE_NUMPY"] = "1"
    else:
        env.pop("HENIGCERT_PURE_NUMPY", None)
    out = subprocess.run(
        [sys.executable, os.path.abspath(__file__), WORKER_FLAG],
        env=env,
        check=True,
        capture_output=True,
        text=True,
    )
    return json.loads(out.stdout)


def main():
    if WORKER_FLAG in sys.argv:
        print(json.dumps(run_workloads()))
        return
    jit = run_backend(pure_numpy=False)
    plain = run_backend(pure_numpy=True)
    width = max(len(k) for k in jit if k != "backend")
    print(f"{'workload'.ljust(width)}  {jit['backend']:>10}  {plain['backend']:>10}  speedup")
    for key in jit:
        if key == "backend":
            continue
        a, b = jit[key], plain[key]
        print(f"{key.ljust(width)}  {a:>9.3f}s  {b:>9.3f}s  {b / a:>6.2f}x")


if __name__ == "__main__":
    main()
