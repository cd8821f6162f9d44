"""Compare the compiled prox kernel against the pure-Python fallback.

Times the batched scalar prox on every penalty family, then a full
matrix-completion solve in a subprocess per backend (the backend is
chosen at import, so the end-to-end comparison needs fresh processes).

Run:  python benchmarks/kernel_benchmark.py
"""

import os
import subprocess
import sys
import time

import numpy as np

from svtkit import _prox_fallback
from svtkit.penalties import FAMILY_CODES

try:
    from svtkit import _prox_kernel
except ImportError:
    _prox_kernel = None

BATCH = 20000
REPEAT = 3


def time_batch(module, code, lam, gam, p, b):
    best = float("inf")
    for _ in range(REPEAT):
        start = time.perf_counter()
        module.prox_batch(code, lam, gam, p, 1.0, b, 1e-12, 10000, 1e-12)
        best = min(best, time.perf_counter() - start)
    return best


def bench_kernels():
    rng = np.random.default_rng(0)
    b = rng.uniform(0.0, 10.0, size=BATCH)
    print(f"batched scalar prox, {BATCH} inputs (best of {REPEAT}):")
    print(f"{'family':>10} {'python':>12} {'compiled':>12} {'speedup':>9}")
    for family, code in FAMILY_CODES.items():
        slow = time_batch(_prox_fallback, code, 1.0, 1.5, 0.5, b)
        if _prox_kernel is None:
            print(f"{family:>10} {slow * 1e3:>10.1f}ms {'-':>12} {'-':>9}")
            continue
        fast = time_batch(_prox_kernel, code, 1.0, 1.5, 0.5, b)
        print(f"{family:>10} {slow * 1e3:>10.1f}ms {fast * 1e3:>10.2f}ms {slow / fast:>8.1f}x")


SOLVE_SNIPPET = """
import time
import numpy as np
from svtkit import backend
from svtkit.data import SyntheticSpec, gen_lowrank
from svtkit.penalties import Penalty
from svtkit.solvers import SolverConfig, gpg_solve

truth, problem = gen_lowrank(SyntheticSpec(120, 120, 10, 0.5, seed=0))
pen = Penalty("logarithm", lam=1.0, gamma=1.5)
lam0 = 0.9 * np.abs(problem.observed).max()
cfg = SolverConfig(penalty=pen, lambda0=lam0, lambda_target=1e-5 * lam0,
                   decay=0.95, continuation_tolerance=1e-3, max_iterations=600)
start = time.perf_counter()
x, trace = gpg_solve(problem, cfg, truth=truth)
elapsed = time.perf_counter() - start
print(f"  {backend():>8}: {elapsed:6.2f}s  ({trace.iterations} iterations, "
      f"rel_err {np.linalg.norm(x - truth) / np.linalg.norm(truth):.2e})")
"""


def bench_solver():
    print("\nend-to-end completion solve (120x120, rank 10, half observed):", flush=True)
    for force_python in ("0", "1"):
        env = dict(os.environ, SVTKIT_PURE_PYTHON=force_python)
        subprocess.run([sys.executable, "-c", SOLVE_SNIPPET], env=env, check=True)


if __name__ == "__main__":
    if _prox_kernel is None:
        print("compiled kernel not available; showing fallback timings only\n")
    bench_kernels()
    bench_solver()
