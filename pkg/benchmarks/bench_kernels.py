"""Time the hot kernels under the numba and pure-numpy backends.

Each backend runs in its own interpreter because the choice is made at
import time from ``COORDLAB_NO_NUMBA``.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from coordlab import kernels, kernel_backend
from coordlab.dsbs import dsbs_joint
from coordlab.regions import SolverOptions, _simplex_grid, wyner_common_information
from coordlab.scheme import case5_scheme_spec, run_trial

repeat = int(sys.argv[1])
rng = np.random.default_rng(0)
s = np.array([[0.45, 0.05], [0.05, 0.45]])
q = s @ np.array([[0.8, 0.2], [0.2, 0.8]])
nw = 5
theta = rng.normal(0.0, 1.0, 20)
lam = np.zeros((2, 2))
rows = _simplex_grid(50, 2)
bvals = np.linspace(0, 1, 51)
K = rng.dirichlet(np.ones(4), size=5)
words = rng.integers(0, 5, size=(64, 6)).astype(np.int64)
spec = case5_scheme_spec(n=6)

cases = {
    "objective_grad x1000": lambda: [kernels.objective_grad(theta, s, q, 0.1, 50.0, 1e3, lam, nw) for _ in range(1000)],
    "wyner_ci (32 starts)": lambda: wyner_common_information(dsbs_joint(0.2), SolverOptions(starts=32)),
    "grid_search_exact step 0.02": lambda: kernels.grid_search_exact(s, q, 0.0, rows, bvals),
    "sequence_table 64 x 4^6": lambda: kernels.sequence_table(words, K),
    "soft-covering trial n=6": lambda: run_trial(spec, 0),
}
out = {"backend": kernel_backend(), "times": {}}
for name, fn in cases.items():
    fn()  # compile / warm caches
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    out["times"][name] = best
print(json.dumps(out))
"""


def run_backend(no_numba: bool, repeat: int) -> dict:
    env = dict(os.environ, COORDLAB_NO_NUMBA="1" if no_numba else "0")
    res = subprocess.run(
        [sys.executable, "-c", WORKER, str(repeat)], env=env, capture_output=True, text=True, check=True
    )
    return json.loads(res.stdout)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    fast = run_backend(False, args.repeat)
    slow = run_backend(True, args.repeat)
    print(f"{'kernel':32s} {fast['backend']:>10s} {slow['backend']:>10s} {'ratio':>8s}")
    for name, t in fast["times"].items():
        u = slow["times"][name]
        print(f"{name:32s} {t * 1e3:9.2f}ms {u * 1e3:9.2f}ms {u / t:7.1f}x")


if __name__ == "__main__":
    main()
