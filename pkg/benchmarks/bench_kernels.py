"""Compare the compiled kernels with the pure-Python fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]

Kernel timings run in-process against both modules. The end-to-end rows
start a fresh interpreter per backend, since the backend is chosen at import.
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from dispersive_readout import _purepy

try:
    from dispersive_readout import _kernels
except ImportError:
    _kernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def kernel_cases(mod):
    out = np.empty(1_000_000, dtype=np.int64)
    pts = [(n, 0.9 * n + 3.0) for n in range(1, 2000, 4)]

    def tails():
        for n, x in pts:
            mod.log_poisson_cdf(n, x)
            mod.log_poisson_sf(n, x)

    def fidel():
        for n, x in pts:
            mod.branch_fidelity(n, 1.3 * x, x)

    return {
        "poisson tails (1000 calls)": tails,
        "branch fidelity (500 calls)": fidel,
        "sample 1e6 Poisson(7.3)": lambda: mod.sample_poisson(7.3, 1, 2, out),
        "sample 1e6 Poisson(120)": lambda: mod.sample_poisson(120.0, 1, 2, out),
        "simulate 1e6 trials": lambda: mod.simulate(1, 2, 1_000_000, 16.6, 12.8, 1, 15),
    }


E2E = {
    "optimal detuning, 200 times": (
        "from dispersive_readout.fidelity_opt import fidelity_optimal_detuning as f\n"
        "[f(1.0, 0.2 * i + 0.1) for i in range(200)]"
    ),
    "joint optimum, 50 times": (
        "from dispersive_readout.fidelity_opt import fidelity_joint_optimum as f\n"
        "[f(0.5 * i + 0.5) for i in range(50)]"
    ),
}


def e2e(code, pure):
    env = dict(os.environ)
    env["DISPERSIVE_READOUT_PURE"] = "1" if pure else "0"
    prog = (
        "import time\nt0 = time.perf_counter()\n"
        + code
        + "\nprint(time.perf_counter() - t0)"
    )
    res = subprocess.run([sys.executable, "-c", prog], env=env, capture_output=True, text=True, check=True)
    return float(res.stdout.strip())


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if _kernels is None:
        print("compiled kernels not built; only the fallback can run", file=sys.stderr)
    header = f"{'case':34s} {'compiled [s]':>13s} {'python [s]':>11s} {'speedup':>8s}"
    print(header)
    print("-" * len(header))
    py_cases = kernel_cases(_purepy)
    cy_cases = kernel_cases(_kernels) if _kernels else {}
    for name, fn in py_cases.items():
        t_py = best_of(fn, args.repeat)
        t_cy = best_of(cy_cases[name], args.repeat) if cy_cases else float("nan")
        print(f"{name:34s} {t_cy:13.4f} {t_py:11.4f} {t_py / t_cy:7.1f}x")
    for name, code in E2E.items():
        t_cy = e2e(code, pure=False) if _kernels else float("nan")
        t_py = e2e(code, pure=True)
        print(f"{name:34s} {t_cy:13.4f} {t_py:11.4f} {t_py / t_cy:7.1f}x")


if __name__ == "__main__":
    main()
