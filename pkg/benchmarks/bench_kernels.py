"""Benchmark the compiled trajectory kernels against the numpy fallback.

Run:  python3 benchmarks/bench_kernels.py [--n-traj 2000] [--n-steps 3000]

Both backends consume identical counter-based random streams, so besides
timing, the script checks that the results agree.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from qsinf._kernels import _pure

try:
    from qsinf._kernels import _core
except ImportError:
    _core = None


def _decay():
    h = np.zeros((2, 2), dtype=complex)
    a = np.zeros((2, 2), dtype=complex)
    a[0, 1] = 1.0
    return h, [a]


def _cascade():
    h = np.zeros((3, 3), dtype=complex)
    a1 = np.zeros((3, 3), dtype=complex)
    a1[1, 2] = 1.0
    a2 = np.zeros((3, 3), dtype=complex)
    a2[0, 1] = 1.0
    return h, [a1, a2]


def timed(fn, *args, repeat=3):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n-traj", type=int, default=2000)
    ap.add_argument("--n-steps", type=int, default=3000)
    ap.add_argument("--dt", type=float, default=1e-3)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    if _core is None:
        print("compiled backend unavailable; build with `pip install -e .`")
        return

    cases = []
    h, a_ops = _decay()
    psi = np.array([0, 1], dtype=complex)
    cases.append(("jump 2-level", "jump_ensemble", (h, a_ops, psi, args.dt, args.n_steps, args.n_traj, np.uint64(args.seed), 30)))
    cases.append(("diffusion 2-level", "diffusion_ensemble", (h, a_ops[0], psi, args.dt, args.n_steps, args.n_traj, np.uint64(args.seed), 30)))
    cases.append(("first jumps 2-level", "first_jump_times", (h, a_ops, psi, args.dt, 25000, 10000, np.uint64(args.seed))))
    h3, a3 = _cascade()
    psi3 = np.array([0, 0, 1], dtype=complex)
    cases.append(("jump 3-level cascade", "jump_ensemble", (h3, a3, psi3, args.dt, args.n_steps, args.n_traj, np.uint64(args.seed), 30)))

    print(f"{'case':26s}{'pure (s)':>12s}{'compiled (s)':>14s}{'speedup':>10s}{'agree':>8s}")
    for label, fn_name, fn_args in cases:
        t_pure, out_pure = timed(getattr(_pure, fn_name), *fn_args)
        t_core, out_core = timed(getattr(_core, fn_name), *fn_args)
        if isinstance(out_pure, tuple):
            agree = all(
                np.allclose(p, c, atol=1e-10, rtol=0, equal_nan=True)
                for p, c in zip(out_pure, out_core)
            )
        else:
            agree = np.allclose(out_pure, out_core, atol=1e-10, rtol=0, equal_nan=True)
        print(f"{label:26s}{t_pure:12.3f}{t_core:14.3f}{t_pure / t_core:10.1f}{'yes' if agree else 'NO':>8s}")


if __name__ == "__main__":
    main()
