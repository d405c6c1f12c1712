#!/usr/bin/env python3
"""Benchmark: compiled kernel vs the pure-numpy fallback.

Times the indicator-moment reduction (the hot inner loop of every
half-scale step) across dimensions and orders, plus an end-to-end
trajectory.  Run:

    python benchmarks/bench_kernels.py [--reps N]
"""

import argparse
import math
import time

import numpy as np

from blowuplab import _kernels, renorm, sphere
from blowuplab.quadratic import DeltaState


def time_block(n, order, coeffs, force_pure, reps):
    if n == 3:
        zsq, wts = np.ones((1, 1)), np.ones(1)
    elif n == 4:
        zsq, wts = sphere._adaptive_circle_prefix(coeffs[0], coeffs[1], order)
    else:
        zsq, wts = sphere._prefix_rule(n, order)
    glx, glw = sphere._gauss_legendre(order)
    theta_max = 2 * math.pi if n == 3 else math.pi
    args = (zsq, wts, coeffs, n, theta_max, glx, glw)
    _kernels.indicator_moment_block(*args, force_pure=force_pure)  # warm-up
    t0 = time.perf_counter()
    for _ in range(reps):
        _kernels.indicator_moment_block(*args, force_pure=force_pure)
    return (time.perf_counter() - t0) / reps, zsq.shape[0]


def bench_kernel(reps):
    print(f"{'config':<24}{'rows':>8}{'pure':>12}{'compiled':>12}{'speedup':>9}")
    for n, order, delta in [
        (3, 64, [2e-3]),
        (3, 256, [2e-3]),
        (4, 96, [5e-2, 0.0]),
        (4, 96, [5e-3, -3e-3]),
        (5, 48, [1e-2, -5e-3, 2e-3]),
        (6, 32, [1e-2, 0.0, 0.0, -1e-2]),
    ]:
        delta = np.asarray(delta)
        coeffs = np.concatenate([delta, [1.0 - delta.sum()]])
        t_pure, rows = time_block(n, order, coeffs, True, reps)
        label = f"n={n} order={order}"
        if not _kernels.HAVE_COMPILED:
            print(f"{label:<24}{rows:>8}{t_pure * 1e3:>10.2f}ms{'-':>12}{'-':>9}")
            continue
        t_comp, _ = time_block(n, order, coeffs, False, reps)
        print(
            f"{label:<24}{rows:>8}{t_pure * 1e3:>10.2f}ms{t_comp * 1e3:>10.2f}ms"
            f"{t_pure / t_comp:>8.1f}x"
        )


def bench_trajectory(steps=40, order=96):
    print(f"\ntrajectory: n=4, order={order}, {steps} steps, delta0 = 0.03 e1")
    backends = [("pure", True)]
    if _kernels.HAVE_COMPILED:
        backends.append(("compiled", False))
    saved = _kernels._impl
    for label, force_pure in backends:
        _kernels._impl = None if force_pure else saved
        try:
            cfg = renorm.MapConfig(n=4, order=order, C_gamma=0.0)
            state = DeltaState(n=4, tau=10.0, delta=np.array([0.03, 0.0]))
            t0 = time.perf_counter()
            renorm.iterate(state, cfg, steps)
            dt = time.perf_counter() - t0
        finally:
            _kernels._impl = saved
        print(f"  {label:<10}{dt:.2f}s total, {dt / steps * 1e3:.1f} ms/step")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--reps", type=int, default=30)
    args = parser.parse_args()
    print(f"active backend: {_kernels.backend_name()}\n")
    bench_kernel(args.reps)
    bench_trajectory()


if __name__ == "__main__":
    main()
