#!/usr/bin/env python3
"""Time the numba hot path against the pure-numpy fallback.

Runs the integrator, the local-polynomial smoother, the sensitivity
solver and a full estimation pipeline under both backends in one
process (the fallback is forced per-model by dropping its compiled
kernels).  The first numba call pays JIT compilation; a warmup pass is
timed separately so the steady-state numbers are comparable.

Usage: python3 benchmarks/bench_backends.py [--repeat N]
"""

import argparse
import dataclasses
import time

import numpy as np

from accelode._backend import NUMBA_ENABLED
from accelode.accel import fit
from accelode.models import catalog_get
from accelode.ode_core import ParameterVector, integrate
from accelode.sensitivity import solve_sensitivities
from accelode.smoothing import SmootherConfig

LV_ETA = ParameterVector([1.0, 0.5], [0.5] * 4)


def _dataset():
    rng = np.random.default_rng(42)
    times = np.linspace(0.0, 10.0, 51)
    model = catalog_get("lotka_volterra").model
    traj = integrate(model, LV_ETA, 10.0)
    from accelode.ode_core import Dataset
    return Dataset(times, traj(times) + 0.05 * rng.standard_normal((2, 51)))


def _bench(label, fn, repeat):
    fn()  # warmup (JIT compilation on the numba side)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    best = min(times)
    print(f"{label:<38s} {best * 1e3:9.2f} ms")
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    if not NUMBA_ENABLED:
        print("numba backend disabled (ACCELODE_NO_NUMBA set); "
              "only the numpy path is timed")

    fast = catalog_get("lotka_volterra").model
    slow = dataclasses.replace(fast, fast=None)
    data = _dataset()
    grid = np.linspace(0.0, 10.0, 201)
    scfg = SmootherConfig()

    pairs = []
    for tag, model in (("numba", fast), ("numpy", slow)):
        if tag == "numba" and not NUMBA_ENABLED:
            continue
        t_int = _bench(f"integrate lotka_volterra [{tag}]",
                       lambda m=model: integrate(m, LV_ETA, 10.0),
                       args.repeat)
        t_sens = _bench(f"sensitivities [{tag}]",
                        lambda m=model: solve_sensitivities(m, LV_ETA, 10.0),
                        args.repeat)
        t_fit = _bench(f"full accel fit n=51 [{tag}]",
                       lambda m=model: fit(m, data),
                       args.repeat)
        pairs.append((tag, t_int, t_sens, t_fit))

    if NUMBA_ENABLED:
        # the smoother backend switches globally, so time it through
        # the private kernels instead
        from accelode.smoothing import _fit_nb, _fit_py, EPANECHNIKOV
        t, y = data.times, data.values
        _bench("smoother kernel [numba]",
               lambda: _fit_nb(t, y, grid, 1.5, 1), args.repeat)
        _bench("smoother kernel [numpy]",
               lambda: _fit_py(t, y, grid, 1.5, 1, EPANECHNIKOV),
               args.repeat)

    if len(pairs) == 2:
        (_, a1, a2, a3), (_, b1, b2, b3) = pairs
        print(f"\nspeedup numba/numpy: integrate {b1 / a1:.1f}x, "
              f"sensitivities {b2 / a2:.1f}x, fit {b3 / a3:.1f}x")


if __name__ == "__main__":
    main()
