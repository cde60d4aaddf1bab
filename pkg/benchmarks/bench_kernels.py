#!/usr/bin/env python3
"""Benchmark the compiled kernels against the numpy fallback.

Runs each kernel on identical inputs through both backends, reports
throughput in ns per path-step, and checks that the two implementations
agree (endpoints bitwise, exp-dependent quantities to 1e-12 relative).

Usage:
    python benchmarks/bench_kernels.py [--paths 2048] [--steps 4096] [--reps 3]
"""

import argparse
import importlib
import sys
import time

import numpy as np

from bougerol import _kernels_py
from bougerol.rng import RngStream

try:
    from bougerol import _kernels
except ImportError:
    _kernels = None


def _time(fn, reps):
    best = float("inf")
    for _ in range(reps):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _report(name, n_ops, t_py, t_cy):
    line = f"{name:<16s} numpy {t_py / n_ops * 1e9:7.2f} ns/step"
    if t_cy is not None:
        line += f"   cython {t_cy / n_ops * 1e9:7.2f} ns/step   speedup {t_py / t_cy:5.2f}x"
    print(line)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--paths", type=int, default=2048)
    ap.add_argument("--steps", type=int, default=4096)
    ap.add_argument("--reps", type=int, default=3)
    args = ap.parse_args(argv)

    if _kernels is None:
        print("compiled extension not available; benchmarking fallback only")

    gen = RngStream(123).generator()
    step = 1.0 / args.steps
    dw = gen.standard_normal((args.paths, args.steps)) * np.sqrt(step)
    db = gen.standard_normal((args.paths, args.steps)) * np.sqrt(step)
    n_ops = dw.size

    print(f"paths={args.paths} steps={args.steps} (best of {args.reps})")

    t_py, out_py = _time(lambda: _kernels_py.path_stats(dw, step), args.reps)
    t_cy = out_cy = None
    if _kernels is not None:
        t_cy, out_cy = _time(lambda: _kernels.path_stats(dw, step), args.reps)
        assert np.array_equal(out_py[0], out_cy[0]), "endpoints must match bitwise"
        np.testing.assert_allclose(out_py[1], out_cy[1], rtol=1e-12)
        np.testing.assert_allclose(out_py[2], out_cy[2], rtol=0, atol=0)
    _report("path_stats", n_ops, t_py, t_cy)

    t_py, out_py = _time(lambda: _kernels_py.em_endpoints(dw, step, 0.75), args.reps)
    t_cy = None
    if _kernels is not None:
        t_cy, out_cy = _time(lambda: _kernels.em_endpoints(dw, step, 0.75), args.reps)
        np.testing.assert_allclose(out_py, out_cy, rtol=1e-12)
    _report("em_endpoints", n_ops, t_py, t_cy)

    t_py, out_py = _time(lambda: _kernels_py.explicit_stats(db, dw, step, 0.5), args.reps)
    t_cy = None
    if _kernels is not None:
        t_cy, out_cy = _time(lambda: _kernels.explicit_stats(db, dw, step, 0.5), args.reps)
        for a, b in zip(out_py, out_cy):
            np.testing.assert_allclose(a, b, rtol=1e-11, atol=1e-13)
    _report("explicit_stats", n_ops, t_py, t_cy)

    if _kernels is not None:
        print("backend agreement checks passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
