#!/usr/bin/env python3
"""Benchmark the compiled kernel extension against the NumPy fallback.

Run after installing the package:

    python benchmarks/bench_kernels.py

Forcing the fallback in a separate process keeps the comparison honest;
this script spawns itself with LFCDE_DISABLE_EXT=1 for the NumPy column.
"""

import json
import os
import subprocess
import sys
import time

import numpy as np

CASES = [
    ("conv_prefix  B'=500 k<=250", "conv", dict(m=500, kmax=250, nh=9)),
    ("conv_prefix  B'=200 k<=600", "conv", dict(m=200, kmax=600, nh=4)),
    ("eval_prefix  B'=2000 k<=1000", "eval", dict(m=2000, kmax=1000, nh=9)),
    ("kde_loo      n=5000 nh=13", "loo", dict(n=5000, nh=13)),
    ("conv_total   n=20000", "total", dict(n=20000)),
]


def run_case(kind, params, repeats=3):
    from lfcde import kernels

    rng = np.random.default_rng(0)
    if kind == "conv":
        nbr = rng.normal(size=(params["m"], params["kmax"]))
        ks = np.unique(np.round(np.geomspace(2, params["kmax"], 10)).astype(int))
        hs = np.geomspace(0.02, 0.5, params["nh"])
        fn = lambda: kernels.conv_prefix(nbr, ks, hs)
    elif kind == "eval":
        nbr = rng.normal(size=(params["m"], params["kmax"]))
        t = rng.normal(size=params["m"])
        ks = np.unique(np.round(np.geomspace(2, params["kmax"], 10)).astype(int))
        hs = np.geomspace(0.02, 0.5, params["nh"])
        fn = lambda: kernels.eval_prefix(nbr, t, ks, hs)
    elif kind == "loo":
        theta = rng.normal(size=params["n"])
        hs = np.geomspace(0.01, 1.0, params["nh"])
        fn = lambda: kernels.kde_loo_loglik(theta, hs)
    else:
        theta = rng.normal(size=params["n"])
        fn = lambda: kernels.conv_total(theta, 0.1)

    fn()  # warm up
    return min(_timed(fn) for _ in range(repeats))


def _timed(fn):
    t0 = time.perf_counter()
    fn()
    return time.perf_counter() - t0


def main():
    if len(sys.argv) > 1 and sys.argv[1] == "--one-backend":
        from lfcde import kernels
        results = {"backend": kernels.backend()}
        for label, kind, params in CASES:
            results[label] = run_case(kind, params)
        print(json.dumps(results))
        return

    rows = {}
    for env_extra in ({}, {"LFCDE_DISABLE_EXT": "1"}):
        env = dict(os.environ, **env_extra)
        out = subprocess.run([sys.executable, __file__, "--one-backend"],
                             env=env, capture_output=True, text=True, check=True)
        data = json.loads(out.stdout.strip().splitlines()[-1])
        rows[data.pop("backend")] = data

    if "compiled" not in rows:
        print("compiled extension unavailable; numpy timings only")
        for label, secs in rows["numpy"].items():
            print(f"{label:32s} {secs * 1e3:9.1f} ms")
        return

    print(f"{'case':32s} {'compiled':>12s} {'numpy':>12s} {'speedup':>9s}")
    for label, _, _ in CASES:
        c = rows["compiled"][label]
        n = rows["numpy"][label]
        print(f"{label:32s} {c * 1e3:10.1f} ms {n * 1e3:10.1f} ms {n / c:8.1f}x")


if __name__ == "__main__":
    main()
