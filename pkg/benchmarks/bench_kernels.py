#!/usr/bin/env python3
"""Wall-clock comparison of the numba kernels against the pure-numpy fallback.

The backend is fixed at import time by STIEFEL_FLOWS_NUMBA, so each backend
runs in its own subprocess. The first numba run also pays compilation (or
cache loading); it is reported separately from the timed repeats.

Usage:
    python benchmarks/bench_kernels.py [--T 1.0] [--h 1e-3] [--repeats 3]
"""

import argparse
import json
import os
import subprocess
import sys

SCENARIOS = ("free_euclid_n4", "magnetic_quad_a_n6", "pendulum1_n4", "kowalevski_n3", "zv_equiv_n3")

WORKER = r"""
import json, sys, time
import numpy as np
from stiefel_flows.integrate import integrate
from stiefel_flows.scenario import load_scenario, resolve_scenario_path

T, h, repeats = float(sys.argv[1]), float(sys.argv[2]), int(sys.argv[3])
out = {}
for name in sys.argv[4:]:
    sc = load_scenario(resolve_scenario_path(name)).with_integrator(T=T, h=h)
    flow, s0 = sc.flow(), sc.initial_state()
    t0 = time.perf_counter()
    traj = integrate(flow, s0, sc.integrator)
    first = time.perf_counter() - t0
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        integrate(flow, s0, sc.integrator)
        times.append(time.perf_counter() - t0)
    out[name] = {"first": first, "best": min(times), "final": traj.states[-1].tolist()}
print(json.dumps(out))
"""


def run_backend(flag, args):
    env = dict(os.environ, STIEFEL_FLOWS_NUMBA=flag)
    cmd = [sys.executable, "-c", WORKER, str(args.T), str(args.h), str(args.repeats), *SCENARIOS]
    res = subprocess.run(cmd, env=env, capture_output=True, text=True, check=True)
    return json.loads(res.stdout)


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--h", type=float, default=1e-3)
    p.add_argument("--repeats", type=int, default=3)
    args = p.parse_args()

    jit = run_backend("1", args)
    ref = run_backend("0", args)
    print(f"T={args.T}, h={args.h}, best of {args.repeats}")
    print(f"{'scenario':<22}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>10}{'first numba [s]':>17}{'max |diff|':>12}")
    for name in SCENARIOS:
        a, b = ref[name], jit[name]
        diff = max(abs(x - y) for ra, rb in zip(a["final"], b["final"]) for x, y in zip(ra, rb))
        print(f"{name:<22}{a['best']:>12.3f}{b['best']:>12.4f}{a['best'] / b['best']:>10.1f}"
              f"{b['first']:>17.2f}{diff:>12.1e}")


if __name__ == "__main__":
    main()
