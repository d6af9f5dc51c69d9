#!/usr/bin/env python3
"""Compare the compiled propagation engine against the pure-Python fallback.

Times the branch-and-bound search with each backend on a few
propagation-heavy instances (LP bounding disabled so the engines do the
work), plus a raw assign/backtrack micro-benchmark on the engines alone.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import os
import random
import statistics
import time

os.environ.setdefault("RAILDESIGN_NO_LP", "1")  # keep the engines on the hot path

from raildesign import _core_py, milp, reduction, solver_bb
from raildesign.model import (Arc, HeadwayTable, Instance, Network, Node,
                              TrainRequest)

try:
    from raildesign import _core
except ImportError:
    _core = None


def line(n_trains, horizon, headway):
    net = Network(nodes=(Node("A"), Node("B")),
                  arcs=(Arc("A", "B", 1, 2, 2, 3),),
                  headways=HeadwayTable(default=headway))
    trains = tuple(TrainRequest(f"T{i:02d}", "A", "B", 0, horizon)
                   for i in range(n_trains))
    return Instance(network=net, horizon=horizon, trains=trains,
                    capacity_window=1, allow_dwell=False)


def instances():
    yield "line-4x6", line(4, 6, 2)
    yield "line-6x8", line(6, 8, 2)
    x3c = reduction.gen_random_x3c(2, 6, seed=7)
    yield "cover-q2", reduction.x3c_to_instance(x3c)[0]


def time_solver(system, engine_cls, repeat):
    times = []
    result = None
    for _ in range(repeat):
        solver_bb.PropEngine = engine_cls
        t0 = time.perf_counter()
        result = solver_bb.solve(system)
        times.append(time.perf_counter() - t0)
    return min(times), result


def micro_benchmark(engine_cls, repeat):
    """Raw assign/backtrack churn on one fixed random row system."""
    rng = random.Random(0)
    nvars = 40
    cols = [rng.sample(range(nvars), 4) for _ in range(60)]
    coefs = [[rng.choice([-2, -1, 1, 2]) for _ in row] for row in cols]
    rhs = [rng.randint(0, 3) for _ in cols]
    times = []
    for _ in range(repeat):
        e = engine_cls(nvars, cols, coefs, rhs)
        e.propagate_root()
        t0 = time.perf_counter()
        for i in range(20000):
            m = e.mark()
            e.assign(i % nvars, i & 1)
            e.backtrack(m)
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    if _core is None:
        print("compiled extension not built; only the pure backend is timed")
    backends = [("python", _core_py.PropEngine)]
    if _core is not None:
        backends.insert(0, ("cython", _core.PropEngine))

    print(f"{'instance':<12} {'vars':>5} {'rows':>5} "
          + " ".join(f"{name + ' (s)':>12}" for name, _ in backends)
          + ("  speedup" if len(backends) == 2 else ""))
    original = solver_bb.PropEngine
    try:
        for label, inst in instances():
            system = milp.build(inst)
            row = [f"{label:<12} {len(system.variables):>5} {len(system.rows):>5}"]
            secs = []
            for _, cls in backends:
                t, result = time_solver(system, cls, args.repeat)
                secs.append(t)
                row.append(f"{t:>12.4f}")
            if len(secs) == 2:
                row.append(f"  {secs[1] / secs[0]:>6.1f}x")
            print(" ".join(row))
    finally:
        solver_bb.PropEngine = original

    micro = [micro_benchmark(cls, args.repeat) for _, cls in backends]
    row = [f"{'micro-churn':<12} {'-':>5} {'-':>5}"]
    row += [f"{t:>12.4f}" for t in micro]
    if len(micro) == 2:
        row.append(f"  {micro[1] / micro[0]:>6.1f}x")
    print(" ".join(row))


if __name__ == "__main__":
    main()
