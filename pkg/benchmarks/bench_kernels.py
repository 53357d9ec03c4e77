"""Compare the compiled and pure-Python kernels on STN closure and the relaxed fixpoint.

Usage: python benchmarks/bench_kernels.py [--repeat N] [--points N]
"""

from __future__ import annotations

import argparse
import random
import time

from tempo_rl import kernels
from tempo_rl.bench import gen_kitting, gen_majsp
from tempo_rl.heuristic import hff
from tempo_rl.search import initial_state, successors
from tempo_rl.stn import Stn


def stn_workload(points: int, seed: int) -> None:
    rng = random.Random(seed)
    stn = Stn()
    ids = [stn.add_time_point() for _ in range(points)]
    for k, t in enumerate(ids):
        stn.add_bounds(t, 0, 0, 1000)
        if k:
            stn.add_bounds(t, ids[k - 1], rng.randint(0, 3), rng.randint(4, 20))


def heuristic_states(depth: int = 6):
    out = []
    for inst in (gen_kitting(2, 3, 3, 0), gen_majsp(2, 2, 1, 0)):
        frontier = [initial_state(inst)]
        for _ in range(depth):
            nxt = [c for s in frontier for _, c in successors(s, inst)]
            frontier = nxt[:40] or frontier
            out.extend((s, inst) for s in frontier)
    return out


def timed(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--points", type=int, default=60)
    args = parser.parse_args()
    states = heuristic_states()
    backends = ["python"] + (["cython"] if kernels.compiled is not None else [])
    print(f"{'backend':8s} {'stn_close (s)':>14s} {'hff x' + str(len(states)) + ' (s)':>16s}")
    results = {}
    for name in backends:
        kernels.use(name)
        t_stn = timed(lambda: [stn_workload(args.points, s) for s in range(5)], args.repeat)
        t_h = timed(lambda: [hff(s, inst) for s, inst in states], args.repeat)
        results[name] = (t_stn, t_h)
        print(f"{name:8s} {t_stn:14.4f} {t_h:16.4f}")
    if len(results) == 2:
        (ps, ph), (cs, ch) = results["python"], results["cython"]
        print(f"speedup  {ps / cs:13.1f}x {ph / ch:15.1f}x")
    else:
        print("compiled kernels not built; only the fallback was timed")


if __name__ == "__main__":
    main()
