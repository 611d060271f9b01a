"""Compare the compiled and pure-Python kernel backends.

Times BEV pooling (naive scatter-add vs interval reduction on each backend),
the exact distance transform and the grid BFS. Every row also checks that
the backends agree.

    python benchmarks/bench_pooling.py --n 100000 --channels 8
"""

import argparse
import time

import numpy as np

from dualbev import _kernels
from dualbev.geometry import BevGridSpec
from dualbev.pooling import pool_interval, pool_naive, random_cloud
from dualbev.simulator import gen_world


def best_of(fn, repeats):
    best, out = None, None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        dt = time.perf_counter() - t0
        best = dt if best is None else min(best, dt)
    return best, out


def same(a, b):
    if isinstance(a, tuple):
        return all(np.array_equal(np.asarray(x), np.asarray(y)) for x, y in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b))


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--n", type=int, default=100_000)
    parser.add_argument("--channels", type=int, default=8)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--world", type=int, default=200, help="side of the square world for EDT/BFS")
    args = parser.parse_args(argv)

    backends = sorted(_kernels.BACKENDS)
    print(f"backends available: {', '.join(backends)} (default {_kernels.BACKEND})")
    grid = BevGridSpec()
    cloud = random_cloud(args.n, args.channels, args.seed, grid)

    t_naive, ref = best_of(lambda: pool_naive(cloud, grid), args.repeats)
    print(f"{'kernel':<22}{'backend':<10}{'time_ms':>10}{'vs_ref':>9}  match")
    print(f"{'pool naive':<22}{'numpy':<10}{1e3 * t_naive:>10.2f}{1.0:>9.2f}  ref")
    for name in backends:
        t, out = best_of(lambda: pool_interval(cloud, grid, backend=name), args.repeats)
        match = np.array_equal(out.data, ref.data)
        print(f"{'pool interval':<22}{name:<10}{1e3 * t:>10.2f}{t_naive / t:>9.2f}  {match}")

    world = gen_world("scatter", args.seed, (args.world, args.world))
    mask = np.ascontiguousarray(world.occupied, dtype=np.uint8)
    free = np.ascontiguousarray(world.free, dtype=np.uint8)
    r0, c0 = np.argwhere(world.free)[0]
    for label, fn in (
        ("edt", lambda k: k.edt_sq(mask)),
        ("bfs", lambda k: k.grid_bfs(free, int(r0), int(c0))),
    ):
        results, times = {}, {}
        for name in backends:
            times[name], results[name] = best_of(lambda: fn(_kernels.BACKENDS[name]), args.repeats)
        base = times["python"]
        for name in backends:
            match = same(results[name], results["python"])
            print(f"{label + f' {args.world}x{args.world}':<22}{name:<10}{1e3 * times[name]:>10.2f}{base / times[name]:>9.2f}  {match}")


if __name__ == "__main__":
    main()
