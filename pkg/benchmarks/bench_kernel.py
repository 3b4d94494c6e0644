"""Time the dissemination phase with the compiled kernel and the Python engine.

    python3 benchmarks/bench_kernel.py --nodes 50 100 200 --repeat 3
"""

import argparse
import time

from dracosim import SimConfig
from dracosim.kernel import BACKENDS, disseminate
from dracosim.runner import build_world


def bench(config: SimConfig, backend: str, repeat: int) -> float:
    best = float("inf")
    for seed in range(repeat):
        world = build_world(config, seed)
        t0 = time.perf_counter()
        disseminate(world, backend)
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--nodes", type=int, nargs="+", default=[50, 100, 200])
    p.add_argument("--strategy", default="draco", choices=("draco", "greedy", "random"))
    p.add_argument("--degree", type=int, default=5)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)

    print(f"{'N':>5} " + " ".join(f"{b:>10}" for b in BACKENDS) + ("    speedup" if len(BACKENDS) > 1 else ""))
    for n in args.nodes:
        cfg = SimConfig(n_nodes=n, replication_strategy=args.strategy, replication_degree=args.degree,
                        collection_strategy=None)
        times = [bench(cfg, b, args.repeat) for b in BACKENDS]
        line = f"{n:5d} " + " ".join(f"{t:9.3f}s" for t in times)
        if len(times) > 1:
            line += f"  {times[1] / times[0]:8.1f}x"
        print(line)


if __name__ == "__main__":
    main()
