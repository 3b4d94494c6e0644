"""One simulation run from a config and a seed.

Randomness is split into named streams, each seeded from the run seed plus
only the settings it depends on. Runs that differ only in strategy therefore
share topology, sensing intervals and failure victims (common random
numbers), and the sink walk is shared across collection strategies. Failure
plans for different fractions are nested, and in boundary mode the
dissemination phase does not depend on the fraction at all.
"""

from __future__ import annotations

import zlib

import numpy as np

from .config import SimConfig
from .engine import SimulationRecord, World
from .failure import FailureMode, plan_failures
from .kernel import disseminate_compiled, resolve
from .topology import build_adjacency, deploy_uniform


def stream(seed: int, tag: str, *parts) -> np.random.Generator:
    key = "|".join([tag, *(repr(p) for p in parts)]).encode()
    return np.random.default_rng(np.random.SeedSequence([int(seed), zlib.crc32(key)]))


def build_world(config: SimConfig, seed: int, trace: bool = False) -> World:
    n = config.n_nodes
    trng = stream(seed, "topology", n, config.width, config.height)
    layout = deploy_uniform(n, config.geometry, trng)
    intervals = trng.uniform(config.sense_min, config.sense_max, size=n)
    adjacency = build_adjacency(layout, config.alpha)
    mode = FailureMode(config.failure_mode)
    plan = plan_failures(
        n, config.failure_fraction, mode,
        stream(seed, "failures", n, mode.value),
        config.duration,
    )
    point = (n, config.replication_strategy, config.replication_degree)
    return World(
        config, layout, adjacency,
        {i: float(intervals[i - 1]) for i in layout.ids},
        plan,
        rng=stream(seed, "dynamics", *point),
        sink_rng=stream(seed, "sink", *point),
        trace=trace,
    )


def simulate(config: SimConfig, seed: int, backend: str | None = None, trace: bool = False) -> SimulationRecord:
    world = build_world(config, seed, trace=trace)
    if resolve(backend) == "compiled":
        world.adopt(disseminate_compiled(world))
        world.backend = "compiled"
    else:
        world.seed_events()
    return world.run_until_done()


def simulate_fractions(config: SimConfig, seed: int, fractions, collections,
                       backend: str | None = None) -> dict:
    """Records for every (failure fraction, collection strategy) pair at one
    replication setting, keyed by that pair.

    Each record equals ``simulate`` on the matching config. In boundary mode
    the dissemination phase is shared, since nothing before the boundary
    depends on the failure fraction or on the sink.
    """
    points = [(f, c) for f in fractions for c in collections]
    if FailureMode(config.failure_mode) is not FailureMode.AT_PHASE_BOUNDARY:
        return {
            (f, c): simulate(config.replace(failure_fraction=f, collection_strategy=c), seed, backend)
            for f, c in points
        }
    name = resolve(backend)
    base = build_world(config, seed)
    if name == "compiled":
        result = disseminate_compiled(base)
    else:
        base.seed_events()
        base.run_dissemination()
        result = base.dissemination_result()
    out = {}
    for f, c in points:
        world = build_world(config.replace(failure_fraction=f, collection_strategy=c), seed)
        world.adopt(result)
        world.backend = name
        out[(f, c)] = world.run_until_done()
    return out
