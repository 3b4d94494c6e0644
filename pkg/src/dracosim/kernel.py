"""Dissemination backends.

``compiled`` is the Cython kernel in ``_kernel``; ``python`` is the event
engine in ``engine``. Both yield the same ``DisseminationResult`` for the
same inputs. The compiled one is chosen when it imports.
"""

from __future__ import annotations

import math

import numpy as np

from .core import DataItemId, NeighborAttributes, ReplicaLedger
from .engine import DisseminationResult, World
from .failure import FailureMode

try:
    from . import _kernel
except ImportError:  # pragma: no cover - depends on the build
    _kernel = None

HAVE_COMPILED = _kernel is not None
BACKENDS = ("compiled", "python") if HAVE_COMPILED else ("python",)
DEFAULT_BACKEND = BACKENDS[0]


def resolve(backend: str | None) -> str:
    name = backend or DEFAULT_BACKEND
    if name == "compiled" and not HAVE_COMPILED:
        raise RuntimeError("compiled kernel is not available in this installation")
    if name not in ("compiled", "python"):
        raise ValueError(f"unknown backend {name!r}")
    return name


def _reverse_slots(offsets: np.ndarray, cols: np.ndarray) -> np.ndarray:
    rev = np.empty_like(cols)
    n = len(offsets) - 2
    slot = {}
    for i in range(1, n + 1):
        for p in range(offsets[i], offsets[i + 1]):
            slot[(i, int(cols[p]))] = p
    for i in range(1, n + 1):
        for p in range(offsets[i], offsets[i + 1]):
            rev[p] = slot[(int(cols[p]), i)]
    return rev


def disseminate_compiled(world: World) -> DisseminationResult:
    cfg = world.config
    n = len(world.layout)
    offsets, cols = world.adjacency.csr()
    intervals = np.zeros(n + 1)
    for i, node in world.nodes.items():
        intervals[i] = node.sense_interval
    fail = np.full(n + 1, math.inf)
    if world.plan.mode is FailureMode.DURING_DISSEMINATION:
        for v in world.plan.victims:
            fail[v] = world.plan.times[v]
    out = _kernel.disseminate(
        n, offsets, cols, _reverse_slots(offsets, cols), intervals, fail,
        int(world.strategy), cfg.replication_degree, cfg.buffer_capacity,
        cfg.advert_interval, cfg.stale_window, cfg.hop_delay, cfg.drop_probability,
        cfg.duration, world.rng, world.tracing,
    )
    ledger = ReplicaLedger.from_columns(out["items"], out["placements"], out["drops"], out["died_at"])
    owner, seq = ledger.owner, ledger.seq
    trace = None
    if out["trace"] is not None:
        trace = [(float(t), int(s), int(k), int(a)) for t, s, k, a in zip(*(c.tolist() for c in out["trace"]))]
    return DisseminationResult(
        ledger=ledger,
        buffers={i: [DataItemId(owner[k], seq[k]) for k in b] for i, b in out["buffers"].items()},
        n_att={i: [NeighborAttributes(*row) for row in rows] for i, rows in out["n_att"].items()},
        next_seq=out["next_seq"],
        alive=out["alive"],
        end_time=float(out["end_time"]),
        next_event_seq=int(out["next_event_seq"]),
        trace=trace,
    )


def disseminate_python(world: World) -> DisseminationResult:
    world.seed_events()
    world.run_dissemination()
    return world.dissemination_result()


def disseminate(world: World, backend: str | None = None) -> DisseminationResult:
    """Run the dissemination phase of a freshly seeded world with ``backend``.

    The Python backend advances ``world`` itself; the compiled one leaves it
    untouched, so call ``world.adopt`` on the result to continue into collection.
    """
    if resolve(backend) == "compiled":
        return disseminate_compiled(world)
    return disseminate_python(world)
