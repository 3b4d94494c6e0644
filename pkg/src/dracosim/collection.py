"""Mobile-sink data collection: site generation and the three arrival policies
(DRACO, SA-RW, RW)."""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from .config import ConfigError
from .core import DataItemId, FieldGeometry, NodeId, NodeState, Point, SinkState, distance


class SinkStrategyKind(enum.Enum):
    DRACO = "draco"
    SA_RW = "sa_rw"
    RW = "rw"


@dataclass(frozen=True)
class SnapshotDigest:
    ids: frozenset[DataItemId]


@dataclass(frozen=True)
class TraceEntry:
    site: Point
    selected_node: Optional[NodeId]
    new_items: int
    cumulative_unique: int


@dataclass
class CollectionTrace:
    entries: list[TraceEntry] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def productive(self) -> list[TraceEntry]:
        return [e for e in self.entries if e.selected_node is not None]

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["site_x", "site_y", "selected_node", "new_items", "cumulative_unique"])
        for e in self.entries:
            w.writerow([repr(e.site[0]), repr(e.site[1]),
                        "" if e.selected_node is None else e.selected_node,
                        e.new_items, e.cumulative_unique])
        return out.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "CollectionTrace":
        rows = list(csv.DictReader(io.StringIO(text)))
        return cls([
            TraceEntry((float(r["site_x"]), float(r["site_y"])),
                       int(r["selected_node"]) if r["selected_node"] else None,
                       int(r["new_items"]), int(r["cumulative_unique"]))
            for r in rows
        ])


def generate_site(rng: np.random.Generator, geometry: FieldGeometry, current_pos: Optional[Point],
                  cr: float, pvs: list[Point], max_rejections: int = 1_000_000) -> Point:
    """Uniform site in the field, redrawn while it is within ``cr`` of the
    current position or equal to a previously visited site."""
    if not cr < min(geometry.width, geometry.height) / 2:
        raise ConfigError("collection.cr", "must be smaller than half the shorter field side")
    (x0, y0), (x1, y1) = geometry.c1, geometry.c2
    visited = set(pvs)
    for _ in range(max_rejections):
        u, v = rng.random(2)
        site = (x0 + u * (x1 - x0), y0 + v * (y1 - y0))
        if current_pos is not None and distance(site, current_pos) <= cr:
            continue
        if site in visited:
            continue
        return site
    raise ConfigError("collection.site_rejection_limit", f"no acceptable site after {max_rejections} draws")


class SinkWalker:
    """Drives one sink through sites; ``step`` handles a single site.

    Every node's reply (items it holds that the sink lacks) is kept as a
    running count, updated through an item -> holders index as items are
    collected, so a site costs O(nodes in range).
    """

    def __init__(self, strategy: SinkStrategyKind, sink: SinkState, nodes: Mapping[NodeId, NodeState],
                 geometry: FieldGeometry, rng: np.random.Generator, max_rejections: int = 1_000_000):
        self.strategy = strategy
        self.sink = sink
        self.nodes = nodes
        self.geometry = geometry
        self.rng = rng
        self.max_rejections = max_rejections
        self.trace = CollectionTrace()
        # per site: {node: reply} for DRACO, {node: distance} for the walks
        self.replies: list[dict[NodeId, float]] = []
        self._order = sorted(nodes)
        self._holders: dict[DataItemId, list[NodeId]] = {}
        for i in self._order:
            for d in nodes[i].buffer:
                self._holders.setdefault(d, []).append(i)
        self._unseen = {i: sum(1 for d in nodes[i].buffer if d not in sink.collected) for i in self._order}

    @property
    def done(self) -> bool:
        if self.sink.sites_visited >= self.sink.max_sites:
            return True
        if self.strategy is SinkStrategyKind.RW:
            return False
        exhausted = self.strategy is SinkStrategyKind.DRACO
        return all(
            not n.alive or i in self.sink.visited_nodes or (exhausted and self._unseen[i] == 0)
            for i, n in self.nodes.items()
        )

    def unseen(self, node: NodeId) -> int:
        return self._unseen[node]

    def in_range(self, site: Point) -> list[NodeId]:
        cr = self.sink.cr
        return [i for i in self._order
                if self.nodes[i].alive and distance(self.nodes[i].position, site) <= cr]

    def step(self) -> TraceEntry:
        site = generate_site(self.rng, self.geometry, self.sink.position, self.sink.cr,
                             self.sink.visited_sites, self.max_rejections)
        return ARRIVALS[self.strategy](self, site)

    def _finish(self, site: Point, node: Optional[NodeId]) -> TraceEntry:
        got = 0
        if node is not None:
            # the running count says when a rescan would find nothing
            new = [d for d in self.nodes[node].buffer if d not in self.sink.collected] if self._unseen[node] else []
            for d in new:
                for h in self._holders[d]:
                    self._unseen[h] -= 1
            self.sink.collected.update(new)
            self.sink.visited_nodes.add(node)
            got = len(new)
        entry = TraceEntry(site, node, got, len(self.sink.collected))
        self.sink.position = site
        self.sink.visited_sites.append(site)
        self.trace.entries.append(entry)
        return entry


def sink_arrive_draco(walker: SinkWalker, site: Point) -> TraceEntry:
    """Advertise the collected-set snapshot; pick the in-range unvisited node
    with the most items the sink lacks (ties to the lowest id)."""
    sink = walker.sink
    candidates = [i for i in walker.in_range(site) if i not in sink.visited_nodes]
    replies = {i: walker.unseen(i) for i in candidates}
    walker.replies.append(replies)
    best = None
    for i in candidates:
        if replies[i] > 0 and (best is None or replies[i] > replies[best]):
            best = i
    return walker._finish(site, best)


def _nearest(walker: SinkWalker, site: Point, avoid_visited: bool) -> TraceEntry:
    candidates = walker.in_range(site)
    if avoid_visited:
        candidates = [i for i in candidates if i not in walker.sink.visited_nodes]
    dists = {i: distance(walker.nodes[i].position, site) for i in candidates}
    walker.replies.append(dists)
    nearest = min(candidates, key=lambda i: (dists[i], i)) if candidates else None
    return walker._finish(site, nearest)


def sink_arrive_sa_rw(walker: SinkWalker, site: Point) -> TraceEntry:
    return _nearest(walker, site, avoid_visited=True)


def sink_arrive_rw(walker: SinkWalker, site: Point) -> TraceEntry:
    return _nearest(walker, site, avoid_visited=False)


ARRIVALS = {
    SinkStrategyKind.DRACO: sink_arrive_draco,
    SinkStrategyKind.SA_RW: sink_arrive_sa_rw,
    SinkStrategyKind.RW: sink_arrive_rw,
}


def run_collection(walker: SinkWalker) -> CollectionTrace:
    while not walker.done:
        walker.step()
    return walker.trace


def visits_to_reach(trace: CollectionTrace, total_unique: int, percent: float) -> Optional[int]:
    """Productive visits needed before ``percent`` of all items are collected."""
    if total_unique <= 0:
        return 0
    visits = 0
    for e in trace.entries:
        if e.selected_node is None:
            continue
        visits += 1
        if 100.0 * e.cumulative_unique / total_unique >= percent:
            return visits
    return None
