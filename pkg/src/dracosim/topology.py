"""Node deployment, disk connectivity and analytic neighbourhood estimates."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .core import FieldGeometry, NodeId, Point


@dataclass(frozen=True)
class NodeLayout:
    """Node positions keyed by id (ids run 1..N)."""

    positions: dict[NodeId, Point]
    geometry: FieldGeometry

    def __post_init__(self) -> None:
        for nid, p in self.positions.items():
            if not self.geometry.contains(p):
                raise ValueError(f"node {nid} at {p} lies outside the field")

    @property
    def ids(self) -> list[NodeId]:
        return sorted(self.positions)

    def __len__(self) -> int:
        return len(self.positions)

    def as_array(self) -> np.ndarray:
        """(N, 2) array in id order."""
        return np.array([self.positions[i] for i in self.ids], dtype=float).reshape(-1, 2)

    def to_text(self) -> str:
        lines = [f"# field {self.geometry.to_line()}"]
        lines += [f"{i},{self.positions[i][0]!r},{self.positions[i][1]!r}" for i in self.ids]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, geometry: FieldGeometry | None = None) -> "NodeLayout":
        positions = {}
        for raw in text.splitlines():
            line = raw.strip()
            if line.startswith("# field "):
                geometry = geometry or FieldGeometry.from_line(line[len("# field "):])
                continue
            if not line or line.startswith("#"):
                continue
            nid, x, y = line.split(",")
            positions[int(nid)] = (float(x), float(y))
        if geometry is None:
            raise ValueError("layout text carries no field line and no geometry was given")
        return cls(positions, geometry)


@dataclass(frozen=True)
class AdjacencyMap:
    radius_alpha: float
    neighbors: dict[NodeId, frozenset[NodeId]]

    def degree(self, node: NodeId) -> int:
        return len(self.neighbors[node])

    def mean_degree(self) -> float:
        if not self.neighbors:
            return 0.0
        return sum(len(v) for v in self.neighbors.values()) / len(self.neighbors)

    def sorted_neighbors(self, node: NodeId) -> list[NodeId]:
        return sorted(self.neighbors[node])

    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        """Compressed rows over ids 1..N: ``offsets`` has N+2 entries (row 0 empty)."""
        n = max(self.neighbors, default=0)
        offsets = np.zeros(n + 2, dtype=np.int64)
        cols: list[int] = []
        for i in range(1, n + 1):
            row = sorted(self.neighbors.get(i, ()))
            cols.extend(row)
            offsets[i + 1] = offsets[i] + len(row)
        return offsets, np.asarray(cols, dtype=np.int64)


def deploy_uniform(n: int, geometry: FieldGeometry, rng: np.random.Generator) -> NodeLayout:
    if n < 1:
        raise ValueError("n must be >= 1")
    xs = rng.uniform(geometry.c1[0], geometry.c2[0], size=n)
    ys = rng.uniform(geometry.c1[1], geometry.c2[1], size=n)
    positions = {i + 1: (float(xs[i]), float(ys[i])) for i in range(n)}
    return NodeLayout(positions, geometry)


def build_adjacency(layout: NodeLayout, alpha: float) -> AdjacencyMap:
    """Closed-disk connectivity: i and j are linked iff their distance is <= alpha."""
    if alpha <= 0:
        raise ValueError("alpha must be > 0")
    ids = layout.ids
    pts = layout.as_array()
    diff = pts[:, None, :] - pts[None, :, :]
    d = np.sqrt((diff**2).sum(axis=-1))
    linked = d <= alpha
    np.fill_diagonal(linked, False)
    neighbors = {
        ids[a]: frozenset(ids[b] for b in np.flatnonzero(linked[a])) for a in range(len(ids))
    }
    return AdjacencyMap(float(alpha), neighbors)


def expected_neighbors_per_node(alpha: float, n: int, area: float) -> float:
    """Mean degree of a node whose disk lies fully inside the field (can go negative)."""
    return math.pi * alpha**2 * n / area - 1


def expected_nodes_in_sink_range(cr: float, n: int, area: float) -> float:
    return math.pi * cr**2 * n / area


def nodes_within(layout: NodeLayout, center: Point, radius: float,
                 candidates: Iterable[NodeId] | None = None) -> list[NodeId]:
    ids = layout.ids if candidates is None else sorted(candidates)
    cx, cy = center
    out = []
    for i in ids:
        x, y = layout.positions[i]
        if math.hypot(x - cx, y - cy) <= radius:
            out.append(i)
    return out
