"""Domain types shared by every part of the simulator.

Each type has a canonical single-line text form (``to_line`` / ``from_line``):
comma separated fields in the documented order, with ordered collections
joined by ``;`` and floats written with ``repr`` so that a round trip is exact.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple

import numpy as np

NodeId = int
Point = tuple[float, float]


def _fmt(x: float) -> str:
    return repr(float(x))


def _ids(values: Iterable[int]) -> str:
    return ";".join(str(v) for v in values)


def _parse_ids(text: str) -> list[int]:
    return [int(v) for v in text.split(";")] if text else []


def _split(line: str, expected: int, kind: str) -> list[str]:
    parts = line.rstrip("\n").split(",")
    if len(parts) != expected:
        raise ValueError(f"{kind}: expected {expected} fields, got {len(parts)}: {line!r}")
    return parts


def distance(a: Point, b: Point) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


@dataclass(frozen=True)
class FieldGeometry:
    """Rectangular sensing field spanned by opposite corners ``c1`` < ``c2``.

    Line form: ``c1x,c1y,c2x,c2y``.
    """

    c1: Point
    c2: Point

    def __post_init__(self) -> None:
        if not (self.c1[0] < self.c2[0] and self.c1[1] < self.c2[1]):
            raise ValueError(f"corners must satisfy c1 < c2 component-wise: {self.c1}, {self.c2}")

    @classmethod
    def of_size(cls, width: float, height: float) -> "FieldGeometry":
        return cls((0.0, 0.0), (float(width), float(height)))

    @property
    def width(self) -> float:
        return self.c2[0] - self.c1[0]

    @property
    def height(self) -> float:
        return self.c2[1] - self.c1[1]

    def area(self) -> float:
        return self.width * self.height

    def contains(self, p: Point) -> bool:
        return self.c1[0] <= p[0] <= self.c2[0] and self.c1[1] <= p[1] <= self.c2[1]

    def diagonal(self) -> float:
        return math.hypot(self.width, self.height)

    def to_line(self) -> str:
        return ",".join(_fmt(v) for v in (*self.c1, *self.c2))

    @classmethod
    def from_line(cls, line: str) -> "FieldGeometry":
        a, b, c, d = (float(v) for v in _split(line, 4, "FieldGeometry"))
        return cls((a, b), (c, d))


def area(geometry: FieldGeometry) -> float:
    return geometry.area()


@dataclass(frozen=True, order=True)
class DataItemId:
    """Identity of a sensed datum. Line form: ``owner,seq``."""

    owner: NodeId
    seq: int

    def to_line(self) -> str:
        return f"{self.owner},{self.seq}"

    @classmethod
    def from_line(cls, line: str) -> "DataItemId":
        owner, seq = _split(line, 2, "DataItemId")
        return cls(int(owner), int(seq))


@dataclass(frozen=True)
class DataItem:
    """Line form: ``owner,seq,generated_at``."""

    id: DataItemId
    generated_at: float

    def to_line(self) -> str:
        return f"{self.id.to_line()},{_fmt(self.generated_at)}"

    @classmethod
    def from_line(cls, line: str) -> "DataItem":
        owner, seq, t = _split(line, 3, "DataItem")
        return cls(DataItemId(int(owner), int(seq)), float(t))


@dataclass
class DataMessage:
    """Replication envelope travelling with one item.

    ``pv`` and ``pr`` keep insertion order; ``cn`` is unordered and written
    sorted. Line form: ``owner,seq,generated_at,remaining_r,pr,pv,cn,hop_count``.
    """

    item: DataItem
    remaining_r: int
    pr: list[NodeId] = field(default_factory=list)
    pv: list[NodeId] = field(default_factory=list)
    cn: set[NodeId] = field(default_factory=set)
    hop_count: int = 0

    def to_line(self) -> str:
        return ",".join(
            [
                self.item.to_line(),
                str(self.remaining_r),
                _ids(self.pr),
                _ids(self.pv),
                _ids(sorted(self.cn)),
                str(self.hop_count),
            ]
        )

    @classmethod
    def from_line(cls, line: str) -> "DataMessage":
        owner, seq, t, r, pr, pv, cn, h = _split(line, 8, "DataMessage")
        item = DataItem(DataItemId(int(owner), int(seq)), float(t))
        return cls(item, int(r), _parse_ids(pr), _parse_ids(pv), set(_parse_ids(cn)), int(h))


@dataclass
class NeighborAttributes:
    """One row of a node's neighbor table. Line form: ``node,non,rm,last_heard``."""

    node: NodeId
    non: int
    rm: int
    last_heard: float

    def to_line(self) -> str:
        return f"{self.node},{self.non},{self.rm},{_fmt(self.last_heard)}"

    @classmethod
    def from_line(cls, line: str) -> "NeighborAttributes":
        node, non, rm, t = _split(line, 4, "NeighborAttributes")
        return cls(int(node), int(non), int(rm), float(t))


@dataclass
class NodeState:
    """Mutable per-node state during a run.

    The buffer is an insertion-ordered set (a dict with ``None`` values).
    Line form: ``id,x,y,capacity,sense_interval,next_seq,alive,buffer,n_att``
    where ``buffer`` is ``owner:seq`` pairs joined by ``;`` and ``n_att`` is
    ``node:non:rm:last_heard`` rows joined by ``;`` in node order.
    """

    id: NodeId
    position: Point
    buffer_capacity: int
    sense_interval: float
    buffer: dict[DataItemId, None] = field(default_factory=dict)
    n_att: dict[NodeId, NeighborAttributes] = field(default_factory=dict)
    next_seq: int = 0
    alive: bool = True

    @property
    def rm(self) -> int:
        return self.buffer_capacity - len(self.buffer)

    def store(self, item_id: DataItemId) -> None:
        if len(self.buffer) >= self.buffer_capacity:
            raise OverflowError(f"node {self.id} buffer is full")
        self.buffer[item_id] = None

    def to_line(self) -> str:
        buf = ";".join(f"{i.owner}:{i.seq}" for i in self.buffer)
        rows = ";".join(
            f"{a.node}:{a.non}:{a.rm}:{_fmt(a.last_heard)}"
            for _, a in sorted(self.n_att.items())
        )
        return ",".join(
            [
                str(self.id),
                _fmt(self.position[0]),
                _fmt(self.position[1]),
                str(self.buffer_capacity),
                _fmt(self.sense_interval),
                str(self.next_seq),
                "1" if self.alive else "0",
                buf,
                rows,
            ]
        )

    @classmethod
    def from_line(cls, line: str) -> "NodeState":
        nid, x, y, cap, interval, nxt, alive, buf, rows = _split(line, 9, "NodeState")
        buffer: dict[DataItemId, None] = {}
        if buf:
            for token in buf.split(";"):
                o, s = token.split(":")
                buffer[DataItemId(int(o), int(s))] = None
        n_att = {}
        if rows:
            for token in rows.split(";"):
                node, non, rm, t = token.split(":")
                n_att[int(node)] = NeighborAttributes(int(node), int(non), int(rm), float(t))
        return cls(
            id=int(nid),
            position=(float(x), float(y)),
            buffer_capacity=int(cap),
            sense_interval=float(interval),
            buffer=buffer,
            n_att=n_att,
            next_seq=int(nxt),
            alive=alive == "1",
        )


@dataclass
class SinkState:
    """Mobile collector.

    Line form: ``x,y,cr,max_sites,collected,visited_sites,visited_nodes`` with
    an empty position written as ``,`` (two empty fields), ``collected`` as
    sorted ``owner:seq`` tokens and ``visited_sites`` as ``x:y`` tokens.
    """

    cr: float
    max_sites: int
    position: Point | None = None
    collected: set[DataItemId] = field(default_factory=set)
    visited_sites: list[Point] = field(default_factory=list)
    visited_nodes: set[NodeId] = field(default_factory=set)

    @property
    def sites_visited(self) -> int:
        return len(self.visited_sites)

    def to_line(self) -> str:
        pos = ("", "") if self.position is None else (_fmt(self.position[0]), _fmt(self.position[1]))
        return ",".join(
            [
                *pos,
                _fmt(self.cr),
                str(self.max_sites),
                ";".join(f"{i.owner}:{i.seq}" for i in sorted(self.collected)),
                ";".join(f"{_fmt(x)}:{_fmt(y)}" for x, y in self.visited_sites),
                _ids(sorted(self.visited_nodes)),
            ]
        )

    @classmethod
    def from_line(cls, line: str) -> "SinkState":
        x, y, cr, m, col, sites, nodes = _split(line, 7, "SinkState")
        collected = set()
        if col:
            for token in col.split(";"):
                o, s = token.split(":")
                collected.add(DataItemId(int(o), int(s)))
        visited = []
        if sites:
            for token in sites.split(";"):
                sx, sy = token.split(":")
                visited.append((float(sx), float(sy)))
        return cls(
            cr=float(cr),
            max_sites=int(m),
            position=None if x == "" else (float(x), float(y)),
            collected=collected,
            visited_sites=visited,
            visited_nodes=set(_parse_ids(nodes)),
        )


class DropReason(enum.IntEnum):
    NO_CANDIDATE = 0
    BUFFER_FULL_TERMINAL = 1
    RECIPIENT_DEAD = 2
    LINK_LOSS = 3

    @property
    def label(self) -> str:
        return self.name.lower()


class Placement(NamedTuple):
    holder: NodeId
    replica_index: int
    placed_at: float
    hop_count: int


class Drop(NamedTuple):
    item: DataItemId
    node: NodeId
    reason: DropReason
    at: float


class ReplicaLedger:
    """Observer-side record of every item, copy placement and drop.

    Storage is columnar so that runs from the compiled kernel can be adopted
    without per-row conversion. Items are addressed by their generation
    index; ``DataItemId`` lookups go through ``index_of``.

    Line form, one record per line::

        I,owner,seq,generated_at
        P,owner,seq,holder,replica_index,placed_at,hop_count
        D,owner,seq,node,reason,at
        X,node,died_at
    """

    _COLUMNS = ("owner", "seq", "generated_at")
    _PCOLUMNS = ("p_item", "p_holder", "p_index", "p_time", "p_hops")
    _DCOLUMNS = ("d_item", "d_node", "d_reason", "d_time")

    def __init__(self) -> None:
        for name in self._COLUMNS + self._PCOLUMNS + self._DCOLUMNS:
            setattr(self, name, [])
        self.died_at: dict[NodeId, float] = {}
        self._index: dict[DataItemId, int] = {}
        self._copies: list[int] = []

    @classmethod
    def from_columns(cls, items, placements, drops, died_at=None) -> "ReplicaLedger":
        """Adopt column data: ``items`` = (owner, seq, generated_at), ``placements``
        = (item, holder, index, time, hops), ``drops`` = (item, node, reason, time)."""
        ledger = cls()
        for name, col in zip(cls._COLUMNS, items):
            setattr(ledger, name, [*np.asarray(col).tolist()])
        for name, col in zip(cls._PCOLUMNS, placements):
            setattr(ledger, name, [*np.asarray(col).tolist()])
        for name, col in zip(cls._DCOLUMNS, drops):
            setattr(ledger, name, [*np.asarray(col).tolist()])
        ledger._index = {
            DataItemId(o, s): k for k, (o, s) in enumerate(zip(ledger.owner, ledger.seq))
        }
        copies = np.bincount(np.asarray(ledger.p_item, dtype=np.int64), minlength=len(ledger.owner))
        ledger._copies = copies.tolist()
        ledger.died_at = dict(died_at or {})
        return ledger

    def copy(self) -> "ReplicaLedger":
        other = ReplicaLedger()
        for name in (*self._COLUMNS, *self._PCOLUMNS, *self._DCOLUMNS):
            setattr(other, name, list(getattr(self, name)))
        other._index = dict(self._index)
        other._copies = list(self._copies)
        other.died_at = dict(self.died_at)
        return other

    def record_item(self, item: DataItem) -> int:
        k = len(self.owner)
        self._index[item.id] = k
        self.owner.append(item.id.owner)
        self.seq.append(item.id.seq)
        self.generated_at.append(item.generated_at)
        self._copies.append(0)
        return k

    def record_placement(self, item: DataItemId, holder: NodeId, placed_at: float, hop_count: int) -> int:
        k = self._index[item]
        index = self._copies[k] + 1
        self._copies[k] = index
        self.p_item.append(k)
        self.p_holder.append(holder)
        self.p_index.append(index)
        self.p_time.append(placed_at)
        self.p_hops.append(hop_count)
        return index

    def record_drop(self, item: DataItemId, node: NodeId, reason: DropReason, at: float) -> None:
        self.d_item.append(self._index[item])
        self.d_node.append(node)
        self.d_reason.append(int(reason))
        self.d_time.append(at)

    def mark_dead(self, node: NodeId, at: float) -> None:
        self.died_at.setdefault(node, at)

    @property
    def total_items(self) -> int:
        return len(self.owner)

    @property
    def total_placements(self) -> int:
        return len(self.p_item)

    def index_of(self, item: DataItemId) -> int:
        return self._index[item]

    def item_id(self, k: int) -> DataItemId:
        return DataItemId(self.owner[k], self.seq[k])

    def items(self) -> Iterator[DataItem]:
        for o, s, t in zip(self.owner, self.seq, self.generated_at):
            yield DataItem(DataItemId(o, s), t)

    def copies_per_item(self) -> np.ndarray:
        return np.asarray(self._copies, dtype=np.int64)

    def placements(self, item: DataItemId) -> list[Placement]:
        k = self._index[item]
        return [
            Placement(h, i, t, hops)
            for it, h, i, t, hops in zip(self.p_item, self.p_holder, self.p_index, self.p_time, self.p_hops)
            if it == k
        ]

    def holders(self, item: DataItemId) -> list[NodeId]:
        return [p.holder for p in self.placements(item)]

    def drops(self) -> list[Drop]:
        return [
            Drop(self.item_id(k), n, DropReason(r), t)
            for k, n, r, t in zip(self.d_item, self.d_node, self.d_reason, self.d_time)
        ]

    def columns(self) -> dict[str, np.ndarray]:
        return {
            name: np.asarray(getattr(self, name))
            for name in self._COLUMNS + self._PCOLUMNS + self._DCOLUMNS
        }

    def to_lines(self) -> list[str]:
        lines = [f"I,{o},{s},{_fmt(t)}" for o, s, t in zip(self.owner, self.seq, self.generated_at)]
        for k, h, i, t, hops in zip(self.p_item, self.p_holder, self.p_index, self.p_time, self.p_hops):
            lines.append(f"P,{self.owner[k]},{self.seq[k]},{h},{i},{_fmt(t)},{hops}")
        for k, n, r, t in zip(self.d_item, self.d_node, self.d_reason, self.d_time):
            lines.append(f"D,{self.owner[k]},{self.seq[k]},{n},{DropReason(r).label},{_fmt(t)}")
        for node, t in sorted(self.died_at.items()):
            lines.append(f"X,{node},{_fmt(t)}")
        return lines

    @classmethod
    def from_lines(cls, lines: Iterable[str]) -> "ReplicaLedger":
        ledger = cls()
        for raw in lines:
            line = raw.rstrip("\n")
            if not line:
                continue
            tag, _, rest = line.partition(",")
            f = rest.split(",")
            if tag == "I":
                ledger.record_item(DataItem(DataItemId(int(f[0]), int(f[1])), float(f[2])))
            elif tag == "P":
                item = DataItemId(int(f[0]), int(f[1]))
                index = ledger.record_placement(item, int(f[2]), float(f[4]), int(f[5]))
                if index != int(f[3]):
                    raise ValueError(f"non-contiguous replica index in {line!r}")
            elif tag == "D":
                reason = DropReason[f[3].upper()]
                ledger.record_drop(DataItemId(int(f[0]), int(f[1])), int(f[2]), reason, float(f[4]))
            elif tag == "X":
                ledger.mark_dead(int(f[0]), float(f[1]))
            else:
                raise ValueError(f"unknown ledger record {line!r}")
        return ledger

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ReplicaLedger):
            return NotImplemented
        return self.to_lines() == other.to_lines()
