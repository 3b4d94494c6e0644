"""Deterministic discrete-event kernel.

Events are totally ordered by ``(fire_at, seq)`` where ``seq`` is the
insertion counter. A run has two phases: dissemination (timers, adverts,
data messages, failures) which ends once the queue has drained past the
configured duration, then collection (one ``SINK_ARRIVAL`` per site).
"""

from __future__ import annotations

import enum
import heapq
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from . import replication as rep
from .collection import CollectionTrace, SinkStrategyKind, SinkWalker
from .config import SimConfig
from .core import DataItemId, DropReason, NeighborAttributes, NodeId, NodeState, ReplicaLedger, SinkState
from .failure import FailureMode, FailurePlan, apply_failure
from .topology import AdjacencyMap, NodeLayout


class Phase(enum.Enum):
    DISSEMINATION = "dissemination"
    COLLECTION = "collection"
    DONE = "done"


class EventKind(enum.IntEnum):
    ADVERT_TIMER = 0
    SENSE_TIMER = 1
    DELIVER_ADVERT = 2
    DELIVER_DATA = 3
    NODE_FAILURE = 4
    PHASE_BOUNDARY = 5
    SINK_ARRIVAL = 6
    # trace only: a delivery that reached a dead node
    LOST = 7


TRACE_NAMES = {k: k.name.lower() for k in EventKind}


class SchedulingError(RuntimeError):
    pass


@dataclass(frozen=True)
class Event:
    fire_at: float
    seq: int
    kind: EventKind
    actor: int
    payload: Any = None


@dataclass
class SimClock:
    now: float = 0.0
    dissemination_duration: float = 400.0
    phase: Phase = Phase.DISSEMINATION

    def advance(self, t: float) -> None:
        if t < self.now:
            raise SchedulingError(f"clock moving backwards: {t} < {self.now}")
        self.now = t


class EventQueue:
    def __init__(self, first_seq: int = 0):
        self._heap: list[tuple[float, int, int, int, Any]] = []
        self.next_seq = first_seq

    def push(self, fire_at: float, kind: int, actor: int, payload: Any = None) -> int:
        seq = self.next_seq
        self.next_seq += 1
        heapq.heappush(self._heap, (fire_at, seq, kind, actor, payload))
        return seq

    def pop(self) -> tuple[float, int, int, int, Any]:
        return heapq.heappop(self._heap)

    def peek_time(self) -> Optional[float]:
        return self._heap[0][0] if self._heap else None

    def __len__(self) -> int:
        return len(self._heap)


def format_trace(rows) -> list[str]:
    return [f"{t!r},{s},{TRACE_NAMES[k]},{a}" for t, s, k, a in rows]


@dataclass
class DisseminationResult:
    """Backend-neutral outcome of the dissemination phase (both the event
    engine below and the compiled kernel produce one)."""

    ledger: ReplicaLedger
    buffers: dict[NodeId, list[DataItemId]]
    n_att: dict[NodeId, list[NeighborAttributes]]
    next_seq: dict[NodeId, int]
    alive: dict[NodeId, bool]
    end_time: float
    next_event_seq: int
    trace: Optional[list[tuple[float, int, int, int]]] = None

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DisseminationResult):
            return NotImplemented
        return (
            self.ledger == other.ledger
            and self.buffers == other.buffers
            and self.n_att == other.n_att
            and self.next_seq == other.next_seq
            and self.alive == other.alive
            and self.end_time == other.end_time
            and self.next_event_seq == other.next_event_seq
            and self.trace == other.trace
        )


@dataclass
class SimulationRecord:
    config: SimConfig
    layout: NodeLayout
    adjacency: AdjacencyMap
    plan: FailurePlan
    ledger: ReplicaLedger
    nodes: dict[NodeId, NodeState]
    sink: SinkState
    collection: CollectionTrace
    sink_replies: list[dict]
    trace: Optional[list[str]] = None
    backend: str = "python"
    extras: dict = field(default_factory=dict)


class World:
    """All state of one run plus the message primitives the node handlers use."""

    def __init__(self, config: SimConfig, layout: NodeLayout, adjacency: AdjacencyMap,
                 sense_intervals: dict[NodeId, float], plan: FailurePlan,
                 rng: np.random.Generator, sink_rng: Optional[np.random.Generator] = None,
                 trace: bool = False):
        self.config = config
        self.layout = layout
        self.adjacency = adjacency
        self.plan = plan
        self.rng = rng
        self.sink_rng = sink_rng if sink_rng is not None else rng
        self.nodes = {
            i: NodeState(i, layout.positions[i], config.buffer_capacity, float(sense_intervals[i]))
            for i in layout.ids
        }
        self._nbrs = {i: adjacency.sorted_neighbors(i) for i in layout.ids}
        self.ledger = ReplicaLedger()
        self.clock = SimClock(0.0, config.duration)
        self.queue = EventQueue()
        self.tracing = trace
        self._trace: list[tuple[float, int, int, int]] = []
        self.strategy = rep.ReplicationStrategyKind.parse(config.replication_strategy)
        self.select = rep.make_selector(self.strategy, self)
        self.sink = SinkState(cr=config.sink_cr, max_sites=config.site_budget)
        self.walker: Optional[SinkWalker] = None
        self.backend = "python"
        self._handlers = {
            EventKind.ADVERT_TIMER: self._on_advert_timer,
            EventKind.SENSE_TIMER: self._on_sense_timer,
            EventKind.DELIVER_ADVERT: self._on_deliver_advert,
            EventKind.DELIVER_DATA: self._on_deliver_data,
            EventKind.NODE_FAILURE: self._on_failure,
            EventKind.PHASE_BOUNDARY: self._on_phase_boundary,
            EventKind.SINK_ARRIVAL: self._on_sink_arrival,
        }

    @property
    def now(self) -> float:
        return self.clock.now

    # -- scheduling -----------------------------------------------------------

    def schedule(self, fire_at: float, kind: EventKind, actor: int, payload: Any = None) -> int:
        if fire_at < self.clock.now:
            raise SchedulingError(f"cannot schedule {kind.name} at {fire_at} < now {self.clock.now}")
        return self.queue.push(fire_at, int(kind), actor, payload)

    def schedule_advert(self, node: NodeId, at: float) -> None:
        self.schedule(at, EventKind.ADVERT_TIMER, node)

    def schedule_sense(self, node: NodeId, at: float) -> None:
        self.schedule(at, EventKind.SENSE_TIMER, node)

    def seed_events(self) -> None:
        """Initial timers: adverts at t=0, first sensing after one interval,
        then planned failures (in node order) for the during-dissemination mode."""
        for i in self.layout.ids:
            self.schedule_advert(i, 0.0)
        for i in self.layout.ids:
            first = self.nodes[i].sense_interval
            if first <= self.config.duration:
                self.schedule_sense(i, first)
        if self.plan.mode is FailureMode.DURING_DISSEMINATION:
            for v in sorted(self.plan.victims):
                self.schedule(self.plan.times[v], EventKind.NODE_FAILURE, v)

    # -- message primitives -----------------------------------------------------

    def _lost(self) -> bool:
        p = self.config.drop_probability
        return p > 0.0 and self.rng.random() < p

    def broadcast(self, sender: NodeId, payload) -> int:
        at = self.now + self.config.hop_delay
        sent = 0
        for j in self._nbrs[sender]:
            if not self.nodes[j].alive or self._lost():
                continue
            self.schedule(at, EventKind.DELIVER_ADVERT, j, payload)
            sent += 1
        return sent

    def unicast(self, sender: NodeId, to: NodeId, msg) -> bool:
        if to not in self.adjacency.neighbors[sender]:
            raise SchedulingError(f"unicast from {sender} to non-neighbour {to}")
        if self._lost():
            self.ledger.record_drop(msg.item.id, to, DropReason.LINK_LOSS, self.now)
            return True
        self.schedule(self.now + self.config.hop_delay, EventKind.DELIVER_DATA, to, msg)
        return True

    # -- handlers -----------------------------------------------------------------

    def _on_advert_timer(self, node: NodeState, payload) -> None:
        rep.on_advert_timer(self, node)

    def _on_sense_timer(self, node: NodeState, payload) -> None:
        rep.on_sense(self, node)

    def _on_deliver_advert(self, node: NodeState, payload) -> None:
        rep.on_receive_advert(node, payload, self.now)

    def _on_deliver_data(self, node: NodeState, payload) -> None:
        rep.handle_data_message(self, node, payload, is_owner=False)

    def _on_failure(self, node: NodeState, payload) -> None:
        apply_failure(self, node.id, self.now)

    def _on_phase_boundary(self, node, payload) -> None:
        self.clock.phase = Phase.COLLECTION
        if self.plan.mode is FailureMode.AT_PHASE_BOUNDARY:
            for v in sorted(self.plan.victims):
                if self.nodes[v].alive:
                    apply_failure(self, v, self.now)
        if self.config.collection_strategy is not None:
            self.walker = SinkWalker(
                SinkStrategyKind(self.config.collection_strategy), self.sink, self.nodes,
                self.layout.geometry, self.sink_rng, self.config.site_rejection_limit,
            )
            if not self.walker.done:
                self.schedule(self.now, EventKind.SINK_ARRIVAL, 0)

    def _on_sink_arrival(self, node, payload) -> None:
        self.walker.step()
        if not self.walker.done:
            self.schedule(self.now, EventKind.SINK_ARRIVAL, self.sink.sites_visited)

    def step(self) -> bool:
        """Process one event; False once the queue is empty."""
        if not self.queue:
            return False
        t, seq, kind, actor, payload = self.queue.pop()
        self.clock.advance(t)
        kind = EventKind(kind)
        node = self.nodes.get(actor) if kind < EventKind.PHASE_BOUNDARY else None
        if node is not None and not node.alive:
            if kind is EventKind.DELIVER_DATA:
                self.ledger.record_drop(payload.item.id, actor, DropReason.RECIPIENT_DEAD, t)
            if kind in (EventKind.DELIVER_ADVERT, EventKind.DELIVER_DATA):
                self._record(t, seq, EventKind.LOST, actor)
            # timers of dead nodes are cancelled: silently skipped
            return True
        if kind is EventKind.SENSE_TIMER and self.clock.phase is not Phase.DISSEMINATION:
            raise SchedulingError("sense timer fired outside dissemination")
        self._record(t, seq, kind, actor)
        self._handlers[kind](node, payload)
        return True

    def _record(self, t: float, seq: int, kind: EventKind, actor: int) -> None:
        if self.tracing:
            self._trace.append((t, seq, int(kind), actor))

    def run_dissemination(self) -> None:
        while self.step():
            pass

    def run_until_done(self) -> SimulationRecord:
        if self.clock.phase is Phase.DISSEMINATION:
            self.run_dissemination()
            self.schedule(max(self.now, self.config.duration), EventKind.PHASE_BOUNDARY, 0)
        while self.step():
            pass
        self.clock.phase = Phase.DONE
        return self.record()

    # -- results ------------------------------------------------------------------

    def dissemination_result(self) -> DisseminationResult:
        return DisseminationResult(
            ledger=self.ledger,
            buffers={i: list(n.buffer) for i, n in self.nodes.items()},
            n_att={i: [n.n_att[j] for j in sorted(n.n_att)] for i, n in self.nodes.items()},
            next_seq={i: n.next_seq for i, n in self.nodes.items()},
            alive={i: n.alive for i, n in self.nodes.items()},
            end_time=self.now,
            next_event_seq=self.queue.next_seq,
            trace=list(self._trace) if self.tracing else None,
        )

    def adopt(self, result: DisseminationResult) -> None:
        """Load a dissemination outcome computed elsewhere (the compiled kernel,
        or another world) so that the collection phase continues from it.
        ``result`` is not modified and can seed several worlds."""
        if self.queue or self.clock.phase is not Phase.DISSEMINATION:
            raise RuntimeError("adopt() needs a fresh world")
        for i, node in self.nodes.items():
            node.buffer = dict.fromkeys(result.buffers[i])
            node.n_att = {a.node: a for a in result.n_att[i]}
            node.next_seq = result.next_seq[i]
            node.alive = result.alive[i]
        self.ledger = result.ledger.copy()
        self.clock.now = result.end_time
        self.queue = EventQueue(result.next_event_seq)
        if self.tracing:
            self._trace = list(result.trace or [])

    def record(self) -> SimulationRecord:
        return SimulationRecord(
            config=self.config,
            layout=self.layout,
            adjacency=self.adjacency,
            plan=self.plan,
            ledger=self.ledger,
            nodes=self.nodes,
            sink=self.sink,
            collection=self.walker.trace if self.walker else CollectionTrace(),
            sink_replies=self.walker.replies if self.walker else [],
            trace=format_trace(self._trace) if self.tracing else None,
            backend=self.backend,
        )
