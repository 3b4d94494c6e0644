"""Sensor-side dissemination: sensing, resource adverts, neighbour tables and
replica candidate selection (DRACO, Greedy, Random)."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional

from .core import DataItem, DataItemId, DataMessage, DropReason, NeighborAttributes, NodeId, NodeState


class ReplicationStrategyKind(enum.IntEnum):
    DRACO = 0
    GREEDY = 1
    RANDOM = 2

    @classmethod
    def parse(cls, name: str) -> "ReplicationStrategyKind":
        return cls[name.upper()]


@dataclass(frozen=True)
class AdvertisementMessage:
    sender: NodeId
    non: int
    rm: int


def fresh_rows(node: NodeState, now: float, stale_after: float) -> list[NeighborAttributes]:
    return [a for a in node.n_att.values() if now - a.last_heard <= stale_after]


def _max_by(rows, key) -> Optional[NodeId]:
    best = None
    for a in rows:
        if best is None or key(a) > key(best) or (key(a) == key(best) and a.node < best.node):
            best = a
    return None if best is None else best.node


def draco_select_candidate(node: NodeState, msg: DataMessage, is_owner: bool,
                           now: float = 0.0, stale_after: float = math.inf) -> Optional[NodeId]:
    rows = [a for a in fresh_rows(node, now, stale_after) if a.rm > 0]
    if is_owner:
        return _max_by(rows, lambda a: a.non)
    pv, pr, cn = msg.pv, msg.pr, msg.cn
    first = [a for a in rows if a.node not in pv and a.node not in pr and a.node not in cn]
    if first:
        return _max_by(first, lambda a: a.non)
    second = [a for a in rows if a.node not in pv and a.node not in pr]
    return _max_by(second, lambda a: a.non)


def greedy_select_candidate(node: NodeState, msg: DataMessage, is_owner: bool,
                            now: float = 0.0, stale_after: float = math.inf) -> Optional[NodeId]:
    # the PV exclusion is a loop guard; without it two full nodes can ping-pong
    rows = [a for a in fresh_rows(node, now, stale_after) if a.rm > 0 and a.node not in msg.pv]
    return _max_by(rows, lambda a: a.rm)


def random_select_candidate(node: NodeState, msg: DataMessage, is_owner: bool, rng,
                            now: float = 0.0, stale_after: float = math.inf) -> Optional[NodeId]:
    """Uniform pick over unvisited neighbours, memory ignored. Consumes exactly
    one ``rng.random()`` draw when at least one neighbour is eligible."""
    ids = sorted(a.node for a in fresh_rows(node, now, stale_after) if a.node not in msg.pv)
    if not ids:
        return None
    k = int(rng.random() * len(ids))
    return ids[min(k, len(ids) - 1)]


Selector = Callable[[NodeState, DataMessage, bool], Optional[NodeId]]


def make_selector(kind: ReplicationStrategyKind, world) -> Selector:
    stale = world.config.stale_window
    if kind is ReplicationStrategyKind.DRACO:
        return lambda node, msg, owner: draco_select_candidate(node, msg, owner, world.now, stale)
    if kind is ReplicationStrategyKind.GREEDY:
        return lambda node, msg, owner: greedy_select_candidate(node, msg, owner, world.now, stale)
    return lambda node, msg, owner: random_select_candidate(node, msg, owner, world.rng, world.now, stale)


# -- event handlers (run inside the event loop) ------------------------------

def on_advert_timer(world, node: NodeState) -> None:
    now = world.now
    non = len(fresh_rows(node, now, world.config.stale_window))
    world.broadcast(node.id, AdvertisementMessage(node.id, non, node.rm))
    nxt = now + world.config.advert_interval
    if nxt <= world.config.duration:
        world.schedule_advert(node.id, nxt)


def on_receive_advert(node: NodeState, adv: AdvertisementMessage, now: float) -> None:
    node.n_att[adv.sender] = NeighborAttributes(adv.sender, adv.non, adv.rm, now)


def on_sense(world, node: NodeState) -> None:
    now = world.now
    item = DataItem(DataItemId(node.id, node.next_seq), now)
    node.next_seq += 1
    world.ledger.record_item(item)
    msg = DataMessage(item, remaining_r=world.config.replication_degree)
    handle_data_message(world, node, msg, is_owner=True)
    nxt = now + node.sense_interval
    if nxt <= world.config.duration:
        world.schedule_sense(node.id, nxt)


def handle_data_message(world, node: NodeState, msg: DataMessage, is_owner: bool) -> None:
    stored = node.rm > 0
    if stored:
        node.store(msg.item.id)
        world.ledger.record_placement(msg.item.id, node.id, world.now, msg.hop_count)
        msg.remaining_r -= 1
        msg.pv.append(node.id)
        msg.pr.append(node.id)
    else:
        msg.pv.append(node.id)
    if msg.remaining_r <= 0:
        return
    candidate = world.select(node, msg, is_owner)
    if candidate is None:
        reason = DropReason.NO_CANDIDATE if stored else DropReason.BUFFER_FULL_TERMINAL
        world.ledger.record_drop(msg.item.id, node.id, reason, world.now)
        return
    if stored:
        # The holder's own neighbours join CN only once it has chosen: they
        # are "common" with respect to the holders that come after it.
        msg.cn.update(world.adjacency.neighbors[node.id])
    msg.hop_count += 1
    world.unicast(node.id, candidate, msg)
