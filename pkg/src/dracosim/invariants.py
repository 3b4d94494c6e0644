"""Whole-run consistency checks, used by ``dracosim validate`` and the tests."""

from __future__ import annotations

import numpy as np

from .collection import SinkStrategyKind
from .engine import SimulationRecord
from .metrics import compute_metrics


def check_record(record: SimulationRecord) -> list[str]:
    """Return a description of every violated invariant (empty when clean)."""
    cfg = record.config
    ledger = record.ledger
    bad = []
    copies = ledger.copies_per_item()
    if copies.size and copies.max() > cfg.replication_degree:
        bad.append(f"an item has {copies.max()} copies > R={cfg.replication_degree}")

    pairs = list(zip(ledger.p_item, ledger.p_holder))
    if len(set(pairs)) != len(pairs):
        bad.append("an item was placed twice on the same node")
    indexes = {}
    for k, idx in zip(ledger.p_item, ledger.p_index):
        indexes.setdefault(k, []).append(idx)
    if any(sorted(v) != list(range(1, len(v) + 1)) for v in indexes.values()):
        bad.append("replica indices are not 1..k per item")

    for i, node in record.nodes.items():
        if len(node.buffer) > cfg.buffer_capacity:
            bad.append(f"node {i} holds {len(node.buffer)} > capacity")

    # items never stored anywhere must have a recorded drop
    dropped = set(ledger.d_item)
    silent = [k for k in np.flatnonzero(copies == 0) if int(k) not in dropped]
    if silent:
        bad.append(f"{len(silent)} items vanished without a drop record")

    m = compute_metrics(record)
    if cfg.failure_fraction == 0 and copies.size and copies.min() > 0 and m.data_availability != 1.0:
        bad.append(f"availability {m.data_availability} != 1 with no failures")
    for v in record.plan.victims:
        if record.nodes[v].alive:
            bad.append(f"planned victim {v} is alive")
    diag = record.layout.geometry.diagonal()
    for k, dist, _ in m.replica_spread:
        if not 0.0 <= dist <= diag:
            bad.append(f"spread at index {k} is {dist} m, outside [0, diagonal]")

    trace = record.collection.entries
    cum = [e.cumulative_unique for e in trace]
    if any(b < a for a, b in zip(cum, cum[1:])):
        bad.append("cumulative collection decreased")
    if any(e.selected_node is None and e.new_items for e in trace):
        bad.append("empty visit collected items")
    pcts = [p for _, p in m.efficiency_curve]
    if any(b < a for a, b in zip(pcts, pcts[1:])):
        bad.append("efficiency curve decreased")

    strategy = cfg.collection_strategy
    if strategy in (SinkStrategyKind.DRACO.value, SinkStrategyKind.SA_RW.value):
        chosen = [e.selected_node for e in trace if e.selected_node is not None]
        if len(chosen) != len(set(chosen)):
            bad.append("a node was selected twice by a self-avoiding sink")
    if strategy == SinkStrategyKind.DRACO.value:
        for e, replies in zip(trace, record.sink_replies):
            if e.selected_node is not None and replies[e.selected_node] < max(replies.values()):
                bad.append("sink did not pick the node with the most new items")
                break

    stored = set()
    for node in record.nodes.values():
        stored.update(node.buffer)
    if not record.sink.collected <= stored:
        bad.append("sink holds items no node ever stored")

    if record.trace is not None:
        bad.extend(check_trace(record.trace, ledger.died_at))
    return bad


def check_trace(lines: list[str], died_at: dict) -> list[str]:
    """Dead nodes must not act after their time of death (LOST lines are
    deliveries addressed to them, which is fine)."""
    bad = []
    for line in lines:
        t, _seq, name, actor = line.split(",")
        actor = int(actor)
        if name in ("advert_timer", "sense_timer", "deliver_advert", "deliver_data"):
            if actor in died_at and float(t) > died_at[actor]:
                bad.append(f"node {actor} ran {name} at {t} after dying at {died_at[actor]}")
    return bad
