import pytest
from conftest import micro_world

from dracosim import SimConfig, simulate
from dracosim.core import DataItem, DataItemId, DataMessage, DropReason
from dracosim.engine import EventKind, EventQueue, Phase, SchedulingError
from dracosim.failure import FailureMode, FailurePlan

LINE = [(10, 50), (20, 50), (30, 50), (40, 50), (50, 50)]  # chain 1-2-3-4-5 at alpha=12


def test_queue_orders_by_time_then_insertion():
    q = EventQueue()
    q.push(5.0, 0, 1)
    q.push(1.0, 0, 2)
    q.push(5.0, 0, 3)
    q.push(1.0, 0, 4)
    assert [q.pop()[3] for _ in range(4)] == [2, 4, 1, 3]


def test_event_at_now_fires_before_later_ones():
    w = micro_world(LINE)
    w.schedule(3.0, EventKind.ADVERT_TIMER, 1)
    w.schedule(0.0, EventKind.ADVERT_TIMER, 2)
    t, _, _, actor, _ = w.queue.pop()
    assert (t, actor) == (0.0, 2)


def test_scheduling_in_the_past_aborts():
    w = micro_world(LINE)
    w.clock.advance(5.0)
    with pytest.raises(SchedulingError):
        w.schedule(4.0, EventKind.ADVERT_TIMER, 1)


def test_clock_never_goes_back():
    w = micro_world(LINE)
    w.clock.advance(2.0)
    with pytest.raises(SchedulingError):
        w.clock.advance(1.0)


def test_broadcast_fan_out():
    star = [(50, 50), (55, 50), (45, 50), (50, 55), (90, 90)]
    w = micro_world(star)
    assert w.broadcast(1, None) == 3
    assert all(t == pytest.approx(w.config.hop_delay) for t, *_ in w.queue._heap)
    assert w.broadcast(5, None) == 0
    w.nodes[4].alive = False
    assert w.broadcast(1, None) == 2


def _message(owner=1, r=3):
    return DataMessage(DataItem(DataItemId(owner, 0), 0.0), r)


def test_unicast_to_non_neighbour_aborts():
    w = micro_world(LINE)
    with pytest.raises(SchedulingError):
        w.unicast(1, 3, _message())


def test_unicast_delivers_to_alive_neighbour():
    w = micro_world(LINE)
    w.ledger.record_item(_message().item)
    assert w.unicast(1, 2, _message()) is True
    w.run_dissemination()
    assert w.ledger.holders(DataItemId(1, 0)) == [2]


def test_recipient_dying_in_transit_loses_the_copy():
    w = micro_world(LINE, trace=True)
    msg = _message()
    w.ledger.record_item(msg.item)
    w.unicast(1, 2, msg)
    w.schedule(w.config.hop_delay / 2, EventKind.NODE_FAILURE, 2)
    w.run_dissemination()
    assert w.ledger.holders(DataItemId(1, 0)) == []
    assert [d.reason for d in w.ledger.drops()] == [DropReason.RECIPIENT_DEAD]
    assert w._trace[-1][2] == EventKind.LOST


def test_empty_world_finishes_immediately():
    w = micro_world(LINE)
    rec = w.run_until_done()
    assert w.clock.phase is Phase.DONE
    assert rec.ledger.total_items == 0 and len(rec.collection) == 0


def test_same_seed_same_record():
    cfg = SimConfig(n_nodes=25, failure_fraction=0.3, failure_mode="during", collection_strategy="rw")
    a = simulate(cfg, 9, backend="python", trace=True)
    b = simulate(cfg, 9, backend="python", trace=True)
    assert a.trace == b.trace
    assert a.ledger == b.ledger
    assert a.collection.to_csv() == b.collection.to_csv()


def test_phase_separation():
    cfg = SimConfig(n_nodes=15, duration=40, collection_strategy="draco")
    rec = simulate(cfg, 2, backend="python", trace=True)
    names = [line.split(",")[2] for line in rec.trace]
    boundary = names.index("phase_boundary")
    assert "sense_timer" not in names[boundary:]
    assert "sink_arrival" not in names[:boundary]
    assert names.count("phase_boundary") == 1


def test_causality_in_trace():
    rec = simulate(SimConfig(n_nodes=20, duration=30), 4, backend="python", trace=True)
    times = [float(line.split(",")[0]) for line in rec.trace]
    assert times == sorted(times)


def test_hand_simulated_trace():
    """Five nodes in a chain, node 1 senses once, node 3 dies before hearing anything.

    Replication degree 3: node 1 keeps a copy, sends to 2 (its only neighbour);
    node 2 keeps a copy and, with 1 already visited, can only pick 3, which is
    dead by then, so the third copy is lost in transit.
    """
    intervals = {1: 2.5, 2: 10.0, 3: 10.0, 4: 10.0, 5: 10.0}
    plan = FailurePlan(0.2, FailureMode.DURING_DISSEMINATION, frozenset({3}), {3: 0.005})
    w = micro_world(LINE, intervals=intervals, plan=plan, trace=True,
                    duration=3.0, replication_degree=3, hop_delay=0.01)
    w.seed_events()
    rec = w.run_until_done()
    h = 0.01
    d1 = 2.5 + h
    d2 = d1 + h
    expected = [
        (0.0, 0, "advert_timer", 1),
        (0.0, 1, "advert_timer", 2),
        (0.0, 2, "advert_timer", 3),
        (0.0, 3, "advert_timer", 4),
        (0.0, 4, "advert_timer", 5),
        (0.005, 6, "node_failure", 3),
        (h, 7, "deliver_advert", 2),   # from 1
        (h, 8, "deliver_advert", 1),   # from 2
        (h, 9, "lost", 3),             # from 2, 3 is dead
        (h, 10, "deliver_advert", 2),  # from 3
        (h, 11, "deliver_advert", 4),  # from 3
        (h, 12, "lost", 3),            # from 4
        (h, 13, "deliver_advert", 5),  # from 4
        (h, 14, "deliver_advert", 4),  # from 5
        (2.5, 5, "sense_timer", 1),
        (d1, 15, "deliver_data", 2),
        (d2, 16, "lost", 3),
        (3.0, 17, "phase_boundary", 0),
    ]
    assert rec.trace == [f"{t!r},{s},{k},{a}" for t, s, k, a in expected]
    item = DataItemId(1, 0)
    assert [(p.holder, p.replica_index, p.hop_count) for p in rec.ledger.placements(item)] == [(1, 1, 0), (2, 2, 1)]
    assert [(d.node, d.reason) for d in rec.ledger.drops()] == [(3, DropReason.RECIPIENT_DEAD)]
    assert rec.ledger.died_at == {3: 0.005}
