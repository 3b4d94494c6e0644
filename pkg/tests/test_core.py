import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from dracosim.core import (
    DataItem,
    DataItemId,
    DataMessage,
    DropReason,
    FieldGeometry,
    NeighborAttributes,
    NodeState,
    ReplicaLedger,
    SinkState,
    area,
    distance,
)

ids = st.integers(min_value=1, max_value=500)
coords = st.floats(min_value=0, max_value=1000, allow_nan=False)
times = st.floats(min_value=0, max_value=400, allow_nan=False)
points = st.tuples(coords, coords)
item_ids = st.builds(DataItemId, ids, st.integers(min_value=0, max_value=10_000))


@pytest.mark.parametrize("w,h,expected", [(100, 100, 10000), (1, 1, 1), (50, 200, 10000)])
def test_area(w, h, expected):
    assert area(FieldGeometry.of_size(w, h)) == expected


def test_geometry_rejects_inverted_corners():
    with pytest.raises(ValueError):
        FieldGeometry((10, 0), (5, 10))


def test_geometry_contains_boundary():
    g = FieldGeometry((0, 0), (10, 20))
    assert g.contains((10, 20)) and g.contains((0, 0))
    assert not g.contains((10.001, 5))
    assert g.diagonal() == pytest.approx(math.hypot(10, 20))


def test_distance():
    assert distance((0, 0), (3, 4)) == 5.0


def test_drop_reason_labels():
    assert DropReason.NO_CANDIDATE.label == "no_candidate"
    assert DropReason(1) is DropReason.BUFFER_FULL_TERMINAL


def test_node_rm_and_store():
    n = NodeState(1, (0.0, 0.0), 2, 1.0)
    assert n.rm == 2
    n.store(DataItemId(1, 0))
    n.store(DataItemId(1, 1))
    assert n.rm == 0
    with pytest.raises(OverflowError):
        n.store(DataItemId(1, 2))


# -- round trips ----------------------------------------------------------------

@given(points, points)
def test_geometry_roundtrip(a, b):
    c1 = (min(a[0], b[0]), min(a[1], b[1]))
    c2 = (max(a[0], b[0]) + 1, max(a[1], b[1]) + 1)
    g = FieldGeometry(c1, c2)
    assert FieldGeometry.from_line(g.to_line()) == g


@given(item_ids, times)
def test_item_roundtrip(i, t):
    assert DataItemId.from_line(i.to_line()) == i
    d = DataItem(i, t)
    assert DataItem.from_line(d.to_line()) == d


@given(item_ids, times, st.integers(0, 5), st.lists(ids, unique=True), st.sets(ids), st.integers(0, 50))
def test_message_roundtrip(i, t, r, pv, cn, h):
    pr = pv[: len(pv) // 2]
    msg = DataMessage(DataItem(i, t), r, pr, pv, cn, h)
    assert DataMessage.from_line(msg.to_line()) == msg


@given(ids, st.integers(0, 99), st.integers(0, 100), times)
def test_neighbor_row_roundtrip(node, non, rm, t):
    a = NeighborAttributes(node, non, rm, t)
    assert NeighborAttributes.from_line(a.to_line()) == a


@given(ids, points, st.lists(item_ids, unique=True, max_size=20),
       st.dictionaries(ids, st.tuples(st.integers(0, 99), st.integers(0, 50), times)),
       st.floats(1, 4), st.integers(0, 100), st.booleans())
def test_node_roundtrip(nid, pos, buf, rows, interval, nxt, alive):
    n = NodeState(nid, pos, 50, interval, dict.fromkeys(buf),
                  {k: NeighborAttributes(k, *v) for k, v in rows.items()}, nxt, alive)
    back = NodeState.from_line(n.to_line())
    assert back == n
    assert list(back.buffer) == buf


@given(st.one_of(st.none(), points), st.sets(item_ids), st.lists(points), st.sets(ids))
def test_sink_roundtrip(pos, collected, sites, visited):
    s = SinkState(20.0, 400, pos, collected, sites, visited)
    assert SinkState.from_line(s.to_line()) == s
    assert s.sites_visited == len(sites)


@st.composite
def ledgers(draw):
    led = ReplicaLedger()
    n_items = draw(st.integers(0, 8))
    for k in range(n_items):
        d = DataItem(DataItemId(draw(ids), k), draw(times))
        led.record_item(d)
        for holder in draw(st.lists(ids, unique=True, max_size=4)):
            led.record_placement(d.id, holder, draw(times), draw(st.integers(0, 5)))
        if draw(st.booleans()):
            led.record_drop(d.id, draw(ids), draw(st.sampled_from(list(DropReason))), draw(times))
    for node in draw(st.sets(ids, max_size=3)):
        led.mark_dead(node, draw(times))
    return led


@given(ledgers())
def test_ledger_roundtrip(led):
    back = ReplicaLedger.from_lines(led.to_lines())
    assert back == led
    assert back.to_lines() == led.to_lines()


@given(ledgers())
def test_ledger_copy_is_independent(led):
    other = led.copy()
    assert other == led
    other.mark_dead(9999, 1.0)
    assert 9999 not in led.died_at


def test_ledger_replica_indices_contiguous():
    led = ReplicaLedger()
    d = DataItem(DataItemId(1, 0), 0.0)
    led.record_item(d)
    assert [led.record_placement(d.id, h, 0.0, h - 1) for h in (1, 2, 3)] == [1, 2, 3]
    assert led.holders(d.id) == [1, 2, 3]
    assert [p.replica_index for p in led.placements(d.id)] == [1, 2, 3]
    assert led.copies_per_item().tolist() == [3]
