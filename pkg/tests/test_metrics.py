import pytest
from hypothesis import given
from hypothesis import strategies as st

from dracosim.collection import CollectionTrace, TraceEntry
from dracosim.core import DataItem, DataItemId, FieldGeometry, ReplicaLedger
from dracosim.failure import FailureMode, FailurePlan
from dracosim.metrics import (
    SCHEMAS,
    average_replicas,
    collection_efficiency,
    curve_value_at,
    data_availability,
    provenance_lines,
    read_csv,
    render_csv,
    replica_spread,
    write_csv,
)
from dracosim.topology import NodeLayout


def ledger_with(holders_per_item):
    led = ReplicaLedger()
    for k, holders in enumerate(holders_per_item):
        d = DataItem(DataItemId(1, k), 0.0)
        led.record_item(d)
        for hop, h in enumerate(holders):
            led.record_placement(d.id, h, 0.0, hop)
    return led


def plan(*victims):
    return FailurePlan(0.0, FailureMode.AT_PHASE_BOUNDARY, frozenset(victims), {v: 1.0 for v in victims})


def test_availability_two_of_three():
    # holders {a}, {a, b}, {c}; a fails
    led = ledger_with([[1], [1, 2], [3]])
    assert data_availability(led, plan(1)) == pytest.approx(2 / 3)


def test_sole_holder_dead():
    assert data_availability(ledger_with([[4]]), plan(4)) == 0.0


def test_one_of_two_holders_survives():
    assert data_availability(ledger_with([[4, 5]]), plan(4)) == 1.0


def test_no_failures_full_availability():
    assert data_availability(ledger_with([[1], [2, 3]]), plan()) == 1.0


def test_no_items_counts_as_available():
    assert data_availability(ReplicaLedger(), plan(1)) == 1.0


def test_unstored_item_is_unavailable():
    assert data_availability(ledger_with([[1], []]), plan()) == 0.5


@given(st.lists(st.lists(st.integers(1, 10), unique=True, max_size=4), min_size=1, max_size=20),
       st.sets(st.integers(1, 10)))
def test_availability_matches_set_oracle(items, victims):
    led = ledger_with(items)
    expected = sum(bool(set(h) - victims) for h in items) / len(items)
    assert data_availability(led, plan(*victims)) == pytest.approx(expected)


def test_average_replicas():
    assert average_replicas(ledger_with([[1], [1, 2], [1, 2, 3, 4]])) == pytest.approx(7 / 3)
    assert average_replicas(ledger_with([[1, 2], [3, 4]])) == 2.0
    assert average_replicas(ReplicaLedger()) == 0.0


def test_spread_on_a_line():
    layout = NodeLayout({1: (0.0, 0.0), 2: (10.0, 0.0), 3: (25.0, 0.0)}, FieldGeometry.of_size(100, 100))
    led = ledger_with([[1, 2, 3], [1, 2]])
    assert replica_spread(led, layout) == [(1, 0.0, 2), (2, 10.0, 2), (3, 25.0, 1)]
    assert replica_spread(ReplicaLedger(), layout) == []


def test_efficiency_skips_empty_visits():
    t = CollectionTrace([
        TraceEntry((0, 0), 1, 2, 2),
        TraceEntry((0, 0), None, 0, 2),
        TraceEntry((0, 0), 2, 2, 4),
    ])
    assert collection_efficiency(t, 4) == [(1, 50.0), (2, 100.0)]
    assert collection_efficiency(t, 0) == []


def test_curve_value_holds_last():
    curve = [(1, 10.0), (2, 30.0), (4, 50.0)]
    assert [curve_value_at(curve, v) for v in range(6)] == [0.0, 10.0, 30.0, 30.0, 50.0, 50.0]


def test_provenance_compacts_long_seed_lists():
    assert provenance_lines("abc", [2, 1], "1.0")[1] == "# seeds=1 2"
    assert provenance_lines("abc", range(30), "1.0")[1] == "# seeds=0..29 (30 seeds)"


def test_csv_schema_and_roundtrip(tmp_path):
    path = tmp_path / "a.csv"
    rows = [("draco", 100, 5, 0.2, 3, 0.75)]
    write_csv(path, SCHEMAS["availability"], rows, ["# config_hash=x"])
    text = path.read_text().splitlines()
    assert text[0] == "# config_hash=x"
    assert text[1] == "strategy,N,R,F,seed,value"
    assert read_csv(path) == [{"strategy": "draco", "N": "100", "R": "5", "F": "0.2", "seed": "3", "value": "0.75"}]


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_floats_survive_csv(x):
    text = render_csv(["v"], [(x,)])
    assert float(text.splitlines()[1]) == x
