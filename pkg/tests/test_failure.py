import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dracosim import SimConfig, simulate
from dracosim.failure import FailureMode, FailurePlan, apply_failure, plan_failures, victim_count
from dracosim.invariants import check_trace

DURING, BOUNDARY = FailureMode.DURING_DISSEMINATION, FailureMode.AT_PHASE_BOUNDARY


def test_zero_fraction_is_empty():
    plan = plan_failures(100, 0.0, DURING, np.random.default_rng(0))
    assert plan.victims == frozenset() and plan.times == {}


def test_full_fraction_takes_everyone():
    plan = plan_failures(10, 1.0, DURING, np.random.default_rng(0))
    assert plan.victims == set(range(1, 11))


def test_each_node_equally_likely():
    rng = np.random.default_rng(2024)
    hits = np.zeros(101)
    for _ in range(10_000):
        for v in plan_failures(100, 0.5, BOUNDARY, rng).victims:
            hits[v] += 1
    assert np.all(np.abs(hits[1:] / 10_000 - 0.5) <= 0.02)


@pytest.mark.parametrize("n,f,k", [(100, 0.2, 20), (100, 0.7, 70), (10, 0.25, 3), (10, 0.35, 4), (3, 0.5, 2)])
def test_victim_count_rounds_half_up(n, f, k):
    assert victim_count(n, f) == k


@given(st.integers(1, 200), st.floats(0, 1), st.integers(0, 2**32 - 1), st.sampled_from([DURING, BOUNDARY]))
def test_plan_shape(n, f, seed, mode):
    plan = plan_failures(n, f, mode, np.random.default_rng(seed), duration=400.0)
    assert len(plan.victims) == victim_count(n, f)
    assert plan.victims <= set(range(1, n + 1))
    for t in plan.times.values():
        assert 0.0 < t <= 400.0
        if mode is BOUNDARY:
            assert t == 400.0


@given(st.integers(1, 100), st.integers(0, 2**32 - 1))
def test_plans_nest_as_fraction_grows(n, seed):
    small = plan_failures(n, 0.2, DURING, np.random.default_rng(seed))
    large = plan_failures(n, 0.7, DURING, np.random.default_rng(seed))
    assert small.victims <= large.victims
    assert all(large.times[v] == t for v, t in small.times.items())


def test_bad_fraction():
    with pytest.raises(ValueError):
        plan_failures(10, 1.5, DURING, np.random.default_rng(0))


def test_plan_text_roundtrip():
    plan = plan_failures(50, 0.3, DURING, np.random.default_rng(1))
    assert FailurePlan.from_text(plan.to_text()) == plan


def test_failed_node_stops_acting():
    cfg = SimConfig(n_nodes=30, failure_fraction=0.5, failure_mode="during", duration=60, collection_strategy=None)
    rec = simulate(cfg, 5, backend="python", trace=True)
    assert rec.ledger.died_at
    assert check_trace(rec.trace, rec.ledger.died_at) == []
    for v in rec.plan.victims:
        assert not rec.nodes[v].alive
        assert rec.ledger.died_at[v] == rec.plan.times[v]


def test_apply_failure_twice_is_an_error():
    from conftest import micro_world
    w = micro_world([(10, 10), (20, 10)])
    apply_failure(w, 1, 1.0)
    assert not w.nodes[1].alive and w.ledger.died_at == {1: 1.0}
    with pytest.raises(RuntimeError):
        apply_failure(w, 1, 2.0)
