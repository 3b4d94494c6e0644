import numpy as np
import pytest
from conftest import micro_world
from hypothesis import given, settings
from hypothesis import strategies as st

from dracosim import SimConfig, kernel, simulate
from dracosim.failure import FailureMode, FailurePlan

compiled_only = pytest.mark.skipif(not kernel.HAVE_COMPILED, reason="compiled kernel not built")


def test_resolve_defaults_to_first_available():
    assert kernel.resolve(None) == kernel.BACKENDS[0]
    assert kernel.resolve("python") == "python"
    with pytest.raises(ValueError):
        kernel.resolve("fortran")


def test_resolve_without_compiled(monkeypatch):
    monkeypatch.setattr(kernel, "HAVE_COMPILED", False)
    with pytest.raises(RuntimeError):
        kernel.resolve("compiled")
    assert kernel.resolve("python") == "python"


configs = st.builds(
    SimConfig,
    n_nodes=st.integers(2, 40),
    alpha=st.sampled_from([10.0, 20.0, 35.0]),
    buffer_capacity=st.sampled_from([3, 20, 20000]),
    replication_strategy=st.sampled_from(["draco", "greedy", "random"]),
    replication_degree=st.integers(1, 6),
    failure_fraction=st.sampled_from([0.0, 0.3, 0.8]),
    failure_mode=st.sampled_from(["during", "boundary"]),
    collection_strategy=st.sampled_from([None, "draco", "sa_rw", "rw"]),
    drop_probability=st.sampled_from([0.0, 0.19, 0.6]),
    duration=st.sampled_from([15.0, 60.0]),
)


@compiled_only
@settings(max_examples=60)
@given(configs, st.integers(0, 2**31))
def test_backends_agree(cfg, seed):
    a = simulate(cfg, seed, backend="compiled", trace=True)
    b = simulate(cfg, seed, backend="python", trace=True)
    assert a.ledger == b.ledger
    assert a.trace == b.trace
    assert a.collection == b.collection
    assert {i: list(n.buffer) for i, n in a.nodes.items()} == {i: list(n.buffer) for i, n in b.nodes.items()}


@compiled_only
def test_backends_agree_on_hand_placed_world():
    line = [(10, 50), (20, 50), (30, 50), (40, 50), (50, 50)]
    plan = FailurePlan(0.2, FailureMode.DURING_DISSEMINATION, frozenset({3}), {3: 4.0})
    intervals = {1: 1.5, 2: 2.5, 3: 3.0, 4: 1.2, 5: 2.0}
    make = lambda: micro_world(line, intervals=intervals, plan=plan, trace=True, duration=20.0, replication_degree=3)
    py = kernel.disseminate(make(), "python")
    co = kernel.disseminate(make(), "compiled")
    assert py.ledger == co.ledger
    assert py.trace == co.trace
    assert py.buffers == co.buffers
    assert py.end_time == co.end_time


@compiled_only
def test_rng_left_in_same_state():
    cfg = SimConfig(n_nodes=20, duration=40.0, replication_strategy="random")
    from dracosim.runner import build_world
    worlds = [build_world(cfg, 3), build_world(cfg, 3)]
    kernel.disseminate(worlds[0], "compiled")
    kernel.disseminate(worlds[1], "python")
    assert np.array_equal(worlds[0].rng.random(4), worlds[1].rng.random(4))
