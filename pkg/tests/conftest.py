import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from dracosim.config import SimConfig
from dracosim.core import FieldGeometry
from dracosim.engine import World
from dracosim.failure import FailureMode, FailurePlan
from dracosim.topology import NodeLayout, build_adjacency

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=200, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# criterion number -> (passed, detail); filled by test_acceptance
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def micro_world(positions, alpha=12.0, intervals=None, plan=None, seed=0, trace=False, **overrides):
    """A World on hand-placed nodes (ids 1..n in list order) in a 100 x 100 field."""
    geometry = FieldGeometry.of_size(100, 100)
    layout = NodeLayout({i + 1: tuple(map(float, p)) for i, p in enumerate(positions)}, geometry)
    cfg = SimConfig(n_nodes=len(positions), alpha=alpha, drop_probability=0.0,
                    collection_strategy=None, **overrides)
    adjacency = build_adjacency(layout, alpha)
    intervals = intervals or {i: 1000.0 for i in layout.ids}
    plan = plan or FailurePlan(0.0, FailureMode.AT_PHASE_BOUNDARY)
    rng = np.random.default_rng(seed)
    return World(cfg, layout, adjacency, intervals, plan, rng=rng, sink_rng=np.random.default_rng(seed + 1),
                 trace=trace)


@pytest.fixture
def world_factory():
    return micro_world


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
