"""Permanent node failures: planning and application."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .core import NodeId


class FailureMode(enum.Enum):
    DURING_DISSEMINATION = "during"
    AT_PHASE_BOUNDARY = "boundary"


@dataclass(frozen=True)
class FailurePlan:
    fraction: float
    mode: FailureMode
    victims: frozenset[NodeId] = frozenset()
    times: dict[NodeId, float] = field(default_factory=dict)

    def is_victim(self, node: NodeId) -> bool:
        return node in self.victims

    def to_text(self) -> str:
        lines = [f"# fraction={self.fraction!r} mode={self.mode.value}"]
        lines += [f"{n},{self.times[n]!r}" for n in sorted(self.victims)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "FailurePlan":
        fraction, mode, times = 0.0, FailureMode.DURING_DISSEMINATION, {}
        for raw in text.splitlines():
            line = raw.strip()
            if line.startswith("#"):
                for token in line[1:].split():
                    key, _, value = token.partition("=")
                    if key == "fraction":
                        fraction = float(value)
                    elif key == "mode":
                        mode = FailureMode(value)
            elif line:
                node, t = line.split(",")
                times[int(node)] = float(t)
        return cls(fraction, mode, frozenset(times), times)


def victim_count(n: int, fraction: float) -> int:
    # round half up; Python's round() would round half to even
    return int(math.floor(fraction * n + 0.5))


def plan_failures(n: int, fraction: float, mode: FailureMode, rng: np.random.Generator,
                  duration: float = 400.0) -> FailurePlan:
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("fraction must be in [0, 1]")
    k = victim_count(n, fraction)
    # A full permutation and full set of times are drawn whatever the fraction,
    # so plans from the same stream are nested: raising F only adds victims.
    order = rng.permutation(np.arange(1, n + 1))
    # uniform on (0, duration]: flip the half-open [0, 1) draw
    when = duration * (1.0 - rng.random(size=n))
    chosen = order[:k]
    if mode is FailureMode.DURING_DISSEMINATION:
        draws = when[:k]
    else:
        draws = np.full(k, float(duration))
    times = {int(v): float(t) for v, t in zip(chosen, draws)}
    return FailurePlan(fraction, mode, frozenset(times), times)


def apply_failure(world, node: NodeId, at: float) -> None:
    """Kill ``node``. Pending timers become no-ops because every handler checks
    liveness; the ledger records the time of death."""
    state = world.nodes[node]
    if not state.alive:
        raise RuntimeError(f"node {node} is already dead")
    state.alive = False
    world.ledger.mark_dead(node, at)
