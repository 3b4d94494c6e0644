"""Scenario sweeps: definitions, seed fan-out, parallel execution, CSV output.

A scenario file uses the same sections as a run file. List-valued keys take
comma-separated values and span the sweep; every other key is a fixed
override applied to all runs::

    [sim]
    name = my_sweep
    repetitions = 10
    base_seed = 1

    [nodes]
    count = 50, 100

    [replication]
    strategy = draco, greedy
    degree = 3, 5

    [failure]
    fraction = 0.2, 0.5

    [collection]
    strategy = none

Run ``r`` of a scenario uses seed ``base_seed + r`` at every sweep point. The
seed feeds named random streams that also key on the sweep point (see
``runner.stream``), so each run is a pure function of (base_seed, point, r)
and strategies are compared on the same deployments and failure victims.
"""

from __future__ import annotations

import dataclasses
import hashlib
import math
import os
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .config import (
    COLLECTION_STRATEGIES,
    REPLICATION_STRATEGIES,
    ConfigError,
    SimConfig,
    parse_value,
    read_sections,
)
from .metrics import SCHEMAS, compute_metrics, curve_value_at, provenance_lines, write_csv
from .runner import simulate_fractions

# section -> key -> Scenario field, for the swept keys
LIST_KEYS = {
    ("nodes", "count"): "node_counts",
    ("replication", "strategy"): "replication_strategies",
    ("replication", "degree"): "replication_degrees",
    ("failure", "fraction"): "failure_fractions",
    ("collection", "strategy"): "collection_strategies",
}
SIM_KEYS = {"name", "repetitions", "base_seed"}

AGGREGATE_SCHEMAS = {
    "availability": ["strategy", "N", "R", "F", "runs", "mean", "stderr"],
    "replicas": ["strategy", "N", "R", "F", "runs", "mean", "stderr"],
    "spread": ["strategy", "N", "R", "F", "replica_index", "runs", "mean_distance_m", "stderr"],
    "efficiency": ["strategy", "collection", "N", "R", "F", "nodes_visited", "runs", "mean_percent", "stderr"],
}


@dataclass(frozen=True)
class Scenario:
    name: str
    node_counts: tuple[int, ...] = (100,)
    replication_strategies: tuple[str, ...] = ("draco",)
    replication_degrees: tuple[int, ...] = (5,)
    failure_fractions: tuple[float, ...] = (0.0,)
    collection_strategies: tuple[Optional[str], ...] = (None,)
    repetitions: int = 30
    base_seed: int = 0
    overrides: dict = field(default_factory=dict)

    @property
    def sweep_size(self) -> int:
        return (len(self.node_counts) * len(self.replication_strategies) * len(self.replication_degrees)
                * len(self.failure_fractions) * len(self.collection_strategies) * self.repetitions)

    def base_config(self) -> SimConfig:
        return SimConfig().replace(**self.overrides)

    def groups(self) -> list[tuple[str, int, int, int]]:
        """(strategy, N, R, rep) units; each unit covers every F and collection."""
        return [
            (s, n, r, rep)
            for s in self.replication_strategies
            for n in self.node_counts
            for r in self.replication_degrees
            for rep in range(self.repetitions)
        ]

    def config_for(self, strategy: str, n: int, degree: int) -> SimConfig:
        return self.base_config().replace(n_nodes=n, replication_strategy=strategy, replication_degree=degree)

    def validate(self) -> "Scenario":
        if self.repetitions < 1:
            raise ConfigError("sim.repetitions", "must be >= 1")
        for key, fname in LIST_KEYS.items():
            if not getattr(self, fname):
                raise ConfigError(".".join(key), "needs at least one value")
        for s in self.replication_strategies:
            if s not in REPLICATION_STRATEGIES:
                raise ConfigError("replication.strategy", f"unknown strategy {s!r}")
        for c in self.collection_strategies:
            if c is not None and c not in COLLECTION_STRATEGIES:
                raise ConfigError("collection.strategy", f"unknown strategy {c!r}")
        base = self.base_config()
        for n in self.node_counts:
            for r in self.replication_degrees:
                for f in self.failure_fractions:
                    base.replace(n_nodes=n, replication_degree=r, failure_fraction=f).validate()
        return self

    def digest(self) -> str:
        text = self.base_config().digest() + repr(dataclasses.replace(self, overrides={}))
        return hashlib.sha256(text.encode()).hexdigest()[:12]

    @property
    def seeds(self) -> list[int]:
        return [self.base_seed + rep for rep in range(self.repetitions)]


def builtin_scenarios() -> list[Scenario]:
    three = ("draco", "greedy", "random")
    sinks = ("draco", "sa_rw", "rw")
    return [
        Scenario("fig_availability_vs_R", replication_strategies=three,
                 replication_degrees=(2, 3, 4, 5), failure_fractions=(0.2, 0.5, 0.7)),
        Scenario("fig_availability_vs_F", replication_strategies=three, replication_degrees=(5,),
                 failure_fractions=(0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7)),
        Scenario("fig_replicas_vs_density", replication_strategies=three,
                 node_counts=(20, 50, 100, 150, 200)),
        Scenario("fig_replica_spread", replication_strategies=three),
        Scenario("fig_efficiency_vs_R", replication_degrees=(1, 2, 3, 4, 5), collection_strategies=sinks),
        Scenario("fig_efficiency_vs_density", node_counts=(20, 50, 100, 150, 200), collection_strategies=sinks),
        Scenario("fig_efficiency_vs_F", failure_fractions=(0.1, 0.2, 0.5, 0.7), collection_strategies=sinks),
        Scenario("smoke", node_counts=(30,), replication_strategies=three, replication_degrees=(3,),
                 failure_fractions=(0.0, 0.5), collection_strategies=sinks, repetitions=2),
    ]


def get_scenario(name: str) -> Scenario:
    for s in builtin_scenarios():
        if s.name == name:
            return s
    raise KeyError(name)


def _split_list(section: str, key: str, text: str) -> list:
    values = []
    for part in text.split(","):
        _, v = parse_value(section, key, part)
        values.append(v)
    return values


def scenario_from_text(text: str, default_name: str = "scenario") -> Scenario:
    parser = read_sections(text, extra={"sim": SIM_KEYS})
    lists, overrides = {}, {}
    name, reps, base_seed = default_name, 30, 0
    for section in parser.sections():
        for key, value in parser[section].items():
            if section == "sim" and key in SIM_KEYS:
                try:
                    if key == "name":
                        name = value.strip()
                    elif key == "repetitions":
                        reps = int(value)
                    else:
                        base_seed = int(value)
                except ValueError:
                    raise ConfigError(f"sim.{key}", f"cannot parse {value!r}") from None
            elif (section, key) in LIST_KEYS:
                lists[LIST_KEYS[(section, key)]] = tuple(_split_list(section, key, value))
            else:
                fname, parsed = parse_value(section, key, value)
                overrides[fname] = parsed
    scenario = Scenario(name, repetitions=reps, base_seed=base_seed, overrides=overrides, **lists)
    return scenario.validate()


def load_scenario(name_or_path: str) -> Scenario:
    """A builtin preset name, or a path to a scenario file."""
    path = Path(name_or_path)
    if path.is_file():
        return scenario_from_text(path.read_text(), default_name=path.stem)
    try:
        return get_scenario(name_or_path)
    except KeyError:
        names = ", ".join(s.name for s in builtin_scenarios())
        raise ConfigError("scenario", f"{name_or_path!r} is neither a file nor a preset ({names})") from None


def _run_group(args) -> dict[str, list[tuple]]:
    scenario, (strategy, n, degree, rep), backend = args
    seed = scenario.base_seed + rep
    cfg = scenario.config_for(strategy, n, degree)
    records = simulate_fractions(cfg, seed, scenario.failure_fractions, scenario.collection_strategies, backend)
    rows = defaultdict(list)
    first_sink = scenario.collection_strategies[0]
    for (f, sink), record in records.items():
        m = compute_metrics(record)
        key = (strategy, n, degree, float(f), seed)
        if sink == first_sink:
            rows["availability"].append((*key, m.data_availability))
            rows["replicas"].append((*key, m.average_replicas))
            for k, dist, count in m.replica_spread:
                rows["spread"].append((*key, k, dist, count))
        if sink is not None:
            for visits, pct in m.efficiency_curve:
                rows["efficiency"].append((strategy, sink, n, degree, float(f), seed, visits, pct))
    return dict(rows)


@dataclass
class ScenarioResult:
    scenario: Scenario
    raw: dict[str, list[tuple]]
    aggregate: dict[str, list[tuple]]

    @property
    def runs(self) -> int:
        return self.scenario.sweep_size


def _mean_se(values: Sequence[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    if arr.size < 2:
        return float(arr.mean()), 0.0
    return float(arr.mean()), float(arr.std(ddof=1) / math.sqrt(arr.size))


def aggregate(raw: dict[str, list[tuple]]) -> dict[str, list[tuple]]:
    out = {}
    for metric in ("availability", "replicas"):
        by = defaultdict(list)
        for strategy, n, r, f, _seed, value in raw.get(metric, []):
            by[(strategy, n, r, f)].append(value)
        out[metric] = [(*k, len(v), *_mean_se(v)) for k, v in sorted(by.items())]

    by = defaultdict(list)
    for strategy, n, r, f, _seed, k, dist, _count in raw.get("spread", []):
        by[(strategy, n, r, f, k)].append(dist)
    out["spread"] = [(*k, len(v), *_mean_se(v)) for k, v in sorted(by.items())]

    # curves have different lengths per seed; each is held at its last value
    curves = defaultdict(lambda: defaultdict(list))
    for strategy, sink, n, r, f, seed, visits, pct in raw.get("efficiency", []):
        curves[(strategy, sink, n, r, f)][seed].append((visits, pct))
    rows = []
    for key in sorted(curves):
        per_seed = list(curves[key].values())
        longest = max(c[-1][0] for c in per_seed)
        for v in range(1, longest + 1):
            rows.append((*key, v, len(per_seed), *_mean_se([curve_value_at(c, v) for c in per_seed])))
    out["efficiency"] = rows
    return out


def run_scenario(scenario: Scenario, out_dir: Path | str | None = None, jobs: int = 1,
                 backend: str | None = None) -> ScenarioResult:
    """Run every sweep point and repetition; write raw and ``*_mean`` CSVs
    into ``out_dir`` when given. Output is independent of ``jobs``."""
    scenario.validate()
    tasks = [(scenario, g, backend) for g in scenario.groups()]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_run_group, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        parts = [_run_group(t) for t in tasks]
    raw = {metric: [] for metric in SCHEMAS}
    for part in parts:
        for metric, rows in part.items():
            raw[metric].extend(rows)
    for metric in raw:
        raw[metric].sort()
    result = ScenarioResult(scenario, raw, aggregate(raw))
    if out_dir is not None:
        write_scenario(result, Path(out_dir))
    return result


def write_scenario(result: ScenarioResult, out_dir: Path) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    head = provenance_lines(result.scenario.digest(), result.scenario.seeds, __version__)
    head = [f"# scenario={result.scenario.name}", *head]
    written = []
    for metric, columns in SCHEMAS.items():
        if metric == "efficiency" and result.scenario.collection_strategies == (None,):
            continue
        for suffix, cols, rows in (("", columns, result.raw[metric]),
                                   ("_mean", AGGREGATE_SCHEMAS[metric], result.aggregate[metric])):
            path = out_dir / f"{metric}{suffix}.csv"
            write_csv(path, cols, rows, head)
            written.append(path)
    return written


def default_jobs() -> int:
    return os.cpu_count() or 1
