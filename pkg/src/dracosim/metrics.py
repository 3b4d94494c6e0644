"""The four performance metrics, computed from a finished run.

CSV schemas (one row per run, or per run and index/visit for the list-valued
metrics)::

    availability.csv  strategy,N,R,F,seed,value
    replicas.csv      strategy,N,R,F,seed,value
    spread.csv        strategy,N,R,F,seed,replica_index,mean_distance_m,count
    efficiency.csv    strategy,collection,N,R,F,seed,nodes_visited,percent_collected

Every file starts with ``#`` provenance comment lines.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .collection import CollectionTrace
from .core import ReplicaLedger
from .failure import FailurePlan
from .topology import NodeLayout

SCHEMAS = {
    "availability": ["strategy", "N", "R", "F", "seed", "value"],
    "replicas": ["strategy", "N", "R", "F", "seed", "value"],
    "spread": ["strategy", "N", "R", "F", "seed", "replica_index", "mean_distance_m", "count"],
    "efficiency": ["strategy", "collection", "N", "R", "F", "seed", "nodes_visited", "percent_collected"],
}


@dataclass
class MetricsReport:
    data_availability: float
    average_replicas: float
    replica_spread: list[tuple[int, float, int]]
    efficiency_curve: list[tuple[int, float]] = field(default_factory=list)
    total_unique: int = 0
    replicas_defined: bool = True


def data_availability(ledger: ReplicaLedger, failure_plan: FailurePlan, total_unique: int | None = None) -> float:
    """Fraction of generated items with a copy on a node that survives every
    planned failure. Items never stored anywhere count as unavailable."""
    total = ledger.total_items if total_unique is None else total_unique
    if total == 0:
        return 1.0
    if ledger.total_placements == 0:
        return 0.0
    items = np.asarray(ledger.p_item, dtype=np.int64)
    holders = np.asarray(ledger.p_holder, dtype=np.int64)
    dead = np.zeros(int(holders.max()) + 1, dtype=bool)
    for v in failure_plan.victims:
        if v < dead.size:
            dead[v] = True
    survivors = items[~dead[holders]]
    available = np.unique(survivors).size
    return available / total


def average_replicas(ledger: ReplicaLedger, total_unique: int | None = None) -> float:
    """Placements per generated item (0.0 when nothing was generated)."""
    total = ledger.total_items if total_unique is None else total_unique
    if total == 0:
        return 0.0
    return ledger.total_placements / total


def replica_spread(ledger: ReplicaLedger, layout: NodeLayout) -> list[tuple[int, float, int]]:
    """Per replica index k: (k, mean owner-to-holder distance, number of items with a k-th copy)."""
    if ledger.total_placements == 0:
        return []
    pts = np.zeros((max(layout.ids) + 1, 2))
    for i, p in layout.positions.items():
        pts[i] = p
    owner = np.asarray(ledger.owner, dtype=np.int64)[np.asarray(ledger.p_item, dtype=np.int64)]
    holder = np.asarray(ledger.p_holder, dtype=np.int64)
    index = np.asarray(ledger.p_index, dtype=np.int64)
    d = np.hypot(*(pts[owner] - pts[holder]).T)
    out = []
    for k in range(1, int(index.max()) + 1):
        sel = index == k
        out.append((k, float(d[sel].mean()), int(sel.sum())))
    return out


def collection_efficiency(trace: CollectionTrace, total_unique: int) -> list[tuple[int, float]]:
    """(productive visits so far, percent of all generated items collected)."""
    if total_unique <= 0:
        return []
    curve = []
    visits = 0
    for e in trace.entries:
        if e.selected_node is None:
            continue
        visits += 1
        curve.append((visits, 100.0 * e.cumulative_unique / total_unique))
    return curve


def compute_metrics(record) -> MetricsReport:
    ledger = record.ledger
    total = ledger.total_items
    return MetricsReport(
        data_availability=data_availability(ledger, record.plan, total),
        average_replicas=average_replicas(ledger, total),
        replica_spread=replica_spread(ledger, record.layout),
        efficiency_curve=collection_efficiency(record.collection, total),
        total_unique=total,
        replicas_defined=total > 0,
    )


def curve_value_at(curve: Sequence[tuple[int, float]], visits: int) -> float:
    """Curve value after ``visits`` productive visits, holding the last value."""
    value = 0.0
    for v, pct in curve:
        if v > visits:
            break
        value = pct
    return value


def provenance_lines(config_hash: str, seeds: Iterable[int], version: str) -> list[str]:
    seeds = sorted(set(seeds))
    if len(seeds) > 8:
        shown = f"{seeds[0]}..{seeds[-1]} ({len(seeds)} seeds)"
    else:
        shown = " ".join(str(s) for s in seeds)
    return [f"# config_hash={config_hash}", f"# seeds={shown}", f"# dracosim={version}"]


def render_csv(columns: Sequence[str], rows: Iterable[Sequence], provenance: Sequence[str] = ()) -> str:
    out = io.StringIO()
    for line in provenance:
        out.write(line + "\n")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return out.getvalue()


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Sequence], provenance: Sequence[str] = ()) -> None:
    Path(path).write_text(render_csv(columns, rows, provenance))


def read_csv(path: Path) -> list[dict[str, str]]:
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))
