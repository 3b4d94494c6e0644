"""Command-line entry point.

    dracosim run --config default --seed 42 --out ./r
    dracosim sweep fig_availability_vs_R --jobs 8 --out ./sweep
    dracosim validate quick
    dracosim trace --config default --seed 1 --out events.txt

Exit codes: 0 success, 1 configuration or usage error, 2 invariant violation.
"""

from __future__ import annotations

import argparse
import itertools
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, SimConfig, config_to_text, load_config
from .experiments import builtin_scenarios, default_jobs, load_scenario, run_scenario
from .invariants import check_record
from .kernel import BACKENDS
from .metrics import SCHEMAS, compute_metrics, provenance_lines, write_csv
from .runner import simulate

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT = 0, 1, 2


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for invariant failures here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = Parser(prog="dracosim", description="Replication and mobile-sink collection simulator.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=Parser)

    run = sub.add_parser("run", help="one simulation; writes metric CSVs")
    run.add_argument("--config", default="default", help="'default' or a config file")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--out", type=Path, default=Path("run_out"))
    run.add_argument("--force", action="store_true", help="overwrite existing output")
    run.add_argument("--verbose", action="store_true", help="also dump the event trace")
    run.add_argument("--backend", choices=BACKENDS, default=None)

    sweep = sub.add_parser("sweep", help="run a scenario preset or scenario file")
    sweep.add_argument("scenario", help="preset name or scenario file")
    sweep.add_argument("--out", type=Path, default=None, help="default: ./<scenario name>")
    sweep.add_argument("--jobs", type=int, default=default_jobs())
    sweep.add_argument("--force", action="store_true")
    sweep.add_argument("--verbose", action="store_true")
    sweep.add_argument("--backend", choices=BACKENDS, default=None)

    val = sub.add_parser("validate", help="invariant suite on small worlds")
    val.add_argument("level", nargs="?", choices=("quick", "full"), default="quick")
    val.add_argument("--verbose", action="store_true")

    tr = sub.add_parser("trace", help="write the event trace of one run")
    tr.add_argument("--config", default="default")
    tr.add_argument("--seed", type=int, default=0)
    tr.add_argument("--out", type=Path, default=Path("trace.txt"))
    tr.add_argument("--force", action="store_true")
    tr.add_argument("--backend", choices=BACKENDS, default=None)

    sub.add_parser("scenarios", help="list the builtin presets")
    return p


def _claim_dir(path: Path, force: bool) -> None:
    if path.exists() and any(path.iterdir()) and not force:
        raise UsageError(f"{path} exists and is not empty (use --force to overwrite)")
    path.mkdir(parents=True, exist_ok=True)


def _claim_file(path: Path, force: bool) -> None:
    if path.exists() and not force:
        raise UsageError(f"{path} exists (use --force to overwrite)")
    path.parent.mkdir(parents=True, exist_ok=True)


def _invariant_failure(config: SimConfig, seed: int, problems: list[str], out: Path | None) -> int:
    print(f"invariant violated (seed={seed}, config_hash={config.digest()}):", file=sys.stderr)
    for line in problems:
        print(f"  {line}", file=sys.stderr)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        dump = out / "failing_seed.txt"
        dump.write_text(f"# seed={seed}\n" + config_to_text(config))
        print(f"failing seed and config written to {dump}", file=sys.stderr)
    return EXIT_INVARIANT


def write_run(record, seed: int, out: Path) -> None:
    cfg = record.config
    m = compute_metrics(record)
    head = provenance_lines(cfg.digest(), [seed], __version__)
    key = (cfg.replication_strategy, cfg.n_nodes, cfg.replication_degree, cfg.failure_fraction, seed)
    write_csv(out / "availability.csv", SCHEMAS["availability"], [(*key, m.data_availability)], head)
    write_csv(out / "replicas.csv", SCHEMAS["replicas"], [(*key, m.average_replicas)], head)
    write_csv(out / "spread.csv", SCHEMAS["spread"], [(*key, *s) for s in m.replica_spread], head)
    if cfg.collection_strategy is not None:
        rows = [(key[0], cfg.collection_strategy, *key[1:], v, p) for v, p in m.efficiency_curve]
        write_csv(out / "efficiency.csv", SCHEMAS["efficiency"], rows, head)
        (out / "collection_trace.csv").write_text("\n".join(head) + "\n" + record.collection.to_csv())
    (out / "config.ini").write_text(config_to_text(cfg))
    if record.trace is not None:
        (out / "events.txt").write_text("\n".join(record.trace) + "\n")


def summary_line(record, seed: int) -> str:
    m = compute_metrics(record)
    cfg = record.config
    parts = [
        f"seed={seed}",
        f"strategy={cfg.replication_strategy}",
        f"N={cfg.n_nodes}",
        f"R={cfg.replication_degree}",
        f"F={cfg.failure_fraction}",
        f"items={m.total_unique}",
        f"availability={m.data_availability:.4f}",
        f"replicas={m.average_replicas:.3f}",
    ]
    if m.efficiency_curve:
        visits, pct = m.efficiency_curve[-1]
        parts.append(f"collected={pct:.1f}%/{visits}")
    return " ".join(parts)


def cmd_run(args) -> int:
    config = load_config(args.config)
    config.validate()
    _claim_dir(args.out, args.force)
    record = simulate(config, args.seed, backend=args.backend, trace=args.verbose)
    problems = check_record(record)
    if problems:
        return _invariant_failure(config, args.seed, problems, args.out)
    write_run(record, args.seed, args.out)
    print(summary_line(record, args.seed))
    return EXIT_OK


def cmd_sweep(args) -> int:
    scenario = load_scenario(args.scenario)
    out = args.out if args.out is not None else Path(scenario.name)
    _claim_dir(out, args.force)
    if args.verbose:
        print(f"{scenario.name}: {scenario.sweep_size} runs, jobs={args.jobs}", file=sys.stderr)
    result = run_scenario(scenario, out, jobs=max(1, args.jobs), backend=args.backend)
    print(f"{scenario.name}: {result.runs} runs -> {out}")
    return EXIT_OK


def validation_cases(level: str):
    quick = level == "quick"
    seeds = range(2) if quick else range(10)
    grid = itertools.product(
        (5, 12) if quick else (5, 12, 30), ("draco", "greedy", "random"), ("draco", "sa_rw", "rw"),
        (0.0, 0.5), ("during", "boundary"),
    )
    for (n, strategy, sink, f, mode), seed in itertools.product(grid, seeds):
        cfg = SimConfig(n_nodes=n, replication_strategy=strategy, replication_degree=3,
                        collection_strategy=sink, failure_fraction=f, failure_mode=mode,
                        buffer_capacity=60 if n == 12 else SimConfig.buffer_capacity)
        yield cfg, seed


def cmd_validate(args) -> int:
    passed = failed = 0
    first = None
    for cfg, seed in validation_cases(args.level):
        records = [simulate(cfg, seed, backend=b, trace=True) for b in BACKENDS]
        problems = check_record(records[0])
        if len(records) > 1 and (records[0].ledger != records[1].ledger or records[0].trace != records[1].trace):
            problems.append("compiled and python backends disagree")
        if problems:
            failed += 1
            first = first or (cfg, seed, problems)
        else:
            passed += 1
        if args.verbose:
            print(f"{'ok  ' if not problems else 'FAIL'} {cfg.digest()} seed={seed}", file=sys.stderr)
    print(f"validate {args.level}: {passed} passed, {failed} failed")
    if first is not None:
        return _invariant_failure(*first, out=None)
    return EXIT_OK


def cmd_trace(args) -> int:
    config = load_config(args.config)
    config.validate()
    _claim_file(args.out, args.force)
    record = simulate(config, args.seed, backend=args.backend, trace=True)
    args.out.write_text("\n".join(record.trace) + "\n")
    print(f"{len(record.trace)} events -> {args.out}")
    return EXIT_OK


def cmd_scenarios(args) -> int:
    for s in builtin_scenarios():
        print(f"{s.name:28s} {s.sweep_size:6d} runs")
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "sweep": cmd_sweep,
    "validate": cmd_validate,
    "trace": cmd_trace,
    "scenarios": cmd_scenarios,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
