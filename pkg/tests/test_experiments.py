import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dracosim import SimConfig
from dracosim.config import ConfigError
from dracosim.experiments import (
    Scenario,
    builtin_scenarios,
    get_scenario,
    load_scenario,
    run_scenario,
    scenario_from_text,
)
from dracosim.metrics import compute_metrics
from dracosim.runner import simulate, simulate_fractions

TINY = dict(duration=60.0)


def tiny(**kw):
    base = dict(name="tiny", node_counts=(15,), replication_strategies=("draco",), replication_degrees=(3,),
                failure_fractions=(0.0, 0.4), collection_strategies=("draco", "rw"), repetitions=2,
                overrides=TINY)
    base.update(kw)
    return Scenario(**base)


def test_eight_presets():
    names = [s.name for s in builtin_scenarios()]
    assert len(names) == 8 and len(set(names)) == 8
    for s in builtin_scenarios():
        s.validate()


def test_availability_vs_r_size():
    # 3 strategies x 4 degrees x 3 fractions x 30 runs
    assert get_scenario("fig_availability_vs_R").sweep_size == 1080


def test_density_and_fraction_presets():
    assert get_scenario("fig_replicas_vs_density").node_counts == (20, 50, 100, 150, 200)
    assert get_scenario("fig_efficiency_vs_F").failure_fractions == (0.1, 0.2, 0.5, 0.7)
    assert get_scenario("fig_efficiency_vs_R").replication_degrees == (1, 2, 3, 4, 5)


def test_single_point_single_run():
    s = tiny(failure_fractions=(0.0,), collection_strategies=(None,), repetitions=1)
    result = run_scenario(s)
    assert result.runs == 1
    assert len(result.raw["availability"]) == 1
    assert result.raw["efficiency"] == []


def test_rows_match_direct_simulation():
    s = tiny()
    result = run_scenario(s)
    cfg = s.config_for("draco", 15, 3).replace(failure_fraction=0.4, collection_strategy="rw")
    m = compute_metrics(simulate(cfg, s.base_seed + 1))
    assert ("draco", 15, 3, 0.4, 1, m.data_availability) in result.raw["availability"]
    rw = [r[-2:] for r in result.raw["efficiency"] if r[1] == "rw" and r[4] == 0.4 and r[5] == 1]
    assert rw == m.efficiency_curve


def test_shared_dissemination_equals_separate_runs():
    cfg = SimConfig(n_nodes=20, duration=50.0)
    shared = simulate_fractions(cfg, 5, (0.0, 0.3, 0.6), ("draco", "sa_rw"))
    for (f, c), rec in shared.items():
        alone = simulate(cfg.replace(failure_fraction=f, collection_strategy=c), 5)
        assert rec.ledger == alone.ledger
        assert rec.collection == alone.collection


def test_csvs_identical_on_rerun(tmp_path):
    run_scenario(tiny(), tmp_path / "a")
    run_scenario(tiny(), tmp_path / "b")
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert "efficiency_mean.csv" in names and len(names) == 8
    for name in names:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_output_independent_of_jobs(tmp_path):
    run_scenario(tiny(), tmp_path / "one", jobs=1)
    run_scenario(tiny(), tmp_path / "two", jobs=2)
    for p in (tmp_path / "one").iterdir():
        assert p.read_bytes() == (tmp_path / "two" / p.name).read_bytes()


def test_no_efficiency_files_without_sink(tmp_path):
    run_scenario(tiny(collection_strategies=(None,), repetitions=1), tmp_path)
    assert not (tmp_path / "efficiency.csv").exists()


def test_aggregate_means():
    result = run_scenario(tiny())
    for strategy, n, r, f, runs, mean, se in result.aggregate["availability"]:
        vals = [row[-1] for row in result.raw["availability"] if row[3] == f]
        assert runs == 2 and mean == pytest.approx(sum(vals) / 2)


SCENARIO_TEXT = """
[sim]
name = mine
repetitions = 3
base_seed = 7
duration = 80

[nodes]
count = 20, 40
alpha = 15

[replication]
strategy = draco, random
degree = 2, 3

[failure]
fraction = 0.1, 0.5

[collection]
strategy = none
"""


def test_scenario_file_parse(tmp_path):
    s = scenario_from_text(SCENARIO_TEXT)
    assert s.name == "mine" and s.repetitions == 3 and s.base_seed == 7
    assert s.node_counts == (20, 40)
    assert s.replication_strategies == ("draco", "random")
    assert s.failure_fractions == (0.1, 0.5)
    assert s.collection_strategies == (None,)
    assert s.overrides == {"alpha": 15.0, "duration": 80.0}
    assert s.seeds == [7, 8, 9]
    assert s.sweep_size == 2 * 2 * 2 * 2 * 3
    path = tmp_path / "mine.ini"
    path.write_text(SCENARIO_TEXT)
    assert load_scenario(str(path)) == s


@pytest.mark.parametrize("section,line,key", [
    ("nodes", "count = 20, abc", "nodes.count"),
    ("replication", "strategy = draco, best", "replication.strategy"),
    ("failure", "fraction = 0.2, 1.5", "failure.fraction"),
    ("sim", "repetitions = 0", "sim.repetitions"),
    ("nodes", "colour = red", "nodes.colour"),
])
def test_scenario_errors_name_the_key(section, line, key):
    with pytest.raises(ConfigError) as err:
        scenario_from_text(f"[{section}]\n{line}\n")
    assert key in str(err.value)


def test_unknown_scenario_name():
    with pytest.raises(ConfigError):
        load_scenario("no_such_preset")


@settings(max_examples=5)
@given(st.permutations(["draco", "greedy", "random"]))
def test_listing_order_does_not_change_results(order):
    a = run_scenario(tiny(replication_strategies=tuple(order), collection_strategies=(None,), repetitions=1))
    b = run_scenario(tiny(replication_strategies=("draco", "greedy", "random"),
                          collection_strategies=(None,), repetitions=1))
    assert a.raw == b.raw and a.aggregate == b.aggregate
