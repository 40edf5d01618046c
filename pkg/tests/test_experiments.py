import dataclasses
import math
import statistics

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iwcsim.config import ConfigError, ScenarioConfig
from iwcsim.experiments import (
    SUITES,
    ExperimentResult,
    apply_condition,
    condition_config,
    format_cell,
    get_suite,
    load_custom_suite,
    pooled_stat,
    run_suite,
    suite_files,
    summary_table,
)


def _stats(xs):
    return len(xs), statistics.fmean(xs), statistics.stdev(xs) if len(xs) > 1 else 0.0


samples = st.lists(st.floats(0, 100, allow_nan=False), min_size=0, max_size=30)


@settings(max_examples=200, deadline=None)
@given(groups=st.lists(samples, min_size=1, max_size=6))
def test_pooled_equals_concatenated(groups):
    reps = []
    for g in groups:
        n, m, s = _stats(g) if g else (0, None, None)
        reps.append({"n_wait": n, "mean_wait_s": m, "std_wait_s": s})
    allx = [x for g in groups for x in g]
    mean, std = pooled_stat(reps, "wait_s")
    if not allx:
        assert mean is None and std is None
        return
    n, m, s = _stats(allx)
    assert mean == pytest.approx(m, abs=1e-9)
    assert std == pytest.approx(s, abs=1e-6)


def test_ratio_pooling_weights_by_count():
    reps = [
        {"illegal_crossings": 1, "crossings_completed": 10},
        {"illegal_crossings": 9, "crossings_completed": 30},
        {"illegal_crossings": 0, "crossings_completed": 0},
    ]
    mean, std = pooled_stat(reps, "illegal_pct")
    assert mean == pytest.approx(25.0)
    assert std == pytest.approx(statistics.stdev([10.0, 30.0]))
    assert pooled_stat([{"illegal_crossings": 0, "crossings_completed": 0}], "illegal_pct") == (None, None)


def test_per_run_metric_mean():
    reps = [{"collisions": 2}, {"collisions": 4}, {"collisions": None}]
    assert pooled_stat(reps, "collisions") == (3.0, pytest.approx(math.sqrt(2)))


def test_format_cell():
    assert format_cell(2.345, 0.5) == "2.3 (0.5)"
    assert format_cell(None, None) == "-"


def test_builtin_suite_grids():
    sizes = {name: len(s.conditions()) for name, s in SUITES.items()}
    assert sizes == {"lawobedience_traits": 16, "aggressive_sweep": 50, "ttc_methods": 15, "crossing_patterns": 6}
    agg = SUITES["aggressive_sweep"]
    assert dict(agg.grid)["aggressive_pct"] == (0.0, 25.0, 50.0, 75.0, 100.0)
    assert dict(agg.grid)["period"] == (8.0, 6.0, 5.0, 4.0, 3.0)
    assert agg.replications == 5 and agg.steps == 1000
    assert SUITES["lawobedience_traits"].steps == 2500


def test_get_suite_unknown():
    with pytest.raises(ConfigError, match="available"):
        get_suite("missing")


def test_aggressive_remainder_split():
    cfg = ScenarioConfig()
    apply_condition(cfg, "aggressive_pct", 25.0)
    assert cfg.pedestrians.trait_pct == pytest.approx({"aggressive": 25.0, "conservative": 50.0, "average": 25.0})
    apply_condition(cfg, "aggressive_pct", 100.0)
    assert cfg.pedestrians.trait_pct["aggressive"] == 100.0


def test_condition_variables():
    cfg = ScenarioConfig()
    apply_condition(cfg, "law", "violating")
    apply_condition(cfg, "trait", "random")
    apply_condition(cfg, "pattern", "rolling-gap")
    apply_condition(cfg, "period", 6)
    apply_condition(cfg, "decision.gap_min", 1.5)
    assert cfg.pedestrians.law_pct == {"violating": 100.0}
    assert cfg.pedestrians.trait_pct == ScenarioConfig().pedestrians.trait_pct
    assert cfg.pedestrians.one_stage_pct == 0.0
    assert cfg.vehicles.period == 6.0 and cfg.decision.gap_min == 1.5
    with pytest.raises(ConfigError):
        apply_condition(cfg, "pattern", "leapfrog")


def test_condition_config_applies_base_and_steps():
    s = SUITES["ttc_methods"]
    cfg = condition_config(s, ScenarioConfig(), ("dynamic_adj", 4.0))
    assert cfg.decision.ttc_method == "dynamic_adj"
    assert cfg.pedestrians.law_pct == {"violating": 100.0}
    assert cfg.pedestrians.one_stage_pct == 100.0
    assert cfg.simulation.steps == 1000


def test_select():
    s = SUITES["ttc_methods"].select(ttc_method=["constant"], period=[2.0])
    assert s.conditions() == [("constant", 2.0)]
    with pytest.raises(ConfigError):
        SUITES["ttc_methods"].select(colour=["red"])


@pytest.fixture(scope="module")
def tiny_result():
    s = SUITES["crossing_patterns"].with_base(**{"pedestrians.count": 40})
    s = s.select(period=[4.0])
    s = dataclasses.replace(s, replications=2, steps=80)
    return run_suite(s, seed=7)


def test_common_random_numbers(tiny_result):
    # replication r uses seed + r for every condition
    rows = tiny_result.long_rows()
    assert len(tiny_result.runs) == 4
    assert {r[-3] for r in rows} == {0, 1}
    a = tiny_result.runs[(("rolling-gap", 4.0), 0)]
    b = tiny_result.runs[(("one-stage", 4.0), 0)]
    assert a["pedestrians"] == b["pedestrians"] and a["mean_walking_speed_mps"] == b["mean_walking_speed_mps"]


def test_suite_files(tiny_result):
    files = suite_files(tiny_result)
    assert set(files) == {
        "crossing_patterns.csv", "crossing_patterns_summary.csv", "crossing_patterns_summary.md",
        "crossing_patterns_summary.json",
    }
    header = files["crossing_patterns.csv"].splitlines()[0]
    assert header == "suite,pattern,period,replication,metric,value"
    md = summary_table(tiny_result)
    assert "medium" in md and md.startswith("|")


def test_custom_suite_file(tmp_path):
    p = tmp_path / "g.yaml"
    p.write_text("name: g\ngrid:\n  period: [3, 5]\n  decision.gap_min: [1.0]\nreplications: 3\n", encoding="utf-8")
    suite, base = load_custom_suite(p)
    assert suite.name == "g" and suite.replications == 3
    assert suite.conditions() == [(3, 1.0), (5, 1.0)]
    p.write_text("grid:\n  period: []\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_custom_suite(p)
    p.write_text("grid:\n  period: [2]\nextra: 1\n", encoding="utf-8")
    with pytest.raises(ConfigError, match="unknown keys"):
        load_custom_suite(p)


def test_experiment_result_is_plain_data(tiny_result):
    assert isinstance(tiny_result, ExperimentResult)
    summ = tiny_result.summary()
    assert [e["pattern"] for e in summ] == ["rolling-gap", "one-stage"]
    assert all(e["replications"] == 2 for e in summ)
