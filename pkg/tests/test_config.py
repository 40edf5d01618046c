import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iwcsim.config import (
    ConfigError,
    ScenarioConfig,
    emit_scenario,
    parse_scenario,
    parse_scenario_text,
    to_dict,
)


def test_empty_file_gives_defaults():
    assert to_dict(parse_scenario_text("")) == to_dict(ScenarioConfig())


def test_table_defaults():
    cfg = ScenarioConfig()
    assert cfg.simulation.dt == 0.1
    assert cfg.decision.gap_range == [3.0, 8.0]
    assert cfg.decision.gap_min == 2.0
    assert cfg.decision.wt_const == 1.0
    assert cfg.decision.dist_c_range == [30.0, 60.0]
    assert cfg.decision.sp_f == 3.0
    assert cfg.decision.ttc_noise_th == 0.3
    assert cfg.pedestrians.crossing_pct == 50.0
    assert cfg.geometry.road_max_s == 13.89
    assert cfg.pedestrians.type_pct == {"adult": 89.0, "child": 1.0, "elderly": 10.0}
    assert cfg.pedestrians.trait_pct == {"conservative": 40.0, "aggressive": 40.0, "average": 20.0}
    assert cfg.pedestrians.law_pct == {"violating": 40.0, "obedient": 40.0, "average": 20.0}
    assert cfg.pedestrians.speed_mean == {"adult": 1.51, "child": 1.48, "elderly": 1.25}
    assert cfg.pedestrians.speed_std == 0.14
    assert cfg.vehicles.period == 2.0
    cfg.validate()


def test_gap_range_order_error():
    with pytest.raises(ConfigError, match="gap_range.min < gap_range.max required") as exc:
        parse_scenario_text("decision:\n  gap_range: [8, 3]\n")
    assert exc.value.key == "decision.gap_range"
    assert exc.value.line == 2


def test_percentages_must_sum_to_100():
    with pytest.raises(ConfigError, match="trait_pct") as exc:
        parse_scenario_text("pedestrians:\n  trait_pct: {aggressive: 60, average: 50}\n")
    assert "110" in str(exc.value)
    assert exc.value.line == 2


@pytest.mark.parametrize(
    "text, key",
    [
        ("pedestrians:\n  cout: 3\n", "pedestrians.cout"),
        ("decision:\n  ttc_method: magic\n", "decision.ttc_method"),
        ("simulation:\n  steps: ten\n", "simulation.steps"),
        ("geometry:\n  lane_width: -1\n", "geometry.lane_width"),
        ("vehicles:\n  mix: {tank: 100}\n", "vehicles.mix"),
        ("decision:\n  sight_distance: 0\n", "decision.sight_distance"),
    ],
)
def test_errors_name_the_key(text, key):
    with pytest.raises(ConfigError) as exc:
        parse_scenario_text(text)
    assert exc.value.key == key
    assert exc.value.line is not None


def test_malformed_yaml_reports_line():
    with pytest.raises(ConfigError, match="malformed") as exc:
        parse_scenario_text("a: [1, 2\nb: 3\n")
    assert exc.value.line is not None


def test_parse_file(tmp_path):
    p = tmp_path / "s.yaml"
    p.write_text("vehicles:\n  period: 6\n", encoding="utf-8")
    assert parse_scenario(p).vehicles.period == 6.0


def test_replace_dotted():
    cfg = ScenarioConfig().replace(**{"decision.ttc_method": "constant", "vehicles.mix.bus": 0.0})
    assert cfg.decision.ttc_method == "constant"
    assert cfg.vehicles.mix["bus"] == 0.0
    assert ScenarioConfig().decision.ttc_method == "dynamic"
    with pytest.raises(ConfigError):
        ScenarioConfig().replace(**{"decision.nope": 1})


@settings(max_examples=60, deadline=None)
@given(
    period=st.floats(0.5, 20, allow_nan=False),
    count=st.integers(0, 500),
    method=st.sampled_from(["constant", "average", "dynamic", "dynamic_adj", "dynamic_adj_noise"]),
    agg=st.integers(0, 100),
    gap=st.tuples(st.floats(0.5, 4), st.floats(4.5, 10)),
    seed=st.integers(0, 2**31 - 1),
)
def test_round_trip(period, count, method, agg, gap, seed):
    cfg = ScenarioConfig()
    cfg.vehicles.period = period
    cfg.pedestrians.count = count
    cfg.decision.ttc_method = method
    cfg.pedestrians.trait_pct = {"aggressive": float(agg), "average": float(100 - agg)}
    cfg.decision.gap_range = list(gap)
    cfg.simulation.seed = seed
    cfg.validate()
    again = parse_scenario_text(emit_scenario(cfg))
    assert to_dict(again) == to_dict(cfg)
    assert emit_scenario(again) == emit_scenario(cfg)
