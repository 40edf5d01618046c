"""Scenario configuration: dataclass tree, YAML parsing with line-aware errors, emission."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, get_type_hints

import yaml

PED_TYPES = ("adult", "child", "elderly")
PED_TRAITS = ("aggressive", "average", "conservative")
LAW_STATUSES = ("obedient", "violating", "average")
VEH_TYPES = ("passenger", "bus", "bicycle", "truck", "motorcycle")
TRANSIT_MODES = ("walk", "drive", "bus", "taxi")
TTC_METHODS = ("constant", "average", "dynamic", "dynamic_adj", "dynamic_adj_noise")


class ConfigError(ValueError):
    """Invalid scenario configuration. Carries the offending key and, if known, the line."""

    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        self.message = message
        self.key = key
        self.line = line
        where = ""
        if key is not None:
            where += f"{key}: "
        if line is not None:
            where = f"line {line}: " + where
        super().__init__(where + message)


@dataclass
class GeometryConfig:
    horizontal_nodes: int = 9
    vertical_nodes: int = 7
    node_spacing: float = 30.0
    lanes_per_direction: int = 2
    lane_width: float = 3.5
    sidewalk_width: float = 3.0
    road_max_s: float = 13.89
    one_way: bool = False
    # crosswalks on each arm, as node counts away from the intersection (or road centre)
    crosswalk_nodes: list[int] = field(default_factory=lambda: [2])
    center_crosswalk: bool = True
    crosswalk_width: float = 4.0
    signalized: bool = True


@dataclass
class SignalConfig:
    vehicle_green: float = 30.0
    clearance: float = 3.0
    pedestrian_green: float = 27.0
    offset: float = 0.0


@dataclass
class VehicleConfig:
    period: float = 2.0
    mix: dict[str, float] = field(
        default_factory=lambda: {"passenger": 30.0, "bus": 20.0, "bicycle": 30.0, "truck": 11.0, "motorcycle": 1.0}
    )
    signal_distance: float = 30.0
    sight_distance: float = 60.0
    turn_speed: float = 6.0
    headway: float = 2.0
    min_gap: float = 2.0
    # speed at release (0 = standing start); capped by the lane limit and the gap ahead
    depart_speed: float = 0.0
    # per-type overrides of the shipped defaults table, e.g. {"bus": {"max_speed": 20.0}}
    types: dict[str, dict[str, float]] = field(default_factory=dict)


@dataclass
class PedestrianConfig:
    count: int = 400
    initial: int = 0
    departure_period: float = 0.2
    type_pct: dict[str, float] = field(default_factory=lambda: {"adult": 89.0, "child": 1.0, "elderly": 10.0})
    trait_pct: dict[str, float] = field(
        default_factory=lambda: {"conservative": 40.0, "aggressive": 40.0, "average": 20.0}
    )
    law_pct: dict[str, float] = field(default_factory=lambda: {"violating": 40.0, "obedient": 40.0, "average": 20.0})
    speed_mean: dict[str, float] = field(default_factory=lambda: {"adult": 1.51, "child": 1.48, "elderly": 1.25})
    speed_std: float = 0.14
    crossing_pct: float = 50.0
    one_stage_pct: float = 50.0
    go_around_pct: float = 50.0
    mode_weights: dict[str, float] = field(
        default_factory=lambda: {"walk": 0.85, "drive": 0.05, "bus": 0.05, "taxi": 0.05}
    )
    mode_speed: dict[str, float] = field(default_factory=lambda: {"drive": 10.0, "bus": 8.0, "taxi": 10.0})
    activity_probability: float = 0.005
    activity_duration: list[float] = field(default_factory=lambda: [5.0, 30.0])
    child_scale: float = 0.6


@dataclass
class DecisionConfig:
    gap_range: list[float] = field(default_factory=lambda: [3.0, 8.0])
    gap_min: float = 2.0
    wt_const: float = 1.0
    dist_c_range: list[float] = field(default_factory=lambda: [30.0, 60.0])
    sp_f: float = 3.0
    ttc_method: str = "dynamic"
    ttc_noise_th: float = 0.3
    signalized_only: bool = True
    jaywalk_radius: float = 15.0
    yield_ttc: float = 3.0
    # how far along its path a vehicle can be and still be judged by a pedestrian (m)
    sight_distance: float = 100.0


@dataclass
class SimulationConfig:
    steps: int = 1000
    dt: float = 0.1
    seed: int = 0
    replications: int = 1
    vehicle_trace: bool = False
    ttc_trace: bool = False
    ped_trace: bool = False


@dataclass
class ScenarioConfig:
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    signals: SignalConfig = field(default_factory=SignalConfig)
    vehicles: VehicleConfig = field(default_factory=VehicleConfig)
    pedestrians: PedestrianConfig = field(default_factory=PedestrianConfig)
    decision: DecisionConfig = field(default_factory=DecisionConfig)
    simulation: SimulationConfig = field(default_factory=SimulationConfig)

    def validate(self) -> "ScenarioConfig":
        validate(self)
        return self

    def replace(self, **dotted: Any) -> "ScenarioConfig":
        """Copy with dotted-path overrides, e.g. ``replace(**{"decision.ttc_method": "constant"})``."""
        cfg = copy_config(self)
        for path, value in dotted.items():
            set_path(cfg, path, value)
        return cfg


def copy_config(cfg: ScenarioConfig) -> ScenarioConfig:
    return from_dict(to_dict(cfg))


def set_path(cfg: Any, path: str, value: Any) -> None:
    parts = path.split(".")
    obj = cfg
    for p in parts[:-1]:
        if not hasattr(obj, p):
            raise ConfigError("unknown key", key=path)
        obj = getattr(obj, p)
    last = parts[-1]
    if dataclasses.is_dataclass(obj):
        if last not in {f.name for f in dataclasses.fields(obj)}:
            raise ConfigError("unknown key", key=path)
        setattr(obj, last, value)
    elif isinstance(obj, dict):
        obj[last] = value
    else:
        raise ConfigError("cannot set into a scalar", key=path)


# ---------------------------------------------------------------- validation


def _check_pct(vec: dict[str, float], allowed: tuple[str, ...], key: str) -> None:
    unknown = set(vec) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown categories {sorted(unknown)}", key=key)
    if any(v < 0 for v in vec.values()):
        raise ConfigError("percentages must be non-negative", key=key)
    total = sum(vec.values())
    if abs(total - 100.0) > 1e-6:
        raise ConfigError(f"percentages must sum to 100 (got {total:g})", key=key)


def _positive(value: float, key: str) -> None:
    if not value > 0:
        raise ConfigError(f"must be > 0 (got {value!r})", key=key)


def validate(cfg: ScenarioConfig) -> None:
    g = cfg.geometry
    for name in ("node_spacing", "lane_width", "sidewalk_width", "road_max_s", "crosswalk_width"):
        _positive(getattr(g, name), f"geometry.{name}")
    if g.lanes_per_direction < 1:
        raise ConfigError("must be >= 1", key="geometry.lanes_per_direction")
    if g.horizontal_nodes < 2:
        raise ConfigError("node count must be >= 2", key="geometry.horizontal_nodes")
    if g.vertical_nodes == 1 or g.vertical_nodes < 0:
        raise ConfigError("node count must be 0 (no road) or >= 2", key="geometry.vertical_nodes")

    s = cfg.signals
    for name in ("vehicle_green", "clearance", "pedestrian_green"):
        if getattr(s, name) < 0:
            raise ConfigError("must be >= 0", key=f"signals.{name}")
    if s.vehicle_green + s.clearance + s.pedestrian_green <= 0:
        raise ConfigError("cycle length must be > 0", key="signals")

    v = cfg.vehicles
    _positive(v.period, "vehicles.period")
    unknown = set(v.mix) - set(VEH_TYPES)
    if unknown:
        raise ConfigError(f"unknown vehicle types {sorted(unknown)}", key="vehicles.mix")
    if any(x < 0 for x in v.mix.values()) or sum(v.mix.values()) <= 0:
        raise ConfigError("weights must be non-negative and not all zero", key="vehicles.mix")
    for name in ("signal_distance", "sight_distance", "turn_speed", "headway"):
        _positive(getattr(v, name), f"vehicles.{name}")
    if v.depart_speed < 0:
        raise ConfigError("must be >= 0", key="vehicles.depart_speed")
    for vt, over in v.types.items():
        if vt not in VEH_TYPES:
            raise ConfigError(f"unknown vehicle type {vt!r}", key="vehicles.types")
        for k, x in over.items():
            if k not in ("length", "width", "max_speed", "accel", "decel", "emergency_decel"):
                raise ConfigError(f"unknown vehicle parameter {k!r}", key=f"vehicles.types.{vt}")
            _positive(x, f"vehicles.types.{vt}.{k}")

    p = cfg.pedestrians
    if p.count < 0 or p.initial < 0:
        raise ConfigError("must be >= 0", key="pedestrians.count")
    if p.departure_period < 0:
        raise ConfigError("must be >= 0", key="pedestrians.departure_period")
    _check_pct(p.type_pct, PED_TYPES, "pedestrians.type_pct")
    _check_pct(p.trait_pct, PED_TRAITS, "pedestrians.trait_pct")
    _check_pct(p.law_pct, LAW_STATUSES, "pedestrians.law_pct")
    for t in PED_TYPES:
        if t not in p.speed_mean:
            raise ConfigError(f"missing type {t!r}", key="pedestrians.speed_mean")
        _positive(p.speed_mean[t], f"pedestrians.speed_mean.{t}")
    _positive(p.speed_std, "pedestrians.speed_std")
    for name in ("crossing_pct", "one_stage_pct", "go_around_pct"):
        x = getattr(p, name)
        if not 0 <= x <= 100:
            raise ConfigError("must lie in [0, 100]", key=f"pedestrians.{name}")
    if set(p.mode_weights) - set(TRANSIT_MODES):
        raise ConfigError("unknown transit mode", key="pedestrians.mode_weights")
    if any(w < 0 for w in p.mode_weights.values()) or sum(p.mode_weights.values()) <= 0:
        raise ConfigError("weights must be non-negative and not all zero", key="pedestrians.mode_weights")
    if not 0 <= p.activity_probability <= 1:
        raise ConfigError("must lie in [0, 1]", key="pedestrians.activity_probability")
    if len(p.activity_duration) != 2 or not 0 <= p.activity_duration[0] <= p.activity_duration[1]:
        raise ConfigError("must be [min, max] with 0 <= min <= max", key="pedestrians.activity_duration")

    d = cfg.decision
    if len(d.gap_range) != 2 or not d.gap_range[0] < d.gap_range[1]:
        raise ConfigError("gap_range.min < gap_range.max required", key="decision.gap_range")
    if len(d.dist_c_range) != 2 or not 0 <= d.dist_c_range[0] <= d.dist_c_range[1]:
        raise ConfigError("dist_c_range must be [min, max] with 0 <= min <= max", key="decision.dist_c_range")
    if d.gap_min < 0:
        raise ConfigError("must be >= 0", key="decision.gap_min")
    if d.wt_const < 0:
        raise ConfigError("must be >= 0", key="decision.wt_const")
    _positive(d.sp_f, "decision.sp_f")
    if d.ttc_method not in TTC_METHODS:
        raise ConfigError(f"unknown TTC method {d.ttc_method!r}; expected one of {TTC_METHODS}", key="decision.ttc_method")
    if d.ttc_noise_th < 0:
        raise ConfigError("must be >= 0", key="decision.ttc_noise_th")
    if d.jaywalk_radius < 0:
        raise ConfigError("must be >= 0", key="decision.jaywalk_radius")
    if d.yield_ttc < 0:
        raise ConfigError("must be >= 0", key="decision.yield_ttc")
    _positive(d.sight_distance, "decision.sight_distance")

    sim = cfg.simulation
    if sim.steps < 0:
        raise ConfigError("must be >= 0", key="simulation.steps")
    _positive(sim.dt, "simulation.dt")
    if sim.replications < 1:
        raise ConfigError("must be >= 1", key="simulation.replications")


# ---------------------------------------------------------------- dict conversion


def to_dict(cfg: Any) -> Any:
    if dataclasses.is_dataclass(cfg):
        return {f.name: to_dict(getattr(cfg, f.name)) for f in dataclasses.fields(cfg)}
    if isinstance(cfg, dict):
        return {k: to_dict(v) for k, v in cfg.items()}
    if isinstance(cfg, (list, tuple)):
        return [to_dict(v) for v in cfg]
    return cfg


def from_dict(data: dict[str, Any] | None) -> ScenarioConfig:
    return _build(ScenarioConfig, data or {}, "", None)


def _build(cls: type, data: Any, prefix: str, node: yaml.Node | None) -> Any:
    hints = get_type_hints(cls)
    if not isinstance(data, dict):
        raise ConfigError("expected a mapping", key=prefix or "<root>", line=_line(node))
    names = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        path = f"{prefix}{key}"
        child = _child(node, key)
        if key not in names:
            raise ConfigError("unknown key", key=path, line=_line(child, node))
        kwargs[key] = _coerce(hints[key], value, path, child)
    return cls(**kwargs)


def _coerce(tp: Any, value: Any, path: str, node: yaml.Node | None) -> Any:
    if dataclasses.is_dataclass(tp):
        return _build(tp, value, path + ".", node)
    origin = getattr(tp, "__origin__", None)
    line = _line(node)
    if origin is dict:
        _, vt = tp.__args__
        if not isinstance(value, dict):
            raise ConfigError("expected a mapping", key=path, line=line)
        return {str(k): _coerce(vt, v, f"{path}.{k}", _child(node, k)) for k, v in value.items()}
    if origin is list:
        (et,) = tp.__args__
        if not isinstance(value, list):
            raise ConfigError("expected a list", key=path, line=line)
        items = node.value if isinstance(node, yaml.SequenceNode) else [None] * len(value)
        return [_coerce(et, v, f"{path}[{i}]", n) for i, (v, n) in enumerate(zip(value, items))]
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"expected a boolean, got {value!r}", key=path, line=line)
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"expected an integer, got {value!r}", key=path, line=line)
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"expected a number, got {value!r}", key=path, line=line)
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"expected a string, got {value!r}", key=path, line=line)
        return value
    if isinstance(value, dict):
        return {k: _coerce(float, v, f"{path}.{k}", _child(node, k)) for k, v in value.items()}
    return value


def _child(node: yaml.Node | None, key: Any) -> yaml.Node | None:
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            if k.value == str(key):
                return v
    return None


def _line(node: yaml.Node | None, fallback: yaml.Node | None = None) -> int | None:
    n = node if node is not None else fallback
    return None if n is None else n.start_mark.line + 1


# ---------------------------------------------------------------- file I/O


def parse_scenario_text(text: str) -> ScenarioConfig:
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"malformed YAML: {exc}", line=None if mark is None else mark.line + 1) from exc
    if data is None:
        data = {}
    cfg = _build(ScenarioConfig, data, "", node)
    try:
        validate(cfg)
    except ConfigError as exc:
        if exc.line is None and exc.key:
            line = _key_line(node, exc.key)
            if line is not None:
                raise ConfigError(exc.message, key=exc.key, line=line) from None
        raise
    return cfg


def _key_line(node: yaml.Node | None, key: str) -> int | None:
    """Line of the deepest node present along a dotted key path."""
    best = None
    for part in key.split("."):
        child = _child(node, part)
        if child is None:
            break
        best = _line(child)
        node = child
    return best


def parse_scenario(path: str | Path) -> ScenarioConfig:
    """Read a YAML scenario file; missing fields take the built-in defaults."""
    return parse_scenario_text(Path(path).read_text(encoding="utf-8"))


def emit_scenario(cfg: ScenarioConfig) -> str:
    return yaml.safe_dump(to_dict(cfg), sort_keys=False, default_flow_style=None)


def is_disabled_period(period: float) -> bool:
    return math.isinf(period)
