"""Pedestrian population: characteristic sampling, trip assignment and law-obedience resolution.

All skew-normal draws go through the inverse CDF of a single uniform per characteristic, so two
populations generated from the same seed pair agent i's draws across trait mixes (an agent that
turns aggressive keeps its quantile and only changes the distribution it is read from).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from .config import (
    LAW_STATUSES,
    PED_TRAITS,
    PED_TYPES,
    TRANSIT_MODES,
    ConfigError,
    DecisionConfig,
    PedestrianConfig,
    ScenarioConfig,
)
from .scene import Point, RoadNetwork, random_sidewalk_point

ADULT_WIDTH = 0.478
ADULT_LENGTH = 0.215
MIN_SPEED = 0.05

# category order for the inverse-CDF mapping; traits run from bold to cautious so that
# raising the aggressive share moves every agent monotonically
TRAIT_ORDER = ("aggressive", "average", "conservative")
LAW_ORDER = ("violating", "average", "obedient")
TYPE_ORDER = ("adult", "child", "elderly")
PATTERNS = ("one-stage", "rolling-gap")

PHASES = (
    "route-walking",
    "intend-to-cross",
    "waiting",
    "crossing",
    "mid-road-waiting",
    "activity",
    "riding",
    "done",
    "collided",
)


@dataclass(frozen=True)
class PedestrianProfile:
    id: int
    ped_type: str
    ped_trait: str
    ped_lo: str
    ped_s: float
    ped_gap: float
    crossing_pattern: str
    go_around_blocking: bool
    p_noise: float
    th_dist_c: float
    width: float
    length: float
    origin: Point
    destination: Point
    transit_mode: str = "walk"
    depart_time: float = 0.0
    needs_crossing: bool = False

    @property
    def radius(self) -> float:
        return self.width / 2


@dataclass
class PedestrianState:
    """Mutable per-run state of one pedestrian; ``wt_steps`` counts waiting ticks."""

    position: Point
    heading: float = 0.0  # degrees
    phase: str = "route-walking"
    wt_steps: int = 0
    c_gap: float = 0.0
    crs_speed: float = 0.0
    law_status: str = "obedient"
    waypoints: list[Point] = field(default_factory=list)
    leg: int = 0  # index of the waypoint being walked toward
    crossing_index: int = -1  # route segment index of the active crossing
    lane_progress: float = 0.0  # metres from the starting curb during a crossing
    lateral_offset: float = 0.0  # sidestep along the road axis while going around
    timed_out: bool = False
    activity_until: float = 0.0
    ride_until: float = 0.0
    active: bool = False


# ---------------------------------------------------------------- samplers


def _skewnorm_ppf(u, alpha, loc, scale):
    return stats.skewnorm.ppf(u, alpha, loc=loc, scale=scale)


def speed_shape(ped_trait: str, mean: float) -> float:
    if ped_trait == "aggressive":
        return mean
    if ped_trait == "conservative":
        return -mean
    if ped_trait == "average":
        return 0.0
    raise ValueError(f"unknown trait {ped_trait!r}")


def gap_shape(ped_trait: str, mean: float) -> float:
    # bold pedestrians skew toward short gaps
    return -speed_shape(ped_trait, mean)


def gap_params(gap_range: Sequence[float]) -> tuple[float, float]:
    lo, hi = float(gap_range[0]), float(gap_range[1])
    if not lo < hi:
        raise ValueError("gap_range.min < gap_range.max required")
    return (lo + hi) / 2, (hi - lo) / 4


def sample_walking_speed(
    ped_type: str,
    ped_trait: str,
    rng: np.random.Generator,
    speed_mean: dict[str, float] | None = None,
    speed_std: float = 0.14,
    size: int | None = None,
):
    """Skew-normal walking speed; the shape equals the type's mean with the trait's sign."""
    means = speed_mean if speed_mean is not None else PedestrianConfig().speed_mean
    if ped_type not in means:
        raise ValueError(f"unknown pedestrian type {ped_type!r}")
    mu = means[ped_type]
    u = rng.random(size)
    x = _skewnorm_ppf(u, speed_shape(ped_trait, mu), mu, speed_std)
    x = np.maximum(x, MIN_SPEED)
    return float(x) if size is None else x


def sample_gap_acceptance(ped_trait: str, gap_range: Sequence[float], rng: np.random.Generator, size: int | None = None):
    """Skew-normal accepted gap centred on the range midpoint, clamped into the range."""
    loc, scale = gap_params(gap_range)
    u = rng.random(size)
    x = np.clip(_skewnorm_ppf(u, gap_shape(ped_trait, loc), loc, scale), gap_range[0], gap_range[1])
    return float(x) if size is None else x


def sample_perceptual_noise(rng: np.random.Generator, size: int | None = None):
    """Standard-normal perception z-score."""
    z = rng.standard_normal(size)
    return float(z) if size is None else z


def resolve_law_obedience(ped_lo: str, dist_c: float, th_dist_c: float) -> str:
    """Context-free statuses pass through; an average pedestrian obeys iff dist_c < th_dist_c."""
    if dist_c < 0:
        raise ValueError("dist_c must be >= 0")
    if ped_lo in ("obedient", "violating"):
        return ped_lo
    if ped_lo != "average":
        raise ValueError(f"unknown law-obedience status {ped_lo!r}")
    return "obedient" if dist_c < th_dist_c else "violating"


def _categorical(u: np.ndarray, pct: dict[str, float], order: Sequence[str]) -> np.ndarray:
    edges = np.cumsum([pct.get(k, 0.0) for k in order]) / 100.0
    edges[-1] = np.inf
    idx = np.searchsorted(edges, u, side="right")
    return np.asarray(order, dtype=object)[idx]


def _check_pct(pct: dict[str, float], allowed: Sequence[str], key: str) -> None:
    unknown = set(pct) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown categories {sorted(unknown)}", key)
    if any(v < 0 for v in pct.values()):
        raise ConfigError("percentages must be >= 0", key)
    if abs(sum(pct.values()) - 100.0) > 1e-6:
        raise ConfigError(f"percentages must sum to 100 (got {sum(pct.values()):g})", key)


def body_dimensions(ped_type: str, child_scale: float = 0.6) -> tuple[float, float]:
    if ped_type == "child":
        return ADULT_WIDTH * child_scale, ADULT_LENGTH * child_scale
    return ADULT_WIDTH, ADULT_LENGTH


def _trip(
    net: RoadNetwork, u_origin: float, u_dest: float, u_side: float, crossing: bool
) -> tuple[Point, Point]:
    origin = random_sidewalk_point(net, u_origin)
    sw, _ = net.locate(origin)
    if crossing and len(net.sidewalks) > 1:
        others = [s.id for s in net.sidewalks if s.id != sw]
        target = others[min(int(u_side * len(others)), len(others) - 1)]
        dest = random_sidewalk_point(net, u_dest, [target])
    else:
        dest = random_sidewalk_point(net, u_dest, [sw])
    return origin, dest


def generate_population(
    cfg: ScenarioConfig, rng: np.random.Generator, net: RoadNetwork | None = None
) -> list[PedestrianProfile]:
    """Sample ``cfg.pedestrians.count`` profiles; trips need ``net`` (a default grid otherwise)."""
    pc: PedestrianConfig = cfg.pedestrians
    dc: DecisionConfig = cfg.decision
    _check_pct(pc.type_pct, PED_TYPES, "pedestrians.type_pct")
    _check_pct(pc.trait_pct, PED_TRAITS, "pedestrians.trait_pct")
    _check_pct(pc.law_pct, LAW_STATUSES, "pedestrians.law_pct")
    if net is None:
        from .scene import build_grid_network

        net = build_grid_network(cfg.geometry, cfg.signals, cfg.vehicles.turn_speed)
    n = int(pc.count)
    if n < 0:
        raise ConfigError("count must be >= 0", "pedestrians.count")
    # one fixed block of uniforms per agent keeps draws aligned across configurations
    u = rng.random((n, 14)) if n else np.zeros((0, 14))
    types = _categorical(u[:, 0], pc.type_pct, TYPE_ORDER)
    traits = _categorical(u[:, 1], pc.trait_pct, TRAIT_ORDER)
    laws = _categorical(u[:, 2], pc.law_pct, LAW_ORDER)
    z = stats.norm.ppf(u[:, 3])
    patterns = np.where(u[:, 4] < pc.one_stage_pct / 100.0, "one-stage", "rolling-gap")
    go_around = u[:, 5] < pc.go_around_pct / 100.0
    lo_c, hi_c = dc.dist_c_range
    th = lo_c + (hi_c - lo_c) * u[:, 6]
    crossing = u[:, 7] < pc.crossing_pct / 100.0
    w = np.array([pc.mode_weights.get(m, 0.0) for m in TRANSIT_MODES], dtype=float)
    if (w < 0).any() or w.sum() <= 0:
        raise ConfigError("mode weights must be non-negative and not all zero", "pedestrians.mode_weights")
    modes = np.asarray(TRANSIT_MODES, dtype=object)[
        np.minimum(np.searchsorted(np.cumsum(w) / w.sum(), u[:, 8], side="right"), len(w) - 1)
    ]
    loc_g, scale_g = gap_params(dc.gap_range)
    profiles = []
    for i in range(n):
        mu = pc.speed_mean[types[i]]
        speed = max(float(_skewnorm_ppf(u[i, 9], speed_shape(traits[i], mu), mu, pc.speed_std)), MIN_SPEED)
        gap = float(np.clip(_skewnorm_ppf(u[i, 10], gap_shape(traits[i], loc_g), loc_g, scale_g), *dc.gap_range))
        origin, dest = _trip(net, u[i, 11], u[i, 12], u[i, 13], bool(crossing[i]))
        width, length = body_dimensions(types[i], pc.child_scale)
        depart = 0.0 if i < pc.initial else (i - pc.initial + 1) * pc.departure_period
        profiles.append(
            PedestrianProfile(
                id=i,
                ped_type=str(types[i]),
                ped_trait=str(traits[i]),
                ped_lo=str(laws[i]),
                ped_s=speed,
                ped_gap=gap,
                crossing_pattern=str(patterns[i]),
                go_around_blocking=bool(go_around[i]),
                p_noise=float(z[i]),
                th_dist_c=float(th[i]),
                width=width,
                length=length,
                origin=origin,
                destination=dest,
                transit_mode=str(modes[i]),
                depart_time=float(depart),
                needs_crossing=bool(crossing[i]),
            )
        )
    return profiles


def choose_transit_mode(rng: np.random.Generator, weights: dict[str, float]) -> str:
    w = np.array([weights.get(m, 0.0) for m in TRANSIT_MODES], dtype=float)
    if (w < 0).any():
        raise ValueError("mode weights must be non-negative")
    if w.sum() <= 0:
        raise ValueError("mode weights must not all be zero")
    return TRANSIT_MODES[int(rng.choice(len(w), p=w / w.sum()))]


def population_rows(profiles: Sequence[PedestrianProfile]) -> list[dict]:
    """Per-agent dump rows."""
    return [
        {
            "id": p.id,
            "type": p.ped_type,
            "trait": p.ped_trait,
            "law_obedience": p.ped_lo,
            "speed_mps": p.ped_s,
            "gap_s": p.ped_gap,
            "pattern": p.crossing_pattern,
            "p_noise": p.p_noise,
            "th_dist_c_m": p.th_dist_c,
        }
        for p in profiles
    ]


def heading_deg(a: Point, b: Point) -> float:
    return math.degrees(math.atan2(b[1] - a[1], b[0] - a[0]))
