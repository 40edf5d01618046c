"""Kinematic vehicle model: type table, spawning, car following, signal compliance and yielding.

Vehicles follow fixed polyline paths (entry lane, connector, exit lane) and never change lane.
Each step the acceleration is the minimum over a set of behavioural terms and the state is
integrated exactly under that constant acceleration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .config import VEH_TYPES, VehicleConfig, is_disabled_period
from .scene import PathSegment, Point, RoadNetwork, VehiclePath

LOOKAHEAD = 100.0  # metres of path scanned for leaders and stop lines
STOP_HOLD = 1.0  # a vehicle this close to a stop line it must obey is held at rest
PED_CLEARANCE = 1.5  # stopping distance kept in front of a pedestrian
CORRIDOR_MARGIN = 0.2
# standstill handling: no creeping at walking pace toward a queue or a line
STOP_SPEED = 0.1  # below this while braking the vehicle comes to rest
START_ACCEL = 0.5  # a stationary vehicle pulls away only when it may accelerate at least this hard


@dataclass(frozen=True)
class VehicleProfile:
    id: int
    veh_type: str
    length: float
    width: float
    max_speed: float
    accel: float
    decel: float
    emergency: float

    def __post_init__(self):
        if not (self.length > 0 and self.width > 0 and self.max_speed > 0):
            raise ValueError("vehicle dimensions and max speed must be > 0")
        if not (self.accel > 0 and self.decel > 0 and self.emergency > 0):
            raise ValueError("vehicle accelerations must be > 0")


# length, width, max speed, max accel, comfortable decel, emergency decel
VEHICLE_DEFAULTS: dict[str, dict[str, float]] = {
    "passenger": dict(length=5.0, width=1.8, max_speed=55.56, accel=2.6, decel=4.5, emergency=9.0),
    "bus": dict(length=12.0, width=2.5, max_speed=27.78, accel=1.2, decel=4.0, emergency=7.0),
    "bicycle": dict(length=1.6, width=0.65, max_speed=5.56, accel=1.2, decel=3.0, emergency=7.0),
    "truck": dict(length=7.1, width=2.4, max_speed=36.11, accel=1.3, decel=4.0, emergency=7.0),
    "motorcycle": dict(length=2.2, width=0.9, max_speed=55.56, accel=6.0, decel=10.0, emergency=10.0),
}


def vehicle_profile(veh_type: str, vid: int = 0, overrides: dict[str, dict[str, float]] | None = None) -> VehicleProfile:
    if veh_type not in VEHICLE_DEFAULTS:
        raise ValueError(f"unknown vehicle type {veh_type!r}")
    params = dict(VEHICLE_DEFAULTS[veh_type])
    if overrides and veh_type in overrides:
        params.update(overrides[veh_type])
    return VehicleProfile(vid, veh_type, **params)


@dataclass
class VehicleState:
    profile: VehicleProfile
    path: VehiclePath
    s: float  # arc length of the front bumper along the path
    v: float
    a: float = 0.0
    spawn_time: float = 0.0
    stopping_for: int | None = None  # stop-line index committed to, if any

    @property
    def id(self) -> int:
        return self.profile.id

    @property
    def length(self) -> float:
        return self.profile.length

    @property
    def segment(self) -> PathSegment:
        return self.path.segment_at(self.s)

    @property
    def lane(self) -> int:
        return self.segment.seg_id

    def max_s(self, road_max_s: float) -> float:
        return min(road_max_s, self.profile.max_speed)

    def front(self) -> Point:
        return self.path.point_at(self.s)

    def heading(self) -> float:
        """Heading in radians."""
        return self.path.heading_at(max(self.s - 1e-6, 0.0))

    def rear(self) -> Point:
        return point_on_path(self.path, self.s - self.length)

    def signal(self, signal_distance: float) -> str:
        return turn_intent(self, signal_distance)[1]


def point_on_path(path: VehiclePath, s: float) -> Point:
    """Point at arc length ``s``, extrapolated straight before the path start."""
    if s >= 0:
        return path.point_at(s)
    h = path.headings[0]
    p0 = path.points[0]
    return (p0[0] + s * math.cos(h), p0[1] + s * math.sin(h))


def turn_intent(state: VehicleState, signal_distance: float = 30.0) -> tuple[str, str]:
    """(intent, indicator): the indicator is on from ``signal_distance`` before the turn until it ends."""
    path = state.path
    if not path.points:
        raise ValueError("vehicle has no route")
    intent = path.turn
    if intent == "straight":
        return intent, "none"
    if path.turn_start - state.s <= signal_distance and state.s < path.turn_end:
        return intent, intent
    return intent, "none"


# ---------------------------------------------------------------- behavioural terms


@dataclass
class StepContext:
    """What a vehicle perceives at the start of a step."""

    time: float = 0.0
    leader_gap: float = math.inf  # bumper-to-bumper
    leader_speed: float = 0.0
    leader_decel: float = 4.5
    peds: list[tuple[float, float, float]] = field(default_factory=list)  # (ahead, lateral, radius)
    road_max_s: float = 13.89
    headway: float = 2.0
    min_gap: float = 2.0
    sight: float = 60.0
    aspects: dict[int, str] = field(default_factory=dict)  # stop-line index -> green / amber / red
    stop_lines: list[tuple[int, float]] = field(default_factory=list)  # (index, distance)


def safe_speed(dist: float, v: float, b: float, dt: float) -> float:
    """Largest next-step speed that still allows stopping within ``dist`` at deceleration ``b``."""
    rad = dt * dt / 4 + (2 * dist - v * dt) / b
    if rad <= 0:
        return 0.0
    return max(0.0, b * (-dt / 2 + math.sqrt(rad)))


def segment_limit(path: VehiclePath, s: float) -> float:
    return path.segment_at(s).speed_limit


def choose_acceleration(state: VehicleState, ctx: StepContext, dt: float) -> tuple[float, int | None]:
    """Minimum over the behavioural terms; returns (acceleration, committed stop-line index)."""
    p = state.profile
    v = state.v
    path = state.path
    v_cap = min(ctx.road_max_s, p.max_speed)
    limit = min(segment_limit(path, state.s), v_cap)
    a = min(p.accel, (limit - v) / dt)

    # anticipate slower segments (turn connectors) ahead
    for seg in path.segments:
        if seg.s0 > state.s and seg.s0 - state.s < LOOKAHEAD:
            lim = min(seg.speed_limit, v_cap)
            # fastest speed from which comfortable braking still reaches the limit in time
            dist = max(seg.s0 - state.s, 0.0)
            v_ok = math.sqrt(lim * lim + 2 * p.decel * dist)
            if v_ok < v + p.accel * dt:
                a = min(a, (v_ok - v) / dt if v_ok >= v else (lim * lim - v * v) / (2 * max(dist, 0.1)))

    # car following
    if ctx.leader_gap < math.inf:
        gap = ctx.leader_gap
        desired = ctx.min_gap + ctx.headway * v
        a = min(a, 0.25 * (gap - desired) + 0.6 * (ctx.leader_speed - v))
        room = gap - ctx.min_gap + ctx.leader_speed ** 2 / (2 * ctx.leader_decel)
        a = min(a, (safe_speed(max(room, 0.0), v, p.decel, dt) - v) / dt)

    # signals
    committed = None
    for idx, dist in ctx.stop_lines:
        aspect = ctx.aspects.get(idx, "green")
        if aspect == "green":
            continue
        if dist < -0.01:
            continue
        need = v * v / (2 * dist) if dist > 1e-9 else (math.inf if v > 1e-9 else 0.0)
        stop = state.stopping_for == idx or (need <= p.decel if aspect == "amber" else need <= p.emergency)
        if not stop:
            continue
        committed = idx
        if dist <= STOP_HOLD:
            a = min(a, -v / dt)
        else:
            a = min(a, (safe_speed(dist - STOP_HOLD / 2, v, p.decel, dt) - v) / dt)
        break

    # pedestrians in the corridor ahead
    for ahead, _lat, r in ctx.peds:
        dist = ahead - r - PED_CLEARANCE
        comfortable = (safe_speed(max(dist, 0.0), v, p.decel, dt) - v) / dt
        if comfortable >= -p.decel - 1e-9:
            a = min(a, comfortable)
        else:
            a = -p.emergency
    a = max(-p.emergency, min(a, p.accel))
    if a < 0 and v + a * dt < STOP_SPEED:
        a = -v / dt
    elif v < 1e-9 and a < START_ACCEL:
        a = 0.0
    return a, committed


def integrate(s: float, v: float, a: float, dt: float, v_max: float) -> tuple[float, float]:
    """Exact constant-acceleration update with speed bounded to [0, v_max]."""
    if a < 0 and v + a * dt < 1e-9:
        t_stop = min(-v / a, dt)
        return s + v * t_stop + 0.5 * a * t_stop * t_stop, 0.0
    if a > 0 and v + a * dt > v_max:
        t_cap = max((v_max - v) / a, 0.0)
        return s + v * t_cap + 0.5 * a * t_cap * t_cap + v_max * (dt - t_cap), v_max
    return s + v * dt + 0.5 * a * dt * dt, min(max(v + a * dt, 0.0), v_max)


def step_vehicle(state: VehicleState, network: RoadNetwork | None, ctx: StepContext, dt: float) -> VehicleState:
    """One tick: choose an acceleration from the context, integrate, return the successor state."""
    if not dt > 0:
        raise ValueError("dt must be > 0")
    a, committed = choose_acceleration(state, ctx, dt)
    v_max = min(ctx.road_max_s, state.profile.max_speed)
    s, v = integrate(state.s, state.v, a, dt, v_max)
    if committed is not None:
        # never roll past a line the vehicle decided to stop at
        line = state.path.stop_lines[committed].s
        if s > line and state.s <= line:
            s, v = max(state.s, line), 0.0
    return replace(state, s=s, v=v, a=a, stopping_for=committed)


# ---------------------------------------------------------------- perception helpers


def stop_line_view(state: VehicleState, network: RoadNetwork, t: float) -> tuple[list[tuple[int, float]], dict[int, str]]:
    lines, aspects = [], {}
    for idx, sl in enumerate(state.path.stop_lines):
        dist = sl.s - state.s
        if -0.01 <= dist <= LOOKAHEAD:
            lines.append((idx, dist))
            aspects[idx] = network.approach_state(sl.controller, sl.approach, t)
    return lines, aspects


def pedestrians_ahead(
    state: VehicleState, peds: Sequence[tuple[float, float, float]], sight: float
) -> list[tuple[float, float, float]]:
    """Pedestrians (x, y, radius) inside the corridor the vehicle sees along its current heading."""
    if not peds:
        return []
    path = state.path
    front = state.front()
    h = state.heading()
    ch, shh = math.cos(h), math.sin(h)
    # turning vehicles only see along the heading they currently hold
    reach = path.aligned_until(state.s, sight) - state.s
    half = state.profile.width / 2 + CORRIDOR_MARGIN
    out = []
    for x, y, r in peds:
        dx, dy = x - front[0], y - front[1]
        ahead = dx * ch + dy * shh
        if ahead <= -r or ahead > reach:
            continue
        lat = -dx * shh + dy * ch
        if abs(lat) < half + r:
            out.append((max(ahead, 0.0), lat, r))
    return out


# ---------------------------------------------------------------- spawning


@dataclass
class Spawner:
    """Releases one vehicle per period somewhere on the network; blocked releases wait in a queue."""

    config: VehicleConfig
    network: RoadNetwork
    rng: np.random.Generator
    road_max_s: float = 13.89
    next_time: float = 0.0
    next_id: int = 0
    pending: list[tuple[int, int, int, str]] = field(default_factory=list)
    _weights: np.ndarray | None = None

    def __post_init__(self):
        if not self.config.period > 0:
            raise ValueError("vehicle period must be > 0")
        mix = self.config.mix
        w = np.array([mix.get(k, 0.0) for k in VEH_TYPES], dtype=float)
        if w.sum() <= 0 or (w < 0).any():
            raise ValueError("vehicle mix must be non-negative and not all zero")
        self._weights = np.cumsum(w) / w.sum()
        self._entries = sorted({k[0] for k in self.network.paths})

    def _draw(self) -> tuple[int, int, int, str]:
        u = self.rng.random(4)
        vtype = VEH_TYPES[int(np.searchsorted(self._weights, u[3], side="right").clip(0, len(VEH_TYPES) - 1))]
        if not self.network.intersection:
            # single road: every lane is its own entry
            keys = sorted(self.network.paths)
            return keys[min(int(u[2] * len(keys)), len(keys) - 1)] + (vtype,)
        entry = self._entries[min(int(u[0] * len(self._entries)), len(self._entries) - 1)]
        exits = self.network.exits_from(entry)
        exit_ = exits[min(int(u[1] * len(exits)), len(exits) - 1)]
        k = min(int(u[2] * self.network.geometry.lanes_per_direction), self.network.geometry.lanes_per_direction - 1)
        return entry, exit_, k, vtype

    def step(self, t: float, dt: float, vehicles: Sequence[VehicleState]) -> list[VehicleState]:
        if is_disabled_period(self.config.period):
            return []
        while t + 1e-9 >= self.next_time:
            self.pending.append(self._draw())
            self.next_time += self.config.period
        out: list[VehicleState] = []
        still = []
        for entry, exit_, k, vtype in self.pending:
            path = self.network.paths[(entry, exit_, k)]
            profile = vehicle_profile(vtype, self.next_id, self.config.types)
            first = path.segments[0].seg_id
            trailing = [
                vs.s - vs.length
                for vs in list(vehicles) + out
                if vs.path.segments[0].seg_id == first and vs.s - vs.length < LOOKAHEAD
            ]
            gap = min(trailing, default=math.inf)
            if gap < self.config.min_gap:
                still.append((entry, exit_, k, vtype))
                continue
            v_cap = min(self.config.depart_speed, self.road_max_s, profile.max_speed, path.segments[0].speed_limit)
            v0 = v_cap if gap == math.inf else min(v_cap, safe_speed(gap - self.config.min_gap, 0.0, profile.decel, dt))
            out.append(VehicleState(profile, path, 0.0, v0, 0.0, t))
            self.next_id += 1
        self.pending = still
        return out


def spawn_vehicles(
    config: VehicleConfig,
    rng: np.random.Generator,
    sim_time: float,
    network: RoadNetwork,
    vehicles: Sequence[VehicleState] = (),
    spawner: Spawner | None = None,
    dt: float = 0.1,
) -> list[VehicleState]:
    """Functional wrapper around :class:`Spawner` for a single tick."""
    sp = spawner or Spawner(config, network, rng, network.geometry.road_max_s, next_time=sim_time)
    return sp.step(sim_time, dt, vehicles)
