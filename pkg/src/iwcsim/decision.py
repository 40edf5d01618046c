"""Pedestrian tactical decisions: route and crossing planning, wait/cross phases, gap decay, timeouts.

Each pedestrian is an :class:`PedestrianAgent` that advances one tick at a time against a frozen
:class:`WorldSnapshot` of the vehicles. It writes only its own state and returns the events it
produced, so pedestrians can be stepped in any order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import ttc
from .agents import PedestrianProfile, PedestrianState, choose_transit_mode, heading_deg, resolve_law_obedience
from .config import DecisionConfig, PedestrianConfig
from .scene import (
    ArmLane,
    CrossingRef,
    NetworkError,
    Point,
    RoadNetwork,
    Route,
    UnreachableError,
    VehiclePath,
    clamp_jaywalk,
    crossing_lanes,
    crossing_route,
    nearest_crosswalk,
    shortest_path,
    walk_route,
)

__all__ = [
    "CrossingPlan",
    "PedestrianAgent",
    "StateMachineError",
    "VehicleView",
    "WorldSnapshot",
    "choose_transit_mode",
    "decide_cross",
    "handle_wait_timeout",
    "plan_route",
    "step_pedestrian",
    "timeout_reached",
    "update_crossing_gap",
]

EPS = 1e-9
SIDESTEP_MARGIN = 0.3
PICKUP_RANGE = 20.0


class StateMachineError(RuntimeError):
    """A pedestrian reached a phase/plan combination the model does not allow."""


# ---------------------------------------------------------------- pure rules


def update_crossing_gap(ped_gap: float, ped_wt: float, wt_const: float, gap_min: float) -> float:
    """Accepted gap after waiting ``ped_wt`` seconds: linear decay floored at ``gap_min``."""
    if min(ped_gap, ped_wt, wt_const, gap_min) < 0:
        raise ValueError("inputs must be >= 0")
    return max(gap_min, ped_gap - wt_const * ped_wt)


def timeout_reached(ped_gap: float, ped_wt: float, wt_const: float, gap_min: float) -> bool:
    return ped_gap - wt_const * ped_wt < gap_min


def decide_cross(c_gap: float, min_ttc: float) -> bool:
    """Cross iff the accepted gap is strictly below the minimum TTC."""
    return c_gap < min_ttc


# ---------------------------------------------------------------- world snapshot


@dataclass
class VehicleView:
    """Frozen per-step view of one vehicle as pedestrians perceive it."""

    id: int
    s: float
    v: float
    a: float
    max_s: float
    length: float
    width: float
    front: Point
    rear: Point
    heading: float  # degrees
    arm: int | None  # arm the front is on, None inside the intersection
    lane: int
    path: VehiclePath
    inferred: VehiclePath  # path implied by the indicator

    @property
    def stopped(self) -> bool:
        return self.v < 0.1


@dataclass
class WorldSnapshot:
    t: float
    network: RoadNetwork
    method: str
    road_max_s: float
    vehicles: list[VehicleView] = field(default_factory=list)
    by_arm: dict[int, list[tuple[VehicleView, ArmLane]]] = field(default_factory=dict)
    noise_th: float = 0.3
    yield_ttc: float = 3.0
    sight_distance: float = math.inf


# ---------------------------------------------------------------- crossing plan


@dataclass
class CrossingPlan:
    target: str  # signalized / crosswalk / jaywalk
    ref: CrossingRef
    lanes: tuple[tuple[int, float, float], ...]  # (lane id, entry offset, exit offset) from the start curb
    width: float  # curb to curb
    pattern: str
    coord: float  # current crossing coordinate along the arm axis (moves when going around)
    coord_target: float | None = None
    lane_index: int = 0

    @property
    def is_jaywalk(self) -> bool:
        return self.target == "jaywalk"


def make_crossing_plan(net: RoadNetwork, ref: CrossingRef, pattern: str) -> CrossingPlan:
    if pattern not in ("one-stage", "rolling-gap"):
        raise ValueError(f"unknown crossing pattern {pattern!r}")
    start = net.curb_point(ref.arm, ref.from_side, ref.coord)
    lanes = []
    for lid, off in crossing_lanes(net, start, arm=ref.arm):
        w = net.lanes[lid].width
        lanes.append((lid, off, off + w))
    if ref.kind == "crosswalk":
        cw = net.crosswalks[ref.crosswalk]
        target = "signalized" if cw.signalized else "crosswalk"
    else:
        target = "jaywalk"
    return CrossingPlan(target, ref, tuple(lanes), net.road_width(ref.arm), pattern, ref.coord)


# ---------------------------------------------------------------- planning


def _arm_choices(net: RoadNetwork, destination: Point) -> list[tuple[int, int]]:
    """(arm, side) pairs of the curb legs of the destination's sidewalk."""
    sw, _ = net.locate(destination)
    return list(net.sidewalks[sw].legs)


def plan_route(
    profile: PedestrianProfile,
    network: RoadNetwork,
    origin: Point,
    destination: Point,
    law_status: str,
    rng: np.random.Generator,
    cfg: DecisionConfig | None = None,
) -> Route:
    """Route for one trip under a resolved law status.

    Obedient pedestrians take the shortest crosswalk route (signalised crosswalks only when
    the option is set, any crosswalk when that fails). Violating pedestrians jaywalk at a point
    drawn uniformly within ``jaywalk_radius`` of the destination's projection onto the road
    they must cross last, reached by the shortest violating route.
    """
    dc = cfg or DecisionConfig()
    if law_status not in ("obedient", "violating"):
        raise ValueError(f"law status must be resolved, got {law_status!r}")
    sw_o, _ = network.locate(origin)
    sw_d, _ = network.locate(destination)
    if sw_o == sw_d:
        return walk_route(network, origin, destination)
    if law_status == "obedient":
        if dc.signalized_only:
            try:
                return shortest_path(network, origin, destination, "obedient", signalized_only=True)
            except UnreachableError:
                pass
        return shortest_path(network, origin, destination, "obedient")

    u = float(rng.random())
    best = None
    for arm_id, side in _arm_choices(network, destination):
        arm = network.arms[arm_id]
        proj = clamp_jaywalk(network, arm, destination[arm.axis])
        far = network.curb_point(arm_id, -side, proj)
        try:
            sw_far, _ = network.locate(far)
        except NetworkError:
            continue
        lead = (
            walk_route(network, origin, far)
            if sw_far == sw_o
            else shortest_path(network, origin, far, "violating")
        )
        total = lead.length + network.road_width(arm_id) + abs(proj - destination[arm.axis])
        if best is None or total < best[0] - 1e-9:
            best = (total, arm_id, side)
    if best is None:
        raise UnreachableError("no road adjacent to the destination")
    _, arm_id, side = best
    arm = network.arms[arm_id]
    proj = destination[arm.axis]
    pt_c = clamp_jaywalk(network, arm, proj + (2 * u - 1) * dc.jaywalk_radius)
    far = network.curb_point(arm_id, -side, pt_c)
    near = network.curb_point(arm_id, side, pt_c)
    sw_far, _ = network.locate(far)
    lead = walk_route(network, origin, far) if sw_far == sw_o else shortest_path(network, origin, far, "violating")
    cross = crossing_route(network, CrossingRef("jaywalk", arm_id, pt_c, -side))
    tail = walk_route(network, near, destination)
    return lead.concat(cross).concat(tail)


def route_via_nearest_crosswalk(
    network: RoadNetwork, position: Point, destination: Point, signalized_only: bool
) -> Route:
    """Obedient replanning: walk to the closest crosswalk, cross it, continue obediently."""
    found = nearest_crosswalk(network, position, signalized_only)
    if found is None and signalized_only:
        found = nearest_crosswalk(network, position, False)
    if found is None:
        return shortest_path(network, position, destination, "obedient")
    cw = network.crosswalks[found[0]]
    sw, _ = network.locate(position)
    here = next(i for i, e in enumerate(cw.ends) if network.sidewalks[sw].project(e)[1] <= 1e-6)
    side = -1 if here == 0 else 1
    lead = walk_route(network, position, cw.ends[here])
    cross = crossing_route(network, CrossingRef("crosswalk", cw.arm, cw.coord, side, cw.id))
    rest = shortest_path(network, cw.ends[1 - here], destination, "obedient")
    return lead.concat(cross).concat(rest)


def handle_wait_timeout(
    profile: PedestrianProfile,
    state: PedestrianState,
    dc: DecisionConfig,
    network: RoadNetwork | None = None,
    destination: Point | None = None,
) -> tuple[str, Route | None]:
    """Behaviour switch once the gap decay bottoms out at a jaywalk point.

    Violating pedestrians speed up; average ones turn obedient and replan via the nearest
    crosswalk. Returns the event name and, for a replan, the new route.
    """
    if state.phase != "waiting":
        raise StateMachineError(f"wait timeout outside the waiting phase ({state.phase})")
    if state.law_status == "obedient":
        raise StateMachineError("obedient pedestrian waiting at a jaywalk point")
    state.timed_out = True
    if profile.ped_lo == "average":
        state.law_status = "obedient"
        route = None
        if network is not None and destination is not None:
            route = route_via_nearest_crosswalk(network, state.position, destination, dc.signalized_only)
        return "reroute_to_crosswalk", route
    state.crs_speed = dc.sp_f * profile.ped_s
    return "speedup", None


# ---------------------------------------------------------------- TTC over a crossing


@dataclass
class LaneVerdict:
    value: float = math.inf  # TTC the pedestrian acts on
    adjusted: float = math.inf  # method TTC before noise (for metrics)
    blocker: VehicleView | None = None


def evaluate_lanes(
    snap: WorldSnapshot,
    plan: CrossingPlan,
    lanes: Sequence[int],
    ped_pos: Point,
    progress: float,
    speed: float,
    radius: float,
    p_noise: float,
    go_around: bool,
    trace: list | None = None,
    ped_id: int = -1,
) -> dict[int, LaneVerdict]:
    """Minimum TTC per lane at the pedestrian's crossing line, with blocking vehicles flagged."""
    net = snap.network
    method = snap.method
    adjusted_method = method in ttc.ADJUSTED_METHODS
    out = {lid: LaneVerdict() for lid in lanes}
    if not lanes:
        return out
    entry = {lid: e for lid, e, _ in plan.lanes}
    arm = net.arms[plan.ref.arm]
    c = plan.coord
    ped_heading = 90.0 * (-plan.ref.from_side) if arm.axis == 0 else (0.0 if plan.ref.from_side < 0 else 180.0)
    for veh, al in snap.by_arm.get(arm.id, ()):
        if al.lane not in out:
            continue
        s_cross = al.s0 + (c - al.c0) * al.sign
        if s_cross < al.s0 - EPS or s_cross > al.s1 + EPS:
            continue
        d_front = s_cross - veh.s
        if d_front > snap.sight_distance:
            continue
        l_eff = veh.length + 2 * radius
        verdict = out[al.lane]
        if veh.stopped and -l_eff <= d_front <= radius:
            # body over the crossing line
            if go_around:
                continue
            if verdict.blocker is None:
                verdict.blocker = veh
            verdict.value = verdict.adjusted = 0.0
            continue
        if d_front + l_eff < 0 or (d_front < 0 and not adjusted_method):
            continue
        # once the front is past, only the adjusted methods still see the body over the line,
        # and that overlap already makes the vehicle relevant
        if d_front >= 0 and veh.arm == arm.id and veh.front != ped_pos:
            relevant, _, _ = ttc.positional_relevance(ped_pos, ped_heading, veh.front, veh.heading)
            if not relevant:
                continue
        travel = max(0.0, entry[al.lane] - progress) / speed if speed > 0 else math.inf
        if travel == math.inf:
            continue
        est = ttc.estimate(
            method, veh.id, al.lane, d_front, veh.v, veh.a, veh.max_s, snap.road_max_s, travel, l_eff,
            p_noise, snap.noise_th,
        )
        if trace is not None:
            trace.append((snap.t, ped_id, veh.id, al.lane, est.raw, est.adjusted, est.perceived, est.verdict))
        if est.verdict != ttc.RELEVANT:
            continue
        if est.value < verdict.value:
            verdict.value = est.value
        if est.adjusted < verdict.adjusted:
            verdict.adjusted = est.adjusted
    return out


def vehicles_yielding(snap: WorldSnapshot, plan: CrossingPlan) -> bool:
    """All vehicles due at the crosswalk within the yield horizon are braking or stopped."""
    arm = snap.network.arms[plan.ref.arm]
    for veh, al in snap.by_arm.get(arm.id, ()):
        s_cross = al.s0 + (plan.coord - al.c0) * al.sign
        if not (al.s0 - EPS <= s_cross <= al.s1 + EPS):
            continue
        d = s_cross - veh.s
        if d < 0:
            continue
        t = ttc.dynamic_ttc(d, veh.v, veh.a, veh.max_s)
        if t <= snap.yield_ttc and not (veh.stopped or veh.a < -0.1):
            return False
    return True


# ---------------------------------------------------------------- the agent


@dataclass
class CrossingRecord:
    ped_id: int
    index: int
    kind: str  # jaywalk / crosswalk
    legal: bool
    arm: int
    wait_start: float
    cross_start: float | None = None
    cross_end: float | None = None
    min_ttc: float | None = None
    c_gap: float | None = None
    crs_speed: float | None = None
    midroad_waits: int = 0
    status: str = "waiting"  # waiting / crossing / completed / abandoned / collided

    @property
    def wait_time(self) -> float | None:
        return None if self.cross_start is None else self.cross_start - self.wait_start


class PedestrianAgent:
    """One pedestrian: immutable profile, mutable state, planned route and crossing records."""

    def __init__(
        self,
        profile: PedestrianProfile,
        network: RoadNetwork,
        dc: DecisionConfig,
        pc: PedestrianConfig,
        rng: np.random.Generator,
        dt: float,
    ):
        self.profile = profile
        self.net = network
        self.dc = dc
        self.pc = pc
        self.rng = rng
        self.dt = dt
        self.state = PedestrianState(position=profile.origin)
        self.route: Route | None = None
        self.plan: CrossingPlan | None = None
        self.records: list[CrossingRecord] = []
        self.gap_trace_min = math.inf
        self.ttc_trace: list | None = None

    # -- helpers
    @property
    def id(self) -> int:
        return self.profile.id

    @property
    def radius(self) -> float:
        return self.profile.radius

    @property
    def on_road(self) -> bool:
        return self.state.phase in ("crossing", "mid-road-waiting")

    def _event(self, events: list, t: float, name: str, **extra) -> None:
        events.append((t, self.profile.id, name, extra))

    def depart(self, t: float) -> list:
        """Resolve law obedience, pick the trip legs and start walking."""
        p, st, net = self.profile, self.state, self.net
        events: list = []
        st.active = True
        st.crs_speed = p.ped_s
        st.c_gap = p.ped_gap
        if p.ped_lo == "average":
            found = nearest_crosswalk(net, p.origin, self.dc.signalized_only)
            if found is None and self.dc.signalized_only:
                found = nearest_crosswalk(net, p.origin, False)
            dist_c = found[1] if found is not None else math.inf
            st.law_status = resolve_law_obedience("average", dist_c, p.th_dist_c)
        else:
            st.law_status = p.ped_lo
        if p.transit_mode != "walk":
            # walk to a nearby pick-up point on the same sidewalk, then ride
            sw, s = net.locate(p.origin)
            side = net.sidewalks[sw]
            u = float(self.rng.random())
            s_pick = min(max(s + (2 * u - 1) * PICKUP_RANGE, 0.0), side.length)
            self.route = walk_route(net, p.origin, side.point_at(s_pick))
        else:
            self.route = plan_route(p, net, p.origin, p.destination, st.law_status, self.rng, self.dc)
        st.waypoints = list(self.route.waypoints)
        st.leg = 1
        st.phase = "route-walking"
        self._event(events, t, "depart", mode=p.transit_mode, law=st.law_status)
        if len(st.waypoints) <= 1:
            self._finish_walk(t, events)
        return events

    def _segment_kind(self, leg: int) -> str:
        return self.route.kinds[leg - 1]

    def _finish_walk(self, t: float, events: list) -> None:
        st = self.state
        p = self.profile
        if p.transit_mode != "walk":
            st.phase = "riding"
            speed = self.pc.mode_speed.get(p.transit_mode, 10.0)
            st.ride_until = t + math.dist(st.position, p.destination) / speed
            return
        st.phase = "done"
        self._event(events, t, "arrived")

    def _walk(self, dist: float, t: float, events: list) -> None:
        st = self.state
        while dist > EPS and st.phase == "route-walking":
            if st.leg >= len(st.waypoints):
                self._finish_walk(t, events)
                return
            if self._segment_kind(st.leg) != "walk":
                self._begin_intend(t, events)
                return
            target = st.waypoints[st.leg]
            d = math.dist(st.position, target)
            if d > EPS:
                st.heading = heading_deg(st.position, target)
            if d <= dist:
                st.position = target
                dist -= d
                st.leg += 1
            else:
                f = dist / d
                st.position = (st.position[0] + f * (target[0] - st.position[0]), st.position[1] + f * (target[1] - st.position[1]))
                dist = 0.0
        if st.phase == "route-walking":
            if st.leg >= len(st.waypoints):
                self._finish_walk(t, events)
            elif self._segment_kind(st.leg) != "walk":
                self._begin_intend(t, events)

    def _begin_intend(self, t: float, events: list) -> None:
        st = self.state
        ref = self.route.crossings[st.leg - 1]
        if ref is None:
            raise StateMachineError("crossing segment without a crossing reference")
        if st.law_status == "obedient" and ref.kind != "crosswalk":
            raise StateMachineError("obedient pedestrian planned a jaywalk")
        self.plan = make_crossing_plan(self.net, ref, self.profile.crossing_pattern)
        st.phase = "intend-to-cross"
        st.crossing_index = st.leg - 1
        st.lane_progress = 0.0
        self._event(events, t, "intend", kind=ref.kind)

    # -- crossing geometry
    def _crossing_point(self, progress: float, coord: float) -> Point:
        plan = self.plan
        arm = self.net.arms[plan.ref.arm]
        side = plan.ref.from_side
        across = side * (arm.half_width - progress)
        return (coord, across) if arm.axis == 0 else (across, coord)

    def _scope(self, progress: float, pattern: str) -> list[int]:
        """Lanes whose TTC gates the next move from ``progress``."""
        remaining = [(lid, e, x) for lid, e, x in self.plan.lanes if x > progress + EPS]
        if not remaining:
            return []
        if pattern == "one-stage":
            return [lid for lid, _, _ in remaining]
        lid, e, _ = remaining[0]
        if e < progress - EPS and len(remaining) > 1:
            # inside a lane: watch it and the one after
            return [lid, remaining[1][0]]
        return [lid]

    def _evaluate(self, snap: WorldSnapshot, lanes: Sequence[int]) -> dict[int, LaneVerdict]:
        st = self.state
        return evaluate_lanes(
            snap, self.plan, lanes, st.position, st.lane_progress, st.crs_speed, self.radius,
            self.profile.p_noise, self.profile.go_around_blocking, self.ttc_trace, self.profile.id,
        )

    def _safe(self, verdict: LaneVerdict) -> bool:
        return verdict.blocker is None and decide_cross(self.state.c_gap, verdict.value)

    def _min_ttc_all(self, snap: WorldSnapshot) -> float:
        lanes = [lid for lid, _, x in self.plan.lanes if x > self.state.lane_progress + EPS]
        verdicts = self._evaluate(snap, lanes)
        return min((v.adjusted for v in verdicts.values()), default=math.inf)

    # -- the tick
    def step(self, snap: WorldSnapshot, dt: float | None = None) -> list:
        dt = self.dt if dt is None else dt
        if not dt > 0:
            raise ValueError("dt must be > 0")
        st = self.state
        t = snap.t
        events: list = []
        phase = st.phase
        if not st.active or phase in ("done", "collided"):
            return events
        if phase == "route-walking":
            if self.pc.activity_probability > 0 and self.rng.random() < self.pc.activity_probability:
                lo, hi = self.pc.activity_duration
                st.phase = "activity"
                st.activity_until = t + lo + (hi - lo) * float(self.rng.random())
                self._event(events, t, "activity")
                return events
            self._walk(self.profile.ped_s * dt, t, events)
        elif phase == "activity":
            if t + EPS >= st.activity_until:
                st.phase = "route-walking"
                self._walk(self.profile.ped_s * dt, t, events)
        elif phase == "riding":
            if t + EPS >= st.ride_until:
                st.position = self.profile.destination
                st.phase = "done"
                self._event(events, t, "arrived")
        elif phase == "intend-to-cross":
            st.phase = "waiting"
            st.wt_steps = 0
            st.timed_out = False
            st.c_gap = self.profile.ped_gap
            st.crs_speed = self.profile.ped_s
            plan = self.plan
            self.records.append(
                CrossingRecord(self.id, len(self.records), plan.ref.kind, plan.ref.legal, plan.ref.arm, t)
            )
            self._event(events, t, "wait_start")
            self._wait(snap, t, events)
        elif phase == "waiting":
            st.wt_steps += 1
            self._wait(snap, t, events)
        elif phase == "crossing":
            self._cross(snap, dt, t, events)
        elif phase == "mid-road-waiting":
            self._midroad(snap, dt, t, events)
        else:
            raise StateMachineError(f"undefined phase {phase!r}")
        if st.c_gap < self.gap_trace_min:
            self.gap_trace_min = st.c_gap
        return events

    def _wait(self, snap: WorldSnapshot, t: float, events: list) -> None:
        st, p, dc, plan = self.state, self.profile, self.dc, self.plan
        wt = st.wt_steps * self.dt
        st.c_gap = update_crossing_gap(p.ped_gap, wt, dc.wt_const, dc.gap_min)
        if plan.is_jaywalk:
            if st.law_status == "obedient":
                raise StateMachineError("obedient pedestrian waiting at a jaywalk point")
            if not st.timed_out and timeout_reached(p.ped_gap, wt, dc.wt_const, dc.gap_min):
                name, route = handle_wait_timeout(p, st, dc, self.net, p.destination)
                self._event(events, t, name)
                if route is not None:
                    rec = self.records[-1]
                    rec.status = "abandoned"
                    self._replace_route(route)
                    return
            go = self._jaywalk_clear(snap, 0.0)
        elif plan.target == "signalized":
            go = self.net.pedestrian_walk(plan.ref.crosswalk, t)
        else:
            go = vehicles_yielding(snap, plan) or self._jaywalk_clear(snap, 0.0)
        if go:
            rec = self.records[-1]
            rec.cross_start = t
            rec.min_ttc = self._min_ttc_all(snap)
            rec.c_gap = st.c_gap
            rec.crs_speed = st.crs_speed
            rec.status = "crossing"
            st.phase = "crossing"
            self._event(events, t, "cross_start", min_ttc=rec.min_ttc)

    def _replace_route(self, route: Route) -> None:
        st = self.state
        self.route = route
        st.waypoints = list(route.waypoints)
        st.leg = 1
        self.plan = None
        st.phase = "route-walking"

    def _jaywalk_clear(self, snap: WorldSnapshot, progress: float) -> bool:
        scope = self._scope(progress, self.plan.pattern)
        verdicts = self._evaluate(snap, scope)
        return all(self._safe(v) for v in verdicts.values())

    def _cross(self, snap: WorldSnapshot, dt: float, t: float, events: list) -> None:
        st, plan = self.state, self.plan
        step = st.crs_speed * dt
        if not plan.is_jaywalk:
            self._advance(step, plan.width, t, events)
            return
        if plan.coord_target is None:
            target, wait_here = self._next_target(snap)
        if plan.coord_target is not None:
            # going around a stopped vehicle: move along the lane edge first
            self._sidestep(step)
            return
        self._advance(step, target, t, events)
        if st.phase == "crossing" and wait_here and abs(st.lane_progress - target) <= EPS:
            st.phase = "mid-road-waiting"
            self.records[-1].midroad_waits += 1
            self._event(events, t, "midroad_wait", progress=st.lane_progress)

    def _midroad(self, snap: WorldSnapshot, dt: float, t: float, events: list) -> None:
        st = self.state
        target, wait_here = self._next_target(snap)
        if wait_here and abs(st.lane_progress - target) <= EPS and self.plan.coord_target is None:
            return
        st.phase = "crossing"
        self._cross(snap, dt, t, events)

    def _next_target(self, snap: WorldSnapshot) -> tuple[float, bool]:
        """Progress to head for this tick and whether to wait on arrival.

        May instead schedule a sidestep (``plan.coord_target``) around a stopped vehicle.
        """
        st, plan = self.state, self.plan
        p = st.lane_progress
        verdicts = self._evaluate(snap, self._scope(p, plan.pattern))
        for lid, e, x in plan.lanes:
            if x <= p + EPS:
                continue
            if lid not in verdicts:
                break
            v = verdicts[lid]
            if e < p - EPS:
                # inside this lane: retreat to its nearer edge if it turned unsafe
                if not self._safe(v):
                    return (x, True) if x - p <= p - e else (e, True)
                continue
            if self.profile.go_around_blocking and self._blocking_vehicle(snap, lid) is not None:
                if abs(p - e) <= EPS and self._plan_go_around(snap, lid):
                    return e, False
                return e, abs(p - e) <= EPS
            if not self._safe(v):
                return e, True
        return plan.width, False

    def _plan_go_around(self, snap: WorldSnapshot, lane: int) -> bool:
        plan = self.plan
        blocker = self._blocking_vehicle(snap, lane)
        if blocker is None:
            return False
        arm = self.net.arms[plan.ref.arm]
        ax = arm.axis
        ends = sorted((blocker.front[ax], blocker.rear[ax]))
        margin = self.radius + SIDESTEP_MARGIN
        options = [c for c in (ends[0] - margin, ends[1] + margin) if abs(clamp_jaywalk(self.net, arm, c) - c) < EPS]
        if not options:
            return False
        plan.coord_target = min(options, key=lambda c: abs(c - plan.coord))
        return True

    def _blocking_vehicle(self, snap: WorldSnapshot, lane: int) -> VehicleView | None:
        plan = self.plan
        for veh, al in snap.by_arm.get(plan.ref.arm, ()):
            if al.lane != lane or not veh.stopped:
                continue
            s_cross = al.s0 + (plan.coord - al.c0) * al.sign
            if not (al.s0 - EPS <= s_cross <= al.s1 + EPS):
                continue
            d_front = s_cross - veh.s
            if -(veh.length + 2 * self.radius) <= d_front <= self.radius:
                return veh
        return None

    def _sidestep(self, step: float) -> float:
        st, plan = self.state, self.plan
        gap = plan.coord_target - plan.coord
        move = min(step, abs(gap))
        plan.coord += math.copysign(move, gap)
        old = st.position
        st.position = self._crossing_point(st.lane_progress, plan.coord)
        if math.dist(old, st.position) > EPS:
            st.heading = heading_deg(old, st.position)
        if abs(plan.coord_target - plan.coord) <= EPS:
            plan.coord = plan.coord_target
            plan.coord_target = None
        return step - move

    def _advance(self, step: float, target: float, t: float, events: list) -> None:
        st, plan = self.state, self.plan
        p = st.lane_progress
        if target >= p:
            p = min(target, p + step)
        else:
            p = max(target, p - step)
        old = st.position
        st.lane_progress = p
        st.position = self._crossing_point(p, plan.coord)
        if math.dist(old, st.position) > EPS:
            st.heading = heading_deg(old, st.position)
        if p >= plan.width - EPS:
            self._end_crossing(t, events)

    def _end_crossing(self, t: float, events: list) -> None:
        st = self.state
        rec = self.records[-1]
        rec.cross_end = t
        rec.status = "completed"
        self._event(events, t, "cross_end", legal=rec.legal)
        st.phase = "route-walking"
        st.leg = st.crossing_index + 2
        st.crs_speed = self.profile.ped_s
        self.plan = None
        if st.leg >= len(st.waypoints):
            self._finish_walk(t, events)
        elif self._segment_kind(st.leg) != "walk":
            self._begin_intend(t, events)


def step_pedestrian(agent: PedestrianAgent, snapshot: WorldSnapshot, dt: float) -> list:
    """Advance one pedestrian by one tick; returns its events."""
    return agent.step(snapshot, dt)
