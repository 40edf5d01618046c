"""Fixed-timestep simulation loop with synchronous updates, collision detection and metrics.

Every tick reads one frozen snapshot; vehicles and pedestrians both compute their successor
states from it and the results are committed together, so iteration order never matters.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass, field
from typing import Sequence

from . import _rng
from .agents import PedestrianProfile, generate_population
from .config import ScenarioConfig, validate
from .decision import PedestrianAgent, VehicleView, WorldSnapshot
from .scene import ArmLane, Point, RoadNetwork, VehiclePath, build_grid_network
from .vehicles import (
    LOOKAHEAD,
    Spawner,
    StepContext,
    VehicleState,
    pedestrians_ahead,
    point_on_path,
    step_vehicle,
    stop_line_view,
    turn_intent,
)

ON_ROAD = ("crossing", "mid-road-waiting")


@dataclass(frozen=True)
class CollisionEvent:
    time: float
    ped_id: int
    veh_id: int
    lane: int
    ped_phase: str
    relative_speed: float


@dataclass
class MetricsSummary:
    rows: list[dict]
    aggregates: dict
    collisions: list[CollisionEvent]


@dataclass
class SimulationResult:
    summary: MetricsSummary
    events: list[tuple]
    population: list[PedestrianProfile]
    vehicle_trace: list[tuple] = field(default_factory=list)
    ttc_trace: list[tuple] = field(default_factory=list)
    ped_trace: list[tuple] = field(default_factory=list)
    seed: int = 0
    steps: int = 0


# ---------------------------------------------------------------- world


class World:
    """All mutable simulation state of one run."""

    def __init__(self, cfg: ScenarioConfig, seed: int | None = None, network: RoadNetwork | None = None):
        validate(cfg)
        self.cfg = cfg
        self.seed = cfg.simulation.seed if seed is None else int(seed)
        self.dt = cfg.simulation.dt
        self.network = network or build_grid_network(cfg.geometry, cfg.signals, cfg.vehicles.turn_speed)
        self.step_index = 0
        self.road_max_s = cfg.geometry.road_max_s
        self.population = generate_population(cfg, _rng.stream(self.seed, "population"), self.network)
        self.agents = [
            PedestrianAgent(p, self.network, cfg.decision, cfg.pedestrians, _rng.stream(self.seed, "decisions", p.id), self.dt)
            for p in self.population
        ]
        self.pending = sorted(self.agents, key=lambda a: (a.profile.depart_time, a.id))
        self.vehicles: list[VehicleState] = []
        self.spawner = None
        if not math.isinf(cfg.vehicles.period):
            self.spawner = Spawner(cfg.vehicles, self.network, _rng.stream(self.seed, "vehicle-spawn"), self.road_max_s)
        self.events: list[tuple] = []
        self.collisions: list[CollisionEvent] = []
        self.contacts: set[tuple[int, int]] = set()
        self.spawned_vehicles = 0
        self.departed_vehicles = 0
        self.vehicle_trace: list[tuple] = []
        self.ttc_trace: list[tuple] | None = [] if cfg.simulation.ttc_trace else None
        self.ped_trace: list[tuple] = []
        self.max_speed_ratio = 0.0
        if self.ttc_trace is not None:
            for a in self.agents:
                a.ttc_trace = self.ttc_trace
        self._straight = {}
        for (e, x, k), p in self.network.paths.items():
            if p.turn == "straight":
                self._straight[(e, k)] = p

    @property
    def t(self) -> float:
        return self.step_index * self.dt

    # -- snapshot
    def inferred_path(self, vs: VehicleState) -> VehiclePath:
        intent, indicator = turn_intent(vs, self.cfg.vehicles.signal_distance)
        path = vs.path
        if intent == "straight" or indicator != "none" or vs.s >= path.turn_start:
            return path
        return self._straight.get((path.entry, path.lane_index), path)

    def snapshot(self) -> WorldSnapshot:
        net = self.network
        views = []
        by_arm: dict[int, list[tuple[VehicleView, ArmLane]]] = {a.id: [] for a in net.arms}
        for vs in self.vehicles:
            seg = vs.path.segment_at(vs.s)
            arm = None if seg.is_connector else net.lanes[seg.seg_id].arm
            inferred = self.inferred_path(vs)
            view = VehicleView(
                vs.id, vs.s, vs.v, vs.a, min(self.road_max_s, vs.profile.max_speed), vs.length,
                vs.profile.width, vs.front(), vs.rear(), math.degrees(vs.heading()), arm, seg.seg_id,
                vs.path, inferred,
            )
            views.append(view)
            rear = vs.s - vs.length - 1.0
            for al in inferred.arm_lanes:
                if al.s1 > rear:
                    by_arm[al.arm].append((view, al))
        dc = self.cfg.decision
        return WorldSnapshot(self.t, net, dc.ttc_method, self.road_max_s, views, by_arm, dc.ttc_noise_th, dc.yield_ttc, dc.sight_distance)

    # -- vehicle perception
    def _segment_index(self) -> dict[int, list[tuple[float, float, VehicleState]]]:
        """segment id -> (front offset, rear offset, vehicle) over every segment a body touches."""
        index: dict[int, list[tuple[float, float, VehicleState]]] = {}
        for vs in self.vehicles:
            rear = vs.s - vs.length
            segs = vs.path.segments
            for i, seg in enumerate(segs):
                if seg.s1 > rear and seg.s0 <= vs.s:
                    index.setdefault(seg.seg_id, []).append((vs.s - seg.s0, rear - seg.s0, vs))
                    if seg.is_connector and seg.s0 <= vs.s < seg.s1 and i + 1 < len(segs):
                        # merging: project onto the exit lane with a negative offset
                        nxt = segs[i + 1]
                        index.setdefault(nxt.seg_id, []).append((vs.s - nxt.s0, rear - nxt.s0, vs))
        return index

    def _leader(self, vs: VehicleState, index) -> tuple[float, float, float]:
        """(bumper gap, speed, comfortable decel) of the nearest vehicle ahead along the path."""
        acc = None  # path distance from this front bumper to the start of ``seg``
        for seg in vs.path.segments:
            if acc is None:
                if seg.s1 <= vs.s:
                    continue
                acc = seg.s0 - vs.s
            best = None
            for front_off, rear_off, other in index.get(seg.seg_id, ()):
                if other is vs or acc + front_off <= 1e-9:
                    continue
                gap = acc + rear_off
                if best is None or gap < best[0]:
                    best = (gap, other)
            if best is not None:
                return max(best[0], 0.0), best[1].v, best[1].profile.decel
            acc = seg.s1 - vs.s
            if acc > LOOKAHEAD:
                break
        return math.inf, 0.0, 4.5

    def _vehicle_updates(self, peds_xy: list[tuple[float, float, float]]) -> list[VehicleState]:
        vc = self.cfg.vehicles
        index = self._segment_index()
        out = []
        for vs in self.vehicles:
            gap, lv, ld = self._leader(vs, index)
            lines, aspects = stop_line_view(vs, self.network, self.t)
            ctx = StepContext(
                time=self.t,
                leader_gap=gap,
                leader_speed=lv,
                leader_decel=ld,
                peds=pedestrians_ahead(vs, peds_xy, vc.sight_distance),
                road_max_s=self.road_max_s,
                headway=vc.headway,
                min_gap=vc.min_gap,
                sight=vc.sight_distance,
                aspects=aspects,
                stop_lines=lines,
            )
            out.append(step_vehicle(vs, self.network, ctx, self.dt))
        return out

    # -- main loop
    def step(self) -> None:
        t = self.t
        if self.spawner is not None:
            new = self.spawner.step(t, self.dt, self.vehicles)
            self.vehicles.extend(new)
            self.spawned_vehicles += len(new)
        while self.pending and self.pending[0].profile.depart_time <= t + 1e-9:
            agent = self.pending.pop(0)
            self.events.extend(agent.depart(t))
        snap = self.snapshot()
        walkers = [a for a in self.agents if a.state.active and a.state.phase not in ("done", "collided")]
        peds_xy = [(a.state.position[0], a.state.position[1], a.radius) for a in walkers if a.on_road]
        new_vehicles = self._vehicle_updates(peds_xy)
        old_ped = {a.id: (a.state.position, a.on_road, a.state.phase) for a in walkers}
        for a in walkers:
            self.events.extend(a.step(snap, self.dt))
        old_vehicles = self.vehicles
        self.vehicles = new_vehicles
        self._detect(old_vehicles, new_vehicles, walkers, old_ped, t)
        kept = []
        for vs in self.vehicles:
            cap = min(self.road_max_s, vs.profile.max_speed)
            self.max_speed_ratio = max(self.max_speed_ratio, vs.v / cap)
            if vs.s - vs.length >= vs.path.length:
                self.departed_vehicles += 1
            else:
                kept.append(vs)
        self.vehicles = kept
        if self.cfg.simulation.vehicle_trace:
            sd = self.cfg.vehicles.signal_distance
            for vs in self.vehicles:
                self.vehicle_trace.append((round(t + self.dt, 6), vs.id, vs.lane, vs.s, vs.v, vs.a, vs.signal(sd)))
        if self.cfg.simulation.ped_trace:
            for a in walkers:
                st = a.state
                self.ped_trace.append((round(t + self.dt, 6), a.id, st.phase, st.position[0], st.position[1], st.c_gap, st.crs_speed, st.wt_steps * self.dt))
        self.step_index += 1

    def _detect(self, old_v, new_v, walkers, old_ped, t) -> None:
        hits = detect_collisions(old_v, new_v, walkers, old_ped, self.dt)
        current = set()
        for ped, veh, rel in hits:
            key = (ped.id, veh.id)
            current.add(key)
            if key in self.contacts or ped.state.phase == "collided":
                continue
            ev = CollisionEvent(round(t + self.dt, 6), ped.id, veh.id, veh.lane, old_ped[ped.id][2], rel)
            self.collisions.append(ev)
            self.events.append((ev.time, ped.id, "collision", {"veh_id": veh.id, "relative_speed": rel}))
            if ped.records and ped.records[-1].status in ("crossing", "waiting"):
                ped.records[-1].status = "collided"
            ped.state.phase = "collided"
        self.contacts = current

    def run(self, steps: int | None = None) -> SimulationResult:
        n = self.cfg.simulation.steps if steps is None else steps
        for _ in range(n):
            self.step()
        return self.result()

    def result(self) -> SimulationResult:
        summary = collect_metrics(self)
        events = sorted(self.events, key=lambda e: (e[0], e[1]))
        return SimulationResult(
            summary, events, self.population, self.vehicle_trace, self.ttc_trace or [], self.ped_trace,
            self.seed, self.step_index,
        )


# ---------------------------------------------------------------- collisions


def body_pieces(path: VehiclePath, s: float, length: float) -> list[tuple[Point, Point]]:
    """Centre-line pieces of a vehicle body between its rear and front bumpers."""
    rear = s - length
    pts = [point_on_path(path, rear)]
    for c, p in zip(path.cum, path.points):
        if rear < c < s:
            pts.append(p)
    pts.append(point_on_path(path, s))
    return [(a, b) for a, b in zip(pts, pts[1:]) if math.dist(a, b) > 1e-9] or [(pts[0], pts[-1])]


def circle_hits_body(center: Point, radius: float, pieces, half_width: float) -> bool:
    for a, b in pieces:
        dx, dy = b[0] - a[0], b[1] - a[1]
        seg = math.hypot(dx, dy)
        if seg <= 1e-12:
            continue
        ux, uy = dx / seg, dy / seg
        px, py = center[0] - a[0], center[1] - a[1]
        along = px * ux + py * uy
        lat = -px * uy + py * ux
        ox = max(0.0, -along, along - seg)
        oy = max(0.0, abs(lat) - half_width)
        if ox * ox + oy * oy < radius * radius:
            return True
    return False


def detect_collisions(old_v, new_v, walkers, old_ped, dt: float):
    """Swept circle-versus-body overlap between consecutive states.

    Positions are interpolated linearly over the tick in enough substeps that neither party
    moves more than half a pedestrian radius between samples.
    """
    hits = []
    cand = [a for a in walkers if a.on_road or old_ped.get(a.id, (None, False))[1]]
    if not cand:
        return hits
    old_by_id = {vs.id: vs for vs in old_v}
    for a in cand:
        p1 = a.state.position
        p0 = old_ped[a.id][0]
        r = a.radius
        for vs in new_v:
            ov = old_by_id.get(vs.id, vs)
            f = vs.front()
            reach = vs.length + 3.0 + abs(vs.s - ov.s)
            if abs(f[0] - p1[0]) > reach or abs(f[1] - p1[1]) > reach:
                continue
            move = max(abs(vs.s - ov.s), math.dist(p0, p1))
            n = max(1, math.ceil(move / (0.5 * r)))
            hw = vs.profile.width / 2
            for k in range(1, n + 1):
                w = k / n
                s = ov.s + w * (vs.s - ov.s)
                c = (p0[0] + w * (p1[0] - p0[0]), p0[1] + w * (p1[1] - p0[1]))
                if circle_hits_body(c, r, body_pieces(vs.path, s, vs.length), hw):
                    hits.append((a, vs, _relative_speed(vs, p0, p1, dt)))
                    break
    return hits


def _relative_speed(vs, p0, p1, dt) -> float:
    h = vs.heading()
    vx, vy = vs.v * math.cos(h), vs.v * math.sin(h)
    px, py = (p1[0] - p0[0]) / dt, (p1[1] - p0[1]) / dt
    return math.hypot(vx - px, vy - py)


# ---------------------------------------------------------------- metrics


def _mean_std(values: Sequence[float]) -> tuple[float | None, float | None, int]:
    """Mean, sample stdev and count over the finite values (``None`` statistics when empty)."""
    vals = [v for v in values if v is not None and math.isfinite(v)]
    if not vals:
        return None, None, 0
    mean = statistics.fmean(vals)
    std = statistics.stdev(vals) if len(vals) > 1 else 0.0
    return mean, std, len(vals)


def collect_metrics(world: World) -> MetricsSummary:
    """Per-crossing rows plus run-level aggregates (absent statistics are ``None``)."""
    rows = []
    for agent in world.agents:
        p = agent.profile
        collided = agent.state.phase == "collided"
        for rec in agent.records:
            rows.append(
                {
                    "ped_id": p.id,
                    "crossing": rec.index,
                    "kind": rec.kind,
                    "legal": int(rec.legal),
                    "arm": world.network.arms[rec.arm].name,
                    "type": p.ped_type,
                    "trait": p.ped_trait,
                    "law_obedience": p.ped_lo,
                    "pattern": p.crossing_pattern,
                    "speed_mps": p.ped_s,
                    "crs_speed_mps": rec.crs_speed,
                    "gap_s": p.ped_gap,
                    "c_gap_s": rec.c_gap,
                    "wait_start_s": rec.wait_start,
                    "cross_start_s": rec.cross_start,
                    "cross_end_s": rec.cross_end,
                    "wait_time_s": rec.wait_time,
                    "min_ttc_s": rec.min_ttc,
                    "crossing_duration_s": None if rec.cross_end is None else rec.cross_end - rec.cross_start,
                    "midroad_waits": rec.midroad_waits,
                    "status": rec.status,
                    "collided": int(collided),
                }
            )
    started = [r for r in rows if r["cross_start_s"] is not None and not r["collided"]]
    completed = [r for r in rows if r["status"] == "completed"]
    illegal = [r for r in completed if not r["legal"]]
    mean_wait, std_wait, n_wait = _mean_std([r["wait_time_s"] for r in started])
    mean_ttc, std_ttc, n_ttc = _mean_std([r["min_ttc_s"] for r in started])
    mean_dur, std_dur, n_dur = _mean_std([r["crossing_duration_s"] for r in completed])
    speeds = [p.ped_s for p in world.population]
    agg = {
        "steps": world.step_index,
        "sim_time_s": round(world.step_index * world.dt, 6),
        "pedestrians": len(world.population),
        "departed_pedestrians": sum(1 for a in world.agents if a.state.active),
        "arrived_pedestrians": sum(1 for a in world.agents if a.state.phase == "done"),
        "vehicles_spawned": world.spawned_vehicles,
        "vehicles_departed": world.departed_vehicles,
        "crossings_started": len(started),
        "crossings_completed": len(completed),
        "illegal_crossings": len(illegal),
        "illegal_pct": (100.0 * len(illegal) / len(completed)) if completed else None,
        "n_wait": n_wait,
        "mean_wait_s": mean_wait,
        "std_wait_s": std_wait,
        "n_min_ttc": n_ttc,
        "mean_min_ttc_s": mean_ttc,
        "std_min_ttc_s": std_ttc,
        "n_crossing_duration": n_dur,
        "mean_crossing_duration_s": mean_dur,
        "std_crossing_duration_s": std_dur,
        "mean_walking_speed_mps": statistics.fmean(speeds) if speeds else None,
        "collisions": len(world.collisions),
        "min_c_gap_s": min((a.gap_trace_min for a in world.agents if a.state.active), default=None),
        "max_speed_ratio": world.max_speed_ratio,
    }
    if agg["min_c_gap_s"] is not None and math.isinf(agg["min_c_gap_s"]):
        agg["min_c_gap_s"] = None
    return MetricsSummary(rows, agg, list(world.collisions))


def run_simulation(cfg: ScenarioConfig, seed: int | None = None, steps: int | None = None) -> SimulationResult:
    """Validate, build and run one scenario; the result is a pure function of (cfg, seed)."""
    world = World(cfg, seed)
    return world.run(steps)
