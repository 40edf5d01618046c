"""Road network: grid geometry, lanes, sidewalks, crosswalks, signals, routing and vehicle paths.

Coordinates are planar metres. The horizontal road runs along x, the optional vertical
road along y, and they meet in a single intersection centred on the origin. Traffic drives
on the right. Pedestrians walk along the curb lines; a crossing joins the two curbs of an
arm perpendicular to its axis.
"""

from __future__ import annotations

import bisect
import heapq
import math
from dataclasses import dataclass, field
from typing import Iterable

from .config import GeometryConfig, SignalConfig

Point = tuple[float, float]

EPS = 1e-9
CORNER_SETBACK = 3.0  # jaywalk candidates keep this far from the intersection box


class NetworkError(ValueError):
    pass


class UnreachableError(NetworkError):
    """No admissible walking route between two points."""


# ---------------------------------------------------------------- domain types


@dataclass(frozen=True)
class Arm:
    """One straight stretch of one road, between the intersection box and the road end."""

    id: int
    name: str  # W, E, S, N (or H / V for a road without an intersection)
    axis: int  # 0: runs along x, 1: runs along y
    lo: float
    hi: float
    half_width: float
    road: str
    outer_sign: int  # +1 if the far end is at +axis, -1 at -axis, 0 if both ends are network ends

    def contains(self, c: float, tol: float = EPS) -> bool:
        return self.lo - tol <= c <= self.hi + tol


@dataclass(frozen=True)
class Lane:
    id: int
    arm: int
    road: str
    direction: Point
    index: int  # 0 = nearest curb
    width: float
    speed_limit: float
    start: Point
    end: Point
    lateral: float  # centre coordinate across the arm axis
    inbound: bool | None  # toward the intersection; None without one

    @property
    def length(self) -> float:
        return math.dist(self.start, self.end)

    @property
    def bounds(self) -> tuple[float, float]:
        return (self.lateral - self.width / 2, self.lateral + self.width / 2)


@dataclass(frozen=True)
class Crosswalk:
    id: int
    arm: int
    coord: float  # along the arm axis
    width: float
    lane_ids: tuple[int, ...]
    signalized: bool
    controller: int | None
    ends: tuple[Point, Point]  # (side -1 curb, side +1 curb)


@dataclass(frozen=True)
class SignalController:
    id: int
    phases: tuple[tuple[str, float], ...]
    offset: float = 0.0

    @property
    def cycle(self) -> float:
        return sum(d for _, d in self.phases)

    def phase_at(self, t: float) -> str:
        """Active phase at time ``t``; periodic in the cycle length."""
        # integer microseconds keep state(t) == state(t + cycle) exact
        cyc = round(self.cycle * 1e6)
        pos = round((t - self.offset) * 1e6) % cyc
        acc = 0
        for name, dur in self.phases:
            acc += round(dur * 1e6)
            if pos < acc:
                return name
        return self.phases[-1][0]

    def time_in_phase(self, t: float) -> tuple[str, float]:
        cyc = round(self.cycle * 1e6)
        pos = round((t - self.offset) * 1e6) % cyc
        acc = 0
        for name, dur in self.phases:
            d = round(dur * 1e6)
            if pos < acc + d:
                return name, (pos - acc) / 1e6
            acc += d
        return self.phases[-1][0], 0.0


@dataclass(frozen=True)
class Sidewalk:
    id: int
    points: tuple[Point, ...]
    width: float
    cum: tuple[float, ...]
    legs: tuple[tuple[int, int], ...]  # (arm id, curb side) per polyline leg

    @property
    def length(self) -> float:
        return self.cum[-1]

    def point_at(self, s: float) -> Point:
        return _poly_point(self.points, self.cum, s)

    def project(self, p: Point) -> tuple[float, float]:
        """(arc length, distance) of the closest point of the polyline."""
        return _poly_project(self.points, self.cum, p)


@dataclass(frozen=True)
class CrossingRef:
    kind: str  # "crosswalk" or "jaywalk"
    arm: int
    coord: float
    from_side: int
    crosswalk: int | None = None

    @property
    def legal(self) -> bool:
        return self.kind == "crosswalk"


@dataclass(frozen=True)
class Route:
    waypoints: tuple[Point, ...]
    kinds: tuple[str, ...]  # per segment: walk / crosswalk / jaywalk
    crossings: tuple[CrossingRef | None, ...]  # per segment, None for walk segments
    length: float

    @property
    def involves_crossing(self) -> bool:
        return any(c is not None for c in self.crossings)

    @property
    def crossing_refs(self) -> list[CrossingRef]:
        return [c for c in self.crossings if c is not None]

    def concat(self, other: "Route") -> "Route":
        if not self.waypoints:
            return other
        if not other.waypoints:
            return self
        if math.dist(self.waypoints[-1], other.waypoints[0]) > 1e-6:
            raise NetworkError("routes are not contiguous")
        return Route(
            self.waypoints + other.waypoints[1:],
            self.kinds + other.kinds,
            self.crossings + other.crossings,
            self.length + other.length,
        )


@dataclass(frozen=True)
class PathSegment:
    seg_id: int  # lane id, or connector id (>= number of lanes)
    s0: float
    s1: float
    speed_limit: float
    is_connector: bool


@dataclass(frozen=True)
class StopLine:
    s: float
    controller: int
    approach: str  # "H", "V" (intersection approaches) or "cw" (mid-block crosswalk)
    crosswalk: int | None


@dataclass(frozen=True)
class ArmLane:
    arm: int
    lane: int
    s0: float  # path arc length at the lane start
    s1: float
    c0: float  # arm-axis coordinate at the lane start
    sign: int  # +1 if travel increases the axis coordinate


@dataclass
class VehiclePath:
    entry: int  # entry arm id
    exit: int  # exit arm id
    lane_index: int
    turn: str  # straight / left / right
    points: tuple[Point, ...]
    cum: tuple[float, ...]
    headings: tuple[float, ...]  # per polyline leg, radians
    segments: tuple[PathSegment, ...]
    arm_lanes: tuple[ArmLane, ...]
    stop_lines: tuple[StopLine, ...]
    turn_start: float  # arc length where the connector begins (inf without one)
    turn_end: float

    @property
    def length(self) -> float:
        return self.cum[-1]

    def leg_index(self, s: float) -> int:
        i = bisect.bisect_right(self.cum, s) - 1
        return min(max(i, 0), len(self.points) - 2)

    def point_at(self, s: float) -> Point:
        return _poly_point(self.points, self.cum, s)

    def heading_at(self, s: float) -> float:
        return self.headings[self.leg_index(s)]

    def segment_at(self, s: float) -> PathSegment:
        for seg in self.segments:
            if s < seg.s1:
                return seg
        return self.segments[-1]

    def s_at_coordinate(self, arm: int, c: float) -> tuple[int, float] | None:
        """(lane id, arc length) where the path crosses axis coordinate ``c`` of ``arm``."""
        for al in self.arm_lanes:
            if al.arm == arm:
                s = al.s0 + (c - al.c0) * al.sign
                if al.s0 - EPS <= s <= al.s1 + EPS:
                    return al.lane, s
        return None

    def aligned_until(self, s: float, horizon: float) -> float:
        """Arc length up to which the path keeps the heading it has at ``s``."""
        i = self.leg_index(s)
        h = self.headings[i]
        end = s + horizon
        j = i
        while j + 1 < len(self.headings) and abs(_wrap_rad(self.headings[j + 1] - h)) < math.radians(3):
            j += 1
        return min(end, self.cum[j + 1])


@dataclass
class RoadNetwork:
    geometry: GeometryConfig
    nodes: tuple[Point, ...]
    arms: tuple[Arm, ...]
    lanes: tuple[Lane, ...]
    sidewalks: tuple[Sidewalk, ...]
    crosswalks: tuple[Crosswalk, ...]
    signals: tuple[SignalController, ...]
    intersection: bool
    box: tuple[float, float]  # half extents of the intersection box (x, y)
    clearance: float
    paths: dict[tuple[int, int, int], VehiclePath] = field(default_factory=dict)
    arm_lanes_by_side: dict[tuple[int, int], tuple[int, ...]] = field(default_factory=dict)
    n_connectors: int = 0

    # -- lookup helpers

    def arm_by_name(self, name: str) -> Arm:
        for a in self.arms:
            if a.name == name:
                return a
        raise KeyError(name)

    def entry_arms(self) -> list[Arm]:
        return [a for a in self.arms if any(p[0] == a.id for p in self.paths)]

    def exits_from(self, entry: int) -> list[int]:
        return sorted({p[1] for p in self.paths if p[0] == entry})

    def straight_exit(self, entry: int) -> int | None:
        for (e, x, _), p in self.paths.items():
            if e == entry and p.turn == "straight":
                return x
        return None

    def curb(self, arm: int, side: int) -> float:
        return side * self.arms[arm].half_width

    def curb_point(self, arm: int, side: int, c: float) -> Point:
        a = self.arms[arm]
        if a.axis == 0:
            return (c, side * a.half_width)
        return (side * a.half_width, c)

    def axis_coord(self, arm: int, p: Point) -> float:
        return p[self.arms[arm].axis]

    def road_width(self, arm: int) -> float:
        return 2 * self.arms[arm].half_width

    def locate(self, p: Point, tol: float = 1e-6) -> tuple[int, float]:
        """(sidewalk id, arc length) of a walkable point."""
        best = None
        for sw in self.sidewalks:
            s, d = sw.project(p)
            if d <= tol and (best is None or d < best[2]):
                best = (sw.id, s, d)
        if best is None:
            raise NetworkError(f"point {p} is not on walkable geometry")
        return best[0], best[1]

    def curb_of(self, p: Point, tol: float = 1e-6) -> list[tuple[int, int]]:
        """(arm, side) pairs whose curb line passes through ``p``."""
        out = []
        for a in self.arms:
            across = p[1 - a.axis]
            along = p[a.axis]
            for side in (-1, 1):
                if abs(across - side * a.half_width) <= tol and a.contains(along, tol):
                    out.append((a.id, side))
        return out

    def approach_state(self, controller: int, approach: str, t: float) -> str:
        """Signal aspect (green / amber / red) shown to vehicles on an approach."""
        ctl = self.signals[controller]
        phase, into = ctl.time_in_phase(t)
        if approach == "V":
            if phase == "pedestrian_green":
                dur = dict(ctl.phases)["pedestrian_green"]
                return "amber" if dur - into <= self.clearance else "green"
            return "red"
        return {"vehicle_green": "green", "clearance": "amber"}.get(phase, "red")

    def pedestrian_walk(self, crosswalk: int, t: float) -> bool:
        cw = self.crosswalks[crosswalk]
        if not cw.signalized or cw.controller is None:
            return True
        return self.signals[cw.controller].phase_at(t) == "pedestrian_green"

    def signal_state(self, controller: int, t: float) -> str:
        return self.signals[controller].phase_at(t)


# ---------------------------------------------------------------- polyline helpers


def _cumlen(points: Iterable[Point]) -> tuple[float, ...]:
    pts = list(points)
    out = [0.0]
    for a, b in zip(pts, pts[1:]):
        out.append(out[-1] + math.dist(a, b))
    return tuple(out)


def _poly_point(points, cum, s: float) -> Point:
    if s <= 0:
        return points[0]
    if s >= cum[-1]:
        return points[-1]
    i = bisect.bisect_right(cum, s) - 1
    i = min(i, len(points) - 2)
    seg = cum[i + 1] - cum[i]
    f = 0.0 if seg <= 0 else (s - cum[i]) / seg
    a, b = points[i], points[i + 1]
    return (a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1]))


def _poly_project(points, cum, p: Point) -> tuple[float, float]:
    best_s, best_d = 0.0, math.inf
    for i in range(len(points) - 1):
        a, b = points[i], points[i + 1]
        dx, dy = b[0] - a[0], b[1] - a[1]
        seg2 = dx * dx + dy * dy
        f = 0.0 if seg2 == 0 else max(0.0, min(1.0, ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / seg2))
        q = (a[0] + f * dx, a[1] + f * dy)
        d = math.dist(p, q)
        if d < best_d - 1e-12:
            best_d, best_s = d, cum[i] + f * math.sqrt(seg2)
    return best_s, best_d


def _wrap_rad(a: float) -> float:
    return (a + math.pi) % (2 * math.pi) - math.pi


# ---------------------------------------------------------------- construction


def default_signal_phases(cfg: SignalConfig) -> tuple[tuple[str, float], ...]:
    return (
        ("vehicle_green", cfg.vehicle_green),
        ("clearance", cfg.clearance),
        ("pedestrian_green", cfg.pedestrian_green),
    )


def build_grid_network(
    geometry: GeometryConfig | None = None,
    signals: SignalConfig | None = None,
    turn_speed: float = 6.0,
) -> RoadNetwork:
    """Build the road network for ``geometry`` (defaults: the 9 x 7 node 4-way intersection)."""
    g = geometry or GeometryConfig()
    sc = signals or SignalConfig()
    for name in ("node_spacing", "lane_width", "sidewalk_width", "road_max_s", "crosswalk_width"):
        if not getattr(g, name) > 0:
            raise NetworkError(f"{name} must be > 0")
    if g.lanes_per_direction < 1:
        raise NetworkError("lanes_per_direction must be >= 1")
    if g.horizontal_nodes < 2:
        raise NetworkError("horizontal road needs >= 2 nodes")
    if g.vertical_nodes == 1 or g.vertical_nodes < 0:
        raise NetworkError("vertical road needs 0 or >= 2 nodes")

    nlanes = g.lanes_per_direction
    # a one-way road carries all lanes in one direction, so it is half as wide
    half = nlanes * g.lane_width if not g.one_way else nlanes * g.lane_width / 2
    has_v = g.vertical_nodes >= 2
    Lh = (g.horizontal_nodes - 1) / 2 * g.node_spacing
    Lv = (g.vertical_nodes - 1) / 2 * g.node_spacing if has_v else 0.0
    if has_v:
        if g.horizontal_nodes % 2 == 0 or g.vertical_nodes % 2 == 0:
            raise NetworkError("an intersection needs odd node counts so both roads share a centre node")
        if Lh <= half + CORNER_SETBACK or Lv <= half + CORNER_SETBACK:
            raise NetworkError("roads too short for the intersection box")

    nodes = [((i - (g.horizontal_nodes - 1) / 2) * g.node_spacing, 0.0) for i in range(g.horizontal_nodes)]
    if has_v:
        nodes += [
            (0.0, (j - (g.vertical_nodes - 1) / 2) * g.node_spacing)
            for j in range(g.vertical_nodes)
            if j != (g.vertical_nodes - 1) // 2
        ]

    arms: list[Arm] = []
    if has_v:
        arms.append(Arm(0, "W", 0, -Lh, -half, half, "H", -1))
        arms.append(Arm(1, "E", 0, half, Lh, half, "H", +1))
        arms.append(Arm(2, "S", 1, -Lv, -half, half, "V", -1))
        arms.append(Arm(3, "N", 1, half, Lv, half, "V", +1))
    else:
        arms.append(Arm(0, "H", 0, -Lh, Lh, half, "H", 0))

    lanes: list[Lane] = []

    def add_lanes(arm: Arm, direction: int) -> None:
        # direction: +1 travel toward +axis, -1 toward -axis
        if arm.axis == 0:
            dvec = (float(direction), 0.0)
            # right-hand traffic: +x travel uses the y < 0 half
            right_side = -direction
        else:
            dvec = (0.0, float(direction))
            right_side = direction
        for k in range(nlanes):
            lateral = right_side * (half - (k + 0.5) * g.lane_width)
            a0, a1 = (arm.lo, arm.hi) if direction > 0 else (arm.hi, arm.lo)
            if arm.axis == 0:
                start, end = (a0, lateral), (a1, lateral)
            else:
                start, end = (lateral, a0), (lateral, a1)
            inbound = None if arm.outer_sign == 0 else (direction == -arm.outer_sign)
            lanes.append(
                Lane(len(lanes), arm.id, arm.road, dvec, k, g.lane_width, g.road_max_s, start, end, lateral, inbound)
            )

    for arm in arms:
        if g.one_way:
            add_lanes(arm, +1)
        else:
            add_lanes(arm, +1)
            add_lanes(arm, -1)

    # for one-way roads the "+1" lanes all sit on the right side; spread them over the full width
    if g.one_way:
        fixed = []
        for ln in lanes:
            arm = arms[ln.arm]
            side = -1 if arm.axis == 0 else 1
            lateral = side * half - side * (ln.index + 0.5) * g.lane_width
            if arm.axis == 0:
                start, end = (ln.start[0], lateral), (ln.end[0], lateral)
            else:
                start, end = (lateral, ln.start[1]), (lateral, ln.end[1])
            fixed.append(
                Lane(ln.id, ln.arm, ln.road, ln.direction, ln.index, ln.width, ln.speed_limit, start, end, lateral, ln.inbound)
            )
        lanes = fixed

    arm_lanes_by_side: dict[tuple[int, int], tuple[int, ...]] = {}
    for arm in arms:
        own = [ln for ln in lanes if ln.arm == arm.id]
        for side in (-1, 1):
            # nearest to the ``side`` curb first
            ordered = sorted(own, key=lambda ln: -side * ln.lateral)
            arm_lanes_by_side[(arm.id, side)] = tuple(ln.id for ln in ordered)

    # -- signals and crosswalks
    phases = default_signal_phases(sc)
    signals: list[SignalController] = []
    crosswalks: list[Crosswalk] = []
    if has_v:
        signals.append(SignalController(0, phases, sc.offset))

    def add_crosswalk(arm: Arm, coord: float, controller: int | None) -> None:
        if not arm.contains(coord) or (
            arm.outer_sign != 0 and not (arm.lo + g.crosswalk_width / 2 - EPS <= coord <= arm.hi - g.crosswalk_width / 2 + EPS)
        ):
            raise NetworkError(f"crosswalk at {coord} lies off arm {arm.name}")
        lane_ids = tuple(ln.id for ln in lanes if ln.arm == arm.id)
        ends = (_curb_pt(arm, -1, coord), _curb_pt(arm, +1, coord))
        crosswalks.append(
            Crosswalk(len(crosswalks), arm.id, coord, g.crosswalk_width, lane_ids, g.signalized,
                      controller if g.signalized else None, ends)
        )

    if has_v:
        if g.center_crosswalk:
            west = arms[0]
            add_crosswalk(west, west.hi - 1.0 - g.crosswalk_width / 2, 0 if g.signalized else None)
        for arm in arms:
            for k in g.crosswalk_nodes:
                coord = arm.outer_sign * k * g.node_spacing
                ctl = None
                if g.signalized:
                    ctl = len(signals)
                    signals.append(SignalController(ctl, phases, sc.offset))
                add_crosswalk(arm, coord, ctl)
    else:
        arm = arms[0]
        coords = []
        if g.center_crosswalk:
            coords.append(0.0)
        for k in g.crosswalk_nodes:
            coords += [-k * g.node_spacing, k * g.node_spacing]
        for coord in sorted(set(coords)):
            ctl = None
            if g.signalized:
                ctl = len(signals)
                signals.append(SignalController(ctl, phases, sc.offset))
            add_crosswalk(arm, coord, ctl)

    # -- sidewalks (curb lines)
    sidewalks: list[Sidewalk] = []

    def add_sidewalk(points: list[Point], legs: list[tuple[int, int]]) -> None:
        sidewalks.append(Sidewalk(len(sidewalks), tuple(points), g.sidewalk_width, _cumlen(points), tuple(legs)))

    if has_v:
        for sx in (1, -1):
            for sy in (1, -1):
                harm = 1 if sx > 0 else 0
                varm = 3 if sy > 0 else 2
                add_sidewalk(
                    [(sx * Lh, sy * half), (sx * half, sy * half), (sx * half, sy * Lv)],
                    [(harm, sy), (varm, sx)],
                )
    else:
        add_sidewalk([(-Lh, half), (Lh, half)], [(0, 1)])
        add_sidewalk([(-Lh, -half), (Lh, -half)], [(0, -1)])

    net = RoadNetwork(
        geometry=g,
        nodes=tuple(nodes),
        arms=tuple(arms),
        lanes=tuple(lanes),
        sidewalks=tuple(sidewalks),
        crosswalks=tuple(crosswalks),
        signals=tuple(signals),
        intersection=has_v,
        box=(half, half) if has_v else (0.0, 0.0),
        clearance=sc.clearance,
        arm_lanes_by_side=arm_lanes_by_side,
    )
    _build_vehicle_paths(net, turn_speed)
    return net


def _curb_pt(arm: Arm, side: int, c: float) -> Point:
    return (c, side * arm.half_width) if arm.axis == 0 else (side * arm.half_width, c)


# ---------------------------------------------------------------- vehicle paths

# lateral acceleration bound that caps speed on tight turns (m/s^2)
TURN_LATERAL_ACCEL = 5.5  # m/s^2; caps connector speed at sqrt(a * radius)


def _build_vehicle_paths(net: RoadNetwork, turn_speed: float) -> None:
    lanes = net.lanes
    conn_id = len(lanes)
    if not net.intersection:
        for ln in lanes:
            pts = (ln.start, ln.end)
            net.paths[(ln.arm, ln.arm, ln.id)] = _make_path(
                net, ln.arm, ln.arm, ln.index, "straight", [(ln, None)], [pts], [ln.speed_limit]
            )
        net.n_connectors = 0
        return

    for entry in net.arms:
        for exit_ in net.arms:
            if exit_.id == entry.id:
                continue
            for k in range(net.geometry.lanes_per_direction):
                lin = next(ln for ln in lanes if ln.arm == entry.id and ln.inbound and ln.index == k)
                lout = next(ln for ln in lanes if ln.arm == exit_.id and ln.inbound is False and ln.index == k)
                cross = lin.direction[0] * lout.direction[1] - lin.direction[1] * lout.direction[0]
                if abs(cross) < EPS:
                    turn = "straight"
                    conn_pts = [lin.end, lout.start]
                    limit = lin.speed_limit
                else:
                    turn = "left" if cross > 0 else "right"
                    if lin.direction[0] != 0:
                        corner = (lout.start[0], lin.end[1])
                    else:
                        corner = (lin.end[0], lout.start[1])
                    conn_pts = _bezier(lin.end, corner, lout.start, 8)
                    radius = min(math.dist(lin.end, corner), math.dist(corner, lout.start))
                    limit = min(turn_speed, math.sqrt(TURN_LATERAL_ACCEL * radius), lin.speed_limit)
                pts_list = [(lin.start, lin.end), tuple(conn_pts), (lout.start, lout.end)]
                net.paths[(entry.id, exit_.id, k)] = _make_path(
                    net, entry.id, exit_.id, k, turn, [(lin, None), (None, conn_id), (lout, None)],
                    pts_list, [lin.speed_limit, limit, lout.speed_limit],
                )
                conn_id += 1
    net.n_connectors = conn_id - len(lanes)


def _bezier(a: Point, c: Point, b: Point, n: int) -> list[Point]:
    out = []
    for i in range(n + 1):
        t = i / n
        u = 1 - t
        out.append((u * u * a[0] + 2 * u * t * c[0] + t * t * b[0], u * u * a[1] + 2 * u * t * c[1] + t * t * b[1]))
    return out


def _make_path(net, entry, exit_, k, turn, parts, pts_list, limits) -> VehiclePath:
    points: list[Point] = []
    for pts in pts_list:
        for p in pts:
            if not points or math.dist(points[-1], p) > 1e-9:
                points.append(p)
    cum = _cumlen(points)
    headings = tuple(
        math.atan2(b[1] - a[1], b[0] - a[0]) for a, b in zip(points, points[1:])
    )
    segments = []
    arm_lanes = []
    stop_lines = []
    s = 0.0
    turn_start = turn_end = math.inf
    for (lane, cid), pts, lim in zip(parts, pts_list, limits):
        seg_len = _cumlen(pts)[-1]
        if lane is not None:
            segments.append(PathSegment(lane.id, s, s + seg_len, lim, False))
            arm = net.arms[lane.arm]
            sign = 1 if (lane.direction[arm.axis] > 0) else -1
            arm_lanes.append(ArmLane(arm.id, lane.id, s, s + seg_len, lane.start[arm.axis], sign))
            for cw in net.crosswalks:
                if cw.arm != arm.id:
                    continue
                # centre crosswalk: only the approach into the box is signal-controlled
                if lane.inbound is False and cw.controller == 0:
                    continue
                c_near = cw.coord - sign * cw.width / 2
                s_line = s + (c_near - lane.start[arm.axis]) * sign - 1.0
                if s - EPS <= s_line <= s + seg_len and cw.signalized and cw.controller is not None:
                    approach = "H" if cw.controller == 0 else "cw"
                    stop_lines.append(StopLine(s_line, cw.controller, approach, cw.id))
            if lane.inbound and net.intersection:
                stop_lines.append(StopLine(s + seg_len - 0.5, 0, "H" if arm.road == "H" else "V", None))
        else:
            segments.append(PathSegment(cid, s, s + seg_len, lim, True))
            turn_start, turn_end = s, s + seg_len
        s += seg_len
    stop_lines.sort(key=lambda sl: sl.s)
    return VehiclePath(
        entry, exit_, k, turn, tuple(points), cum, headings, tuple(segments), tuple(arm_lanes),
        tuple(stop_lines), turn_start, turn_end,
    )


# ---------------------------------------------------------------- queries


def crossing_lanes(
    net: RoadNetwork, point: Point, heading: float | None = None, arm: int | None = None
) -> list[tuple[int, float]]:
    """Lanes met when crossing from a curb point, nearest first, with entry offsets from the curb.

    ``heading`` (degrees), if given, must point into the road.
    """
    hits = net.curb_of(point)
    if arm is not None:
        hits = [h for h in hits if h[0] == arm]
    if not hits:
        raise NetworkError(f"point {point} is not on a curb adjacent to a road")
    if len(hits) > 1 and heading is not None:
        # a corner touches two arms: pick the one whose road the heading points into
        hx, hy = math.cos(math.radians(heading)), math.sin(math.radians(heading))
        hits = [h for h in hits if (hx, hy)[1 - net.arms[h[0]].axis] * -h[1] > 0.5] or hits
    arm_id, side = hits[0]
    a = net.arms[arm_id]
    if heading is not None:
        h = math.radians(heading)
        inward = (math.cos(h), math.sin(h))[1 - a.axis] * -side
        if inward <= 0:
            raise NetworkError("heading points away from the road")
    curb = side * a.half_width
    out = []
    for lid in net.arm_lanes_by_side[(arm_id, side)]:
        ln = net.lanes[lid]
        near_edge = ln.lateral + side * ln.width / 2
        out.append((lid, abs(curb - near_edge)))
    return out


def nearest_crosswalk(
    net: RoadNetwork, position: Point, signalized_only: bool = False
) -> tuple[int, float] | None:
    """Closest crosswalk end reachable along the sidewalk; None if there is no candidate."""
    sw_id, s = net.locate(position)
    sw = net.sidewalks[sw_id]
    best = None
    for cw in net.crosswalks:
        if signalized_only and not cw.signalized:
            continue
        for end in cw.ends:
            es, d = sw.project(end)
            if d > 1e-6:
                continue
            dist = abs(es - s)
            if best is None or dist < best[1] - 1e-12:
                best = (cw.id, dist)
    return best


@dataclass
class _Graph:
    points: dict[int, Point] = field(default_factory=dict)
    adj: dict[int, list[tuple[int, float, tuple]]] = field(default_factory=dict)
    keys: dict[tuple[int, float], int] = field(default_factory=dict)

    def node(self, sw: int, s: float, p: Point) -> int:
        key = (sw, round(s, 6))
        if key not in self.keys:
            nid = len(self.points)
            self.keys[key] = nid
            self.points[nid] = p
            self.adj[nid] = []
        return self.keys[key]

    def edge(self, a: int, b: int, length: float, info: tuple) -> None:
        self.adj[a].append((b, length, info))
        self.adj[b].append((a, length, info))


def jaywalk_candidates(net: RoadNetwork, arm: Arm) -> list[float]:
    """Arm-axis coordinates where a violating pedestrian may start a jaywalk."""
    cand = set()
    for node in net.nodes:
        c = node[arm.axis]
        if node[1 - arm.axis] == 0 and _jaywalkable(net, arm, c):
            cand.add(round(c, 9))
    if arm.outer_sign != 0:
        inner = arm.lo if arm.outer_sign > 0 else arm.hi
        cand.add(round(inner + arm.outer_sign * CORNER_SETBACK, 9))
        outer = arm.hi if arm.outer_sign > 0 else arm.lo
        cand.add(round(outer, 9))
    else:
        cand.update((round(arm.lo, 9), round(arm.hi, 9)))
    for cw in net.crosswalks:
        if cw.arm == arm.id:
            cand.add(round(cw.coord, 9))
    return sorted(cand)


def _jaywalkable(net: RoadNetwork, arm: Arm, c: float) -> bool:
    if not arm.contains(c):
        return False
    if arm.outer_sign == 0:
        return True
    inner = arm.lo if arm.outer_sign > 0 else arm.hi
    return (c - inner) * arm.outer_sign >= CORNER_SETBACK - EPS


def clamp_jaywalk(net: RoadNetwork, arm: Arm, c: float) -> float:
    if arm.outer_sign == 0:
        lo, hi = arm.lo + 1.0, arm.hi - 1.0
    elif arm.outer_sign > 0:
        lo, hi = arm.lo + CORNER_SETBACK, arm.hi - 1.0
    else:
        lo, hi = arm.lo + 1.0, arm.hi - CORNER_SETBACK
    return min(max(c, lo), hi)


def _build_walk_graph(
    net: RoadNetwork, law_status: str, extra: list[Point], signalized_only: bool
) -> _Graph:
    g = _Graph()
    per_sw: dict[int, dict[float, Point]] = {sw.id: {} for sw in net.sidewalks}

    def add_point(p: Point) -> tuple[int, float]:
        sw, s = net.locate(p, tol=1e-6)
        per_sw[sw].setdefault(round(s, 6), (float(p[0]), float(p[1])))
        return sw, s

    for sw in net.sidewalks:
        for s, p in zip(sw.cum, sw.points):
            per_sw[sw.id][round(s, 6)] = p
    for arm in net.arms:
        for side in (-1, 1):
            for n in net.nodes:
                c = n[arm.axis]
                if n[1 - arm.axis] == 0 and arm.contains(c):
                    add_point(_curb_pt(arm, side, c))
    for cw in net.crosswalks:
        for end in cw.ends:
            add_point(end)
    jay: dict[int, set[float]] = {a.id: set() for a in net.arms}
    if law_status == "violating":
        for arm in net.arms:
            jay[arm.id].update(jaywalk_candidates(net, arm))
    for p in extra:
        add_point(p)
        if law_status == "violating":
            for arm_id, _side in net.curb_of(p):
                c = p[net.arms[arm_id].axis]
                if _jaywalkable(net, net.arms[arm_id], c):
                    jay[arm_id].add(round(c, 9))
    for arm in net.arms:
        for c in jay[arm.id]:
            for side in (-1, 1):
                add_point(_curb_pt(arm, side, c))

    for sw in net.sidewalks:
        ss = sorted(per_sw[sw.id])
        ids = [g.node(sw.id, s, per_sw[sw.id][s]) for s in ss]
        for (s0, a), (s1, b) in zip(zip(ss, ids), zip(ss[1:], ids[1:])):
            g.edge(a, b, s1 - s0, ("walk",))

    def node_at(p: Point) -> int:
        sw, s = net.locate(p, tol=1e-6)
        return g.node(sw, s, per_sw[sw][round(s, 6)])

    if law_status == "obedient":
        for cw in net.crosswalks:
            if signalized_only and not cw.signalized:
                continue
            a, b = node_at(cw.ends[0]), node_at(cw.ends[1])
            g.edge(a, b, math.dist(*cw.ends), ("crosswalk", cw.arm, cw.coord, cw.id))
    elif law_status == "violating":
        for arm in net.arms:
            for c in sorted(jay[arm.id]):
                p0, p1 = _curb_pt(arm, -1, c), _curb_pt(arm, 1, c)
                g.edge(node_at(p0), node_at(p1), math.dist(p0, p1), ("jaywalk", arm.id, c, None))
    elif law_status != "none":
        raise NetworkError(f"law status must be obedient or violating, got {law_status!r}")
    return g


def _walk_key(p: Point) -> tuple[float, float]:
    return (round(p[0], 6), round(p[1], 6))


def shortest_path(
    net: RoadNetwork,
    origin: Point,
    destination: Point,
    law_status: str,
    signalized_only: bool = False,
) -> Route:
    """Minimal-length admissible walking route.

    Obedient pedestrians may cross only on crosswalks (signalised ones if requested);
    violating ones only by jaywalking. Ties go to fewer crossings, then to the
    lexicographically smaller waypoint sequence.
    """
    net.locate(origin)
    net.locate(destination)
    if math.dist(origin, destination) < 1e-9:
        return Route((origin,), (), (), 0.0)
    g = _build_walk_graph(net, law_status, [origin, destination], signalized_only)
    src = _node_of(net, g, origin)
    dst = _node_of(net, g, destination)
    best = dijkstra(g.adj, g.points, src, dst)
    if best is None:
        raise UnreachableError(f"no {law_status} route from {origin} to {destination}")
    return _route_from(net, g, best)


def _node_of(net: RoadNetwork, g: _Graph, p: Point) -> int:
    sw, s = net.locate(p, tol=1e-6)
    return g.keys[(sw, round(s, 6))]


def dijkstra(adj, points, src: int, dst: int):
    """Label-setting search on (length, crossings, waypoint sequence) keys."""
    start = (0.0, 0, (_walk_key(points[src]),), (src,))
    heap = [start]
    settled: dict[int, tuple] = {}
    while heap:
        length, ncross, wkeys, path = heapq.heappop(heap)
        node = path[-1]
        if node in settled:
            continue
        settled[node] = (length, ncross, wkeys, path)
        if node == dst:
            return length, ncross, path
        for nbr, w, info in adj[node]:
            if nbr in settled:
                continue
            heapq.heappush(
                heap,
                (round(length + w, 9), ncross + (info[0] != "walk"), wkeys + (_walk_key(points[nbr]),), path + (nbr,)),
            )
    return None


def _route_from(net: RoadNetwork, g: _Graph, best) -> Route:
    length, _, path = best
    waypoints = [g.points[n] for n in path]
    kinds, crossings = [], []
    for a, b in zip(path, path[1:]):
        info = next(inf for nb, _, inf in g.adj[a] if nb == b)
        kinds.append(info[0])
        if info[0] == "walk":
            crossings.append(None)
        else:
            _, arm_id, c, cw_id = info
            arm = net.arms[arm_id]
            side = 1 if g.points[a][1 - arm.axis] > 0 else -1
            crossings.append(CrossingRef(info[0], arm_id, c, side, cw_id))
    return Route(tuple(waypoints), tuple(kinds), tuple(crossings), length)


def walk_route(net: RoadNetwork, origin: Point, destination: Point) -> Route:
    """Route along a single sidewalk, no crossing."""
    sw0, s0 = net.locate(origin)
    sw1, s1 = net.locate(destination)
    if sw0 != sw1:
        raise UnreachableError("points lie on different sidewalks")
    sw = net.sidewalks[sw0]
    lo, hi = sorted((s0, s1))
    inner = [sw.points[i] for i, c in enumerate(sw.cum) if lo + 1e-9 < c < hi - 1e-9]
    if s1 < s0:
        inner.reverse()
    pts = [origin] + inner + [destination]
    pts = [p for i, p in enumerate(pts) if i == 0 or math.dist(p, pts[i - 1]) > 1e-9]
    if len(pts) == 1:
        return Route((origin,), (), (), 0.0)
    return Route(tuple(pts), ("walk",) * (len(pts) - 1), (None,) * (len(pts) - 1), abs(s1 - s0))


def crossing_route(net: RoadNetwork, ref: CrossingRef) -> Route:
    p0 = _curb_pt(net.arms[ref.arm], ref.from_side, ref.coord)
    p1 = _curb_pt(net.arms[ref.arm], -ref.from_side, ref.coord)
    return Route((p0, p1), (ref.kind,), (ref,), math.dist(p0, p1))


def random_sidewalk_point(net: RoadNetwork, u: float, sidewalks: list[int] | None = None) -> Point:
    """Point at fraction ``u`` of the total length of the chosen sidewalks."""
    sws = [net.sidewalks[i] for i in (sidewalks if sidewalks is not None else range(len(net.sidewalks)))]
    total = sum(sw.length for sw in sws)
    target = u * total
    for sw in sws:
        if target <= sw.length:
            return sw.point_at(target)
        target -= sw.length
    return sws[-1].point_at(sws[-1].length)
