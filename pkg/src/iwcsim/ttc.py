"""Time-to-collision estimation: relevance filtering, TTC methods, adjustment and perceptual noise.

Angles are in degrees with the usual mathematical convention (0 along +x, counter-clockwise
positive). Distances are metres, speeds m/s, times seconds. ``math.inf`` marks a vehicle that
never reaches the pedestrian.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .config import TTC_METHODS

INF = math.inf

RELEVANT = "relevant"
POSITIONALLY_IRRELEVANT = "positionally-irrelevant"
INTENTIONALLY_IRRELEVANT = "intentionally-irrelevant"
PASSED = "passed"

ADJUSTED_METHODS = ("dynamic_adj", "dynamic_adj_noise")


@dataclass(frozen=True)
class TTCEstimate:
    vehicle: int
    lane: int
    raw: float
    adjusted: float
    perceived: float
    verdict: str

    @property
    def value(self) -> float:
        """The TTC the pedestrian acts on."""
        return self.perceived


def normalize_deg(angle: float) -> float:
    """Wrap to (-180, 180]."""
    a = math.fmod(angle, 360.0)
    if a <= -180.0:
        a += 360.0
    elif a > 180.0:
        a -= 360.0
    return a


def bearing(r: Sequence[float], t: Sequence[float]) -> float:
    """Direction of ``t`` seen from ``r`` in degrees."""
    dx, dy = t[0] - r[0], t[1] - r[1]
    if dx == 0.0 and dy == 0.0:
        raise ValueError("bearing undefined for coincident points")
    return normalize_deg(math.degrees(math.atan2(dy, dx)))


def _sign(a: float, tol: float = 1e-9) -> int:
    if abs(a) <= tol or abs(abs(a) - 180.0) <= tol:
        return 0
    return 1 if a > 0 else -1


def positional_relevance(
    ped_pos: Sequence[float], ped_heading: float, veh_pos: Sequence[float], veh_heading: float
) -> tuple[bool, float, float]:
    """Whether a vehicle converges on the pedestrian, with the two relative angles.

    The vehicle is relevant when it lies on one side of the pedestrian's heading while the
    pedestrian lies on the other side of the vehicle's heading. An angle of exactly 0 or 180
    counts as converging.
    """
    theta_p = normalize_deg(bearing(ped_pos, veh_pos) - ped_heading)
    theta_v = normalize_deg(bearing(veh_pos, ped_pos) - veh_heading)
    sp, sv = _sign(theta_p), _sign(theta_v)
    relevant = sp == 0 or sv == 0 or sp != sv
    return relevant, theta_p, theta_v


def _segments_intersect(p1, p2, q1, q2, eps: float = 1e-9) -> bool:
    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        return 0 if abs(v) <= eps else (1 if v > 0 else -1)

    def on_seg(a, b, c):
        return min(a[0], b[0]) - eps <= c[0] <= max(a[0], b[0]) + eps and min(a[1], b[1]) - eps <= c[1] <= max(a[1], b[1]) + eps

    o1, o2, o3, o4 = orient(p1, p2, q1), orient(p1, p2, q2), orient(q1, q2, p1), orient(q1, q2, p2)
    if o1 != o2 and o3 != o4:
        return True
    return (
        (o1 == 0 and on_seg(p1, p2, q1))
        or (o2 == 0 and on_seg(p1, p2, q2))
        or (o3 == 0 and on_seg(q1, q2, p1))
        or (o4 == 0 and on_seg(q1, q2, p2))
    )


def intentional_relevance(
    inferred_path: Sequence[Sequence[float]], crossing: tuple[Sequence[float], Sequence[float]]
) -> bool:
    """Whether the path a vehicle signals (straight when its indicator is off) meets the crossing."""
    q1, q2 = crossing
    return any(_segments_intersect(a, b, q1, q2) for a, b in zip(inferred_path, inferred_path[1:]))


# ---------------------------------------------------------------- TTC methods


def dynamic_ttc(veh_dist: float, veh_s: float, veh_accl: float, max_s: float) -> float:
    """Arrival time under constant acceleration until the speed cap, constant speed after."""
    if veh_dist < 0:
        raise ValueError("veh_dist must be >= 0")
    if veh_dist == 0:
        return 0.0
    if veh_accl == 0 or (veh_accl > 0 and veh_s >= max_s):
        return veh_dist / veh_s if veh_s > 0 else INF
    disc = veh_s * veh_s + 2.0 * veh_accl * veh_dist
    if disc < 0:
        return INF  # stops short of the pedestrian
    t_vp = (-veh_s + math.sqrt(disc)) / veh_accl
    if veh_accl < 0:
        return t_vp
    t_max = (max_s - veh_s) / veh_accl
    if t_vp <= t_max:
        return t_vp
    dist_max = 0.5 * (veh_s + max_s) * t_max
    return t_max + (veh_dist - dist_max) / max_s


def ttc_compute(
    method: str,
    veh_dist: float,
    veh_s: float,
    veh_accl: float,
    max_s: float,
    road_max_s: float | None = None,
) -> float:
    """Raw TTC for one vehicle; ``max_s`` is min(road limit, vehicle top speed)."""
    if veh_dist < 0:
        raise ValueError("veh_dist must be >= 0")
    if not max_s > 0:
        raise ValueError("max_s must be > 0")
    if method not in TTC_METHODS:
        raise ValueError(f"unknown TTC method {method!r}")
    if method == "constant":
        if veh_dist == 0:
            return 0.0
        return veh_dist / veh_s if veh_s > 0 else INF
    if method == "average":
        road = max_s if road_max_s is None else road_max_s
        mean_v = (veh_s + road) / 2.0
        if veh_dist == 0:
            return 0.0
        return veh_dist / mean_v if mean_v > 0 else INF
    return dynamic_ttc(veh_dist, veh_s, veh_accl, max_s)


def passage_speed(veh_dist: float, veh_s: float, veh_accl: float, max_s: float) -> float:
    """Predicted speed when the front reaches the crossing point, capped at ``max_s``."""
    v2 = veh_s * veh_s + 2.0 * veh_accl * max(veh_dist, 0.0)
    return min(max_s, math.sqrt(max(v2, 0.0)))


def rear_time(length: float, speed: float) -> float:
    """Time for the rear bumper to clear a point once the front has reached it."""
    if length <= 0:
        return 0.0
    return length / speed if speed > 0 else INF


def adjust_ttc(raw: float, travel_time: float, length: float, speed: float) -> float:
    """Subtract the pedestrian's travel time; resolve negative results with the rear-bumper rule.

    Returns +inf when the vehicle will have fully passed and 0 for a side collision.
    """
    if travel_time < 0:
        raise ValueError("travel_time must be >= 0")
    if raw == INF:
        return INF
    hat = raw - travel_time
    if hat >= 0:
        return hat
    if hat + rear_time(length, speed) < 0:
        return INF
    return 0.0


def perceived_ttc(ttc: float, z: float, noise_th: float = 0.3) -> float:
    """Judged TTC: affine mean and spread in the true value, cut off below ``noise_th``."""
    if ttc < 0:
        raise ValueError("ttc must be >= 0")
    if ttc == INF:
        return INF
    if ttc < noise_th:
        return ttc
    mu = 0.7 + 0.56 * ttc
    sigma = 0.17 * ttc + 0.49
    return max(0.0, mu + z * sigma)


def estimate(
    method: str,
    vehicle: int,
    lane: int,
    veh_dist: float,
    veh_s: float,
    veh_accl: float,
    max_s: float,
    road_max_s: float,
    travel_time: float,
    length: float,
    p_noise: float = 0.0,
    noise_th: float = 0.3,
) -> TTCEstimate:
    """Full pipeline for one relevant vehicle and lane.

    ``veh_dist`` is signed: negative when the reference point is already past the crossing
    line (only meaningful for the adjusted methods, where ``length`` is measured from there).
    """
    if veh_dist < 0:
        raw = veh_dist / veh_s if veh_s > 0 else 0.0
        speed = min(veh_s, max_s)
    else:
        raw = ttc_compute(method, veh_dist, veh_s, veh_accl, max_s, road_max_s)
        speed = passage_speed(veh_dist, veh_s, veh_accl, max_s)
    if method in ADJUSTED_METHODS:
        if veh_dist < 0:
            # the front has passed: rear clears after (length - overshoot) / speed
            adj = INF if raw == INF else _adjust_straddling(-veh_dist, travel_time, length, speed)
        else:
            adj = adjust_ttc(raw, travel_time, length, speed)
        perceived = perceived_ttc(adj, p_noise, noise_th) if method == "dynamic_adj_noise" else adj
        verdict = PASSED if adj == INF else RELEVANT
        return TTCEstimate(vehicle, lane, raw, adj, perceived, verdict)
    if veh_dist < 0:
        return TTCEstimate(vehicle, lane, raw, INF, INF, PASSED)
    return TTCEstimate(vehicle, lane, raw, raw, raw, RELEVANT)


def _adjust_straddling(overshoot: float, travel_time: float, length: float, speed: float) -> float:
    # raw = -overshoot/speed, always negative, so the rear-bumper branch decides
    if speed <= 0:
        return 0.0 if overshoot < length else INF
    hat = -overshoot / speed - travel_time
    if hat + length / speed < 0:
        return INF
    return 0.0


def min_adjusted_ttc(
    estimates: Iterable[TTCEstimate], lanes_in_scope: Sequence[int]
) -> tuple[dict[int, float], float]:
    """Per-lane minima over relevant estimates and the overall minimum (+inf when empty)."""
    if not lanes_in_scope:
        raise ValueError("lanes_in_scope must be nonempty")
    per_lane = {lane: INF for lane in lanes_in_scope}
    for e in estimates:
        if e.lane in per_lane and e.verdict == RELEVANT and e.value < per_lane[e.lane]:
            per_lane[e.lane] = e.value
    return per_lane, min(per_lane.values())
