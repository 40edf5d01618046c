import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iwcsim.agents import PedestrianProfile, PedestrianState, choose_transit_mode
from iwcsim.config import DecisionConfig, GeometryConfig, PedestrianConfig, ScenarioConfig
from iwcsim.decision import (
    PedestrianAgent,
    StateMachineError,
    decide_cross,
    handle_wait_timeout,
    plan_route,
    timeout_reached,
    update_crossing_gap,
)
from iwcsim.engine import World
from iwcsim.scene import build_grid_network
from iwcsim.vehicles import StepContext, VehicleState, step_vehicle, vehicle_profile

# ---------------------------------------------------------------- pure rules


@pytest.mark.parametrize(
    "args, expected",
    [((6, 0, 1, 2), 6), ((6, 2.5, 1, 2), 3.5), ((6, 5, 1, 2), 2), ((3, 0.5, 2, 2), 2), ((8, 1, 0.5, 2), 7.5)],
)
def test_update_crossing_gap(args, expected):
    assert update_crossing_gap(*args) == pytest.approx(expected)


def test_update_crossing_gap_rejects_negative():
    with pytest.raises(ValueError):
        update_crossing_gap(5, -1, 1, 2)


@settings(max_examples=300, deadline=None)
@given(g=st.floats(0, 10), w1=st.floats(0, 20), w2=st.floats(0, 20), k=st.floats(0, 3), gmin=st.floats(0, 5))
def test_gap_floor_and_monotone(g, w1, w2, k, gmin):
    a, b = sorted((w1, w2))
    ga, gb = update_crossing_gap(g, a, k, gmin), update_crossing_gap(g, b, k, gmin)
    assert ga >= gmin and gb >= gmin
    assert gb <= ga


def test_timeout_boundary():
    assert not timeout_reached(6, 4.0, 1, 2)
    assert timeout_reached(6, 4.1, 1, 2)
    assert not timeout_reached(6, 3.9, 1, 2)


@pytest.mark.parametrize("c_gap, ttc, go", [(3, 3.5, True), (3, 3.0, False), (2, math.inf, True), (5, 1, False)])
def test_decide_cross(c_gap, ttc, go):
    assert decide_cross(c_gap, ttc) is go


def _profile(lo="violating", gap=5.0, speed=1.5, pattern="one-stage", origin=(40.0, -7.0), dest=(40.0, 7.0), **kw):
    return PedestrianProfile(
        id=kw.pop("id", 0), ped_type="adult", ped_trait="average", ped_lo=lo, ped_s=speed, ped_gap=gap,
        crossing_pattern=pattern, go_around_blocking=kw.pop("go_around", False), p_noise=0.0, th_dist_c=45.0,
        width=0.5, length=0.3, origin=origin, destination=dest, needs_crossing=True, **kw,
    )


def test_handle_wait_timeout_speedup():
    p = _profile(lo="violating", speed=1.5)
    s = PedestrianState(position=(0.0, 0.0), phase="waiting", law_status="violating", crs_speed=1.5)
    assert handle_wait_timeout(p, s, DecisionConfig()) == ("speedup", None)
    assert s.crs_speed == pytest.approx(4.5) and s.timed_out


def test_handle_wait_timeout_reroutes_average():
    n = build_grid_network(GeometryConfig(vertical_nodes=0, crosswalk_nodes=[]))
    p = _profile(lo="average")
    s = PedestrianState(position=(40.0, -7.0), phase="waiting", law_status="violating")
    name, route = handle_wait_timeout(p, s, DecisionConfig(), n, p.destination)
    assert name == "reroute_to_crosswalk" and s.law_status == "obedient"
    assert route is not None and [c.kind for c in route.crossing_refs] == ["crosswalk"]
    assert math.dist(route.waypoints[-1], p.destination) < 1e-6


def test_handle_wait_timeout_errors():
    p = _profile()
    with pytest.raises(StateMachineError):
        handle_wait_timeout(p, PedestrianState((0.0, 0.0), phase="crossing", law_status="violating"), DecisionConfig())
    with pytest.raises(StateMachineError):
        handle_wait_timeout(p, PedestrianState((0.0, 0.0), phase="waiting", law_status="obedient"), DecisionConfig())


def test_choose_transit_mode():
    rng = np.random.default_rng(0)
    draws = [choose_transit_mode(rng, {"walk": 3, "bus": 1}) for _ in range(4000)]
    assert set(draws) == {"walk", "bus"}
    assert draws.count("walk") / len(draws) == pytest.approx(0.75, abs=0.03)
    assert choose_transit_mode(rng, {"taxi": 1.0}) == "taxi"
    with pytest.raises(ValueError):
        choose_transit_mode(rng, {"walk": 0.0})
    with pytest.raises(ValueError):
        choose_transit_mode(rng, {"walk": -1.0, "bus": 2.0})


# ---------------------------------------------------------------- route planning


@pytest.fixture(scope="module")
def road():
    return build_grid_network(GeometryConfig(vertical_nodes=0, crosswalk_nodes=[]))


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10_000), x=st.floats(-90, 90))
def test_jaywalk_point_within_radius(road, seed, x):
    dest = (x, 7.0)
    r = plan_route(_profile(dest=dest), road, (-100.0, -7.0), dest, "violating", np.random.default_rng(seed))
    (ref,) = r.crossing_refs
    assert ref.kind == "jaywalk"
    assert abs(ref.coord - x) <= DecisionConfig().jaywalk_radius + 1e-9
    assert math.dist(r.waypoints[-1], dest) < 1e-6


def test_obedient_plan_uses_signalized_crosswalk(road):
    dest = (40.0, 7.0)
    r = plan_route(_profile(lo="obedient", dest=dest), road, (40.0, -7.0), dest, "obedient", np.random.default_rng())
    assert [c.kind for c in r.crossing_refs] == ["crosswalk"]
    assert road.crosswalks[r.crossing_refs[0].crosswalk].signalized


def test_plan_same_sidewalk_walks(road):
    r = plan_route(_profile(), road, (-50.0, -7.0), (50.0, -7.0), "violating", np.random.default_rng())
    assert not r.involves_crossing and r.length == pytest.approx(100.0)


def test_plan_requires_resolved_law(road):
    with pytest.raises(ValueError):
        plan_route(_profile(lo="average"), road, (40.0, -7.0), (40.0, 7.0), "average", np.random.default_rng())


# ---------------------------------------------------------------- synthetic crossings


def _world(method="dynamic"):
    cfg = ScenarioConfig()
    cfg.geometry = GeometryConfig(vertical_nodes=0, crosswalk_nodes=[])
    cfg.pedestrians.count = 0
    cfg.vehicles.period = math.inf
    cfg.decision.ttc_method = method
    return World(cfg, seed=0)


def _agent(w, profile, jaywalk_radius=0.0):
    dc = DecisionConfig(**{**w.cfg.decision.__dict__, "jaywalk_radius": jaywalk_radius})
    agent = PedestrianAgent(profile, w.network, dc, PedestrianConfig(activity_probability=0.0), np.random.default_rng(1), w.dt)
    events = agent.depart(w.t)
    return agent, events


def _eastbound(w, x_front, v=13.89, k=0):
    # lanes 0/1 run east from x = -120
    return VehicleState(vehicle_profile("passenger", 100 + k), w.network.paths[(0, 0, k)], x_front + 120.0, v)


def _westbound(w, x_front, v=13.89, k=2):
    return VehicleState(vehicle_profile("passenger", 200 + k), w.network.paths[(0, 0, k)], 120.0 - x_front, v)


def _drive(w, agent, steps, events=None, cap=None):
    """Step the agent against vehicles on a free road (optionally held at speed ``cap``)."""
    events = [] if events is None else events
    ctx = StepContext(road_max_s=cap or w.road_max_s)
    for _ in range(steps):
        events += agent.step(w.snapshot())
        w.vehicles = [step_vehicle(v, w.network, ctx, w.dt) for v in w.vehicles]
        w.step_index += 1
        if agent.state.phase == "done":
            break
    return events


def names(events):
    return [e[2] for e in events]


def test_empty_road_crosses_without_waiting():
    w = _world()
    agent, ev = _agent(w, _profile())
    ev = _drive(w, agent, 200, ev)
    assert names(ev)[:4] == ["depart", "intend", "wait_start", "cross_start"]
    assert names(ev)[-2:] == ["cross_end", "arrived"]
    (rec,) = agent.records
    assert rec.wait_time == 0 and not rec.legal and rec.min_ttc == math.inf
    assert rec.cross_end - rec.cross_start == pytest.approx(14.0 / 1.5, abs=0.11)


def test_waits_for_close_vehicle_then_crosses():
    w = _world()
    w.vehicles = [_eastbound(w, 40.0 - 30.0)]  # dynamic TTC about 2.2 s, gap 5
    agent, ev = _agent(w, _profile(gap=5.0))
    ev = _drive(w, agent, 300, ev)
    (rec,) = agent.records
    assert rec.wait_time > 1.5
    assert rec.min_ttc is not None and rec.min_ttc > rec.c_gap or rec.min_ttc == math.inf
    assert names(ev)[-1] == "arrived"


def test_accepts_gap_above_threshold():
    w = _world()
    w.vehicles = [_eastbound(w, 40.0 - 90.0)]  # TTC about 6.5 s
    agent, _ = _agent(w, _profile(gap=4.0))
    _drive(w, agent, 5)
    rec = agent.records[0]
    # the vehicle moves one tick while the pedestrian reaches the curb
    assert rec.wait_time == 0 and rec.min_ttc == pytest.approx((90.0 - 1.389) / 13.89, abs=0.01)


def test_one_stage_waits_at_curb_rolling_gap_goes_midroad():
    # a slow westbound vehicle threatens only the far half of the road
    out = {}
    for pattern in ("one-stage", "rolling-gap"):
        w = _world("dynamic_adj")
        w.vehicles = [_westbound(w, 40.0 + 9.0, v=2.0, k=3)]
        agent, ev = _agent(w, _profile(gap=5.0, pattern=pattern))
        ev = _drive(w, agent, 300, ev, cap=2.0)
        out[pattern] = (agent.records[0], names(ev))
    one, one_ev = out["one-stage"]
    roll, roll_ev = out["rolling-gap"]
    assert one.wait_time > 2.0 and "midroad_wait" not in one_ev
    assert roll.wait_time == 0 and "midroad_wait" in roll_ev
    assert roll.cross_start < one.cross_start
    assert roll_ev[-1] == one_ev[-1] == "arrived"


def test_violating_timeout_speeds_up():
    w = _world()
    # TTC tracks c_gap down one for one: never acceptable before the decay floor
    w.vehicles = [_eastbound(w, 40.0 - 99.0)]
    agent, ev = _agent(w, _profile(gap=8.0, speed=1.4))
    ev = _drive(w, agent, 400, ev)
    assert "speedup" in names(ev)
    t_speed = next(e[0] for e in ev if e[2] == "speedup")
    t_wait = next(e[0] for e in ev if e[2] == "wait_start")
    assert t_speed - t_wait == pytest.approx(6.1, abs=1e-6)
    rec = agent.records[0]
    assert rec.crs_speed == pytest.approx(3 * 1.4)
    assert agent.gap_trace_min == pytest.approx(2.0)
    assert names(ev)[-1] == "arrived"


def test_average_timeout_reroutes_to_crosswalk():
    w = _world()
    w.vehicles = [_eastbound(w, 100.0 - 99.0)]
    agent, ev = _agent(w, _profile(lo="average", gap=8.0, origin=(100.0, -7.0), dest=(100.0, 7.0)))
    assert agent.state.law_status == "violating"  # 100 m from the crosswalk, threshold 45 m
    ev = _drive(w, agent, 3000, ev)
    n = names(ev)
    assert "reroute_to_crosswalk" in n
    assert agent.records[0].status == "abandoned"
    legal = [r for r in agent.records if r.status == "completed"]
    assert legal and all(r.legal and r.kind == "crosswalk" for r in legal)
    assert n[-1] == "arrived"


def test_obedient_waits_for_walk_signal():
    w = _world()
    prof = _profile(lo="obedient", origin=(0.0, -7.0), dest=(0.0, 7.0))
    agent, ev = _agent(w, prof)
    ev = _drive(w, agent, 1200, ev)
    rec = agent.records[0]
    assert rec.legal and rec.kind == "crosswalk"
    cw = w.network.crosswalks[0]
    assert w.network.pedestrian_walk(cw.id, rec.cross_start)
    assert names(ev)[-1] == "arrived"


def test_obedient_never_waits_at_jaywalk(road):
    agent = PedestrianAgent(_profile(lo="obedient"), road, DecisionConfig(), PedestrianConfig(), np.random.default_rng(), 0.1)
    agent.depart(0.0)
    assert all(c.kind == "crosswalk" for c in agent.route.crossing_refs)


def test_step_rejects_bad_dt():
    w = _world()
    agent, _ = _agent(w, _profile())
    with pytest.raises(ValueError):
        agent.step(w.snapshot(), 0.0)
