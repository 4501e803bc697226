import itertools
import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from swarm_planner.csp import (
    MissionProblem, Timeline, UavTrack, ViolationReport, check_constraints, objectives, propagate, risk,
)
from swarm_planner.model import (
    TABLE1, AllenRelation, GeoPoint, ProfileKind, RiskThresholds, TimeDependency, UavType, generate_scenario,
)
from swarm_planner.plan import Chromosome, decode
from swarm_planner.weights import StrategyTriple, weighted_random_individual
from builders import EO, SAR, gcs, task, uav, world
from oracles import straight_line_violations

MIN, MAX = ProfileKind.MIN_CONSUMPTION, ProfileKind.MAX_SPEED
SCALE = 3440.065 * math.pi / 180  # NM per degree of arc


def ground_uav(lat=0.0, lon=0.0, **kw):
    """Climb, descent and MinConsumption share speed and burn, so leg time is distance / 100 kt."""
    kw.setdefault("min_speed", 100.0)
    return uav(lat, lon, min_alt=3000.0, max_alt=3000.0, min_rate=50.0,
               climb=(100.0, 50.0, 15.0), descent=(100.0, 50.0, 15.0), **kw)


def here(tasks, uavs, gcss=None, **kw):
    return world(tasks, uavs, gcss or [gcs(0.0, 0.0)], **kw)


def one(c_task_assign, order, ret=(MIN,), path=None, sensors=None, gcs_assign=None):
    path = path or tuple((MIN,) * len(t) for t in c_task_assign)
    sensors = sensors or tuple((EO,) * len(t) for t in c_task_assign)
    gcs_assign = gcs_assign or (0,) * len(ret)
    return Chromosome(tuple(c_task_assign), tuple(path), tuple(sensors), tuple(order), tuple(gcs_assign), tuple(ret))


def evaluate(s, c):
    return MissionProblem(s).evaluate(c)


# ---------------------------------------------------------------- timeline

def test_single_task_temporal_chain():
    s = here([task(10 / SCALE, 0.0, duration=600.0)], [ground_uav(min_speed=100.0)])
    rep, obj, tl = evaluate(s, one([(0,)], (0,)))
    assert rep.total == 0
    leg = tl.legs[(0, 0)]
    assert leg.departure == pytest.approx(0.0)
    assert leg.start == pytest.approx(360.0)
    assert leg.end == pytest.approx(960.0)
    tr = tl.uavs[0]
    assert tr.return_time == pytest.approx(960.0 + 360.0)
    assert tr.flight_time == pytest.approx(1320.0)
    assert tr.distance == pytest.approx(20.0)


def test_meets_on_different_uavs_forces_loiter():
    # UAV 1 is close to task 1 and would arrive long before task 0 ends
    tasks = [task(10 / SCALE, 0.0, duration=600.0), task(0.0, 5 / SCALE, duration=300.0)]
    uavs = [ground_uav(), ground_uav(lat=0.0, lon=1 / SCALE)]
    deps = (TimeDependency(0, 1, AllenRelation.MEETS),)
    s = here(tasks, uavs, time_deps=deps)
    rep, _, tl = evaluate(s, one([(0,), (1,)], (0, 1), ret=(MIN, MIN)))
    end0 = tl.legs[(0, 0)].end
    leg1 = tl.legs[(1, 1)]
    assert leg1.start == pytest.approx(end0)
    assert rep.allen == 0
    # UAV 1 takes off as late as possible: no loiter before its first task, it departs 144 s ahead of the start
    assert leg1.departure == pytest.approx(end0 - 144.0)


def test_loiter_between_tasks_of_one_uav():
    # UAV 1 flies task 2 then waits for task 0 (flown by UAV 0) before task 1
    tasks = [task(30 / SCALE, 0.0, duration=1200.0), task(0.0, 6 / SCALE, duration=300.0),
             task(0.0, 3 / SCALE, duration=60.0)]
    uavs = [ground_uav(), ground_uav(lat=0.0, lon=1 / SCALE)]
    deps = (TimeDependency(0, 1, AllenRelation.BEFORE),)
    s = here(tasks, uavs, time_deps=deps)
    rep, _, tl = evaluate(s, one([(0,), (1,), (1,)], (2, 0, 1), ret=(MIN, MIN)))
    assert rep.allen == 0
    a, b = tl.legs[(2, 1)], tl.legs[(1, 1)]
    assert b.start == pytest.approx(tl.legs[(0, 0)].end)
    assert b.dur_loiter == pytest.approx(b.departure - a.end)
    assert b.dur_loiter > 0
    assert b.fuel_loiter == pytest.approx(50.0 * b.dur_loiter / 3600)


def test_multi_uav_task_splits_duration():
    tasks = [task(0.0, 0.0, duration=600.0, radius=1.0, multi=True)]
    uavs = [ground_uav(lat=5 / SCALE), ground_uav(lat=-8 / SCALE)]
    s = here(tasks, uavs)
    c = one([(0, 1)], (0,), ret=(MIN, MIN), path=[(MIN, MIN)], sensors=[(EO, EO)])
    rep, _, tl = evaluate(s, c)
    a, b = tl.legs[(0, 0)], tl.legs[(0, 1)]
    assert a.dur_task == b.dur_task == pytest.approx(300.0)
    assert a.start == b.start
    assert rep.total == 0


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([2, 5, 8]))
def test_temporal_identities(seed, row):
    s = generate_scenario(TABLE1[row], seed=row)
    c = weighted_random_individual(s, StrategyTriple(), random.Random(seed))
    _, _, tl = evaluate(s, c)
    for (t, u), leg in tl.legs.items():
        assert leg.start == pytest.approx(leg.departure + leg.dur_path, abs=1e-6)
        assert leg.end == pytest.approx(leg.start + leg.dur_task, abs=1e-6)
        assert leg.dur_loiter >= -1e-6
        assert all(math.isfinite(x) and x >= -1e-6 for x in (leg.departure, leg.start, leg.end))
    for u in tl.used:
        tr = tl.uavs[u]
        last = max(leg.end for (t, v), leg in tl.legs.items() if v == u)
        assert tr.return_time == pytest.approx(last + tr.dur_return, abs=1e-6)


# ---------------------------------------------------------------- constraints

def test_feasible_plan_has_no_violations():
    s = here([task(0.1, 0.1)], [ground_uav()])
    rep, obj, _ = evaluate(s, one([(0,)], (0,)))
    assert rep.total == 0 and obj is not None


def test_missing_sensor_counts_once():
    s = here([task(0.1, 0.1, sensor=SAR)], [ground_uav(sensors=(EO,)), ground_uav(lat=0.05, sensors=(SAR,))])
    rep, obj, _ = evaluate(s, one([(0,)], (0,), ret=(MIN, MIN), sensors=[(SAR,)]))
    assert rep.sensor == 1 and obj is None


def test_gcs_capacity_counts_excess_uavs():
    uavs = [ground_uav(lat=0.01 * k) for k in range(3)]
    s = here([task(0.1, 0.1)] * 3, uavs, [gcs(lat=0, lon=0, max_uavs=1)])
    rep, _, _ = evaluate(s, one([(0,), (1,), (2,)], (0, 1, 2), ret=(MIN,) * 3))
    assert rep.gcs_capacity == 2


def test_gcs_type_and_coverage():
    s = here([task(3.0, 0.0)], [ground_uav()], [gcs(lat=0, lon=0, types=(UavType.HALE,), radius=20.0)])
    rep, _, _ = evaluate(s, one([(0,)], (0,)))
    assert rep.gcs_type == 1
    assert rep.gcs_coverage == 1


def test_overspeed_counted_per_leg():
    s = here([task(0.1, 0.1)], [ground_uav(max_speed=150.0)])
    rep, _, _ = evaluate(s, one([(0,)], (0,), path=[(MAX,)], ret=(MAX,)))
    assert rep.overaltitude_overspeed == 2


def test_fuel_time_range_limits():
    s = here([task(60 / SCALE, 0.0, duration=600.0)], [ground_uav(fuel=10.0, max_time=600.0, max_range=50.0)])
    rep, _, _ = evaluate(s, one([(0,)], (0,)))
    assert (rep.fuel, rep.flight_time, rep.range) == (1, 1, 1)


def test_infeasible_climb_is_a_path_violation():
    s = here([task(1 / SCALE, 0.0)], [uav(0.0, 0.0, min_alt=20000.0)])
    rep, _, tl = evaluate(s, one([(0,)], (0,)))
    assert rep.path == 1 and rep.ret == 1
    assert all(math.isfinite(x) for x in (tl.uavs[0].return_time, tl.uavs[0].fuel))


def test_report_total_is_sum():
    r = ViolationReport(sensor=2, allen=1, fuel=3)
    assert r.total == 6 == sum(r.as_dict().values())


@pytest.mark.parametrize("rel, holds", [
    (AllenRelation.OVERLAPS, False), (AllenRelation.EQUALS, False), (AllenRelation.BEFORE, True),
])
def test_other_allen_relations_checked_post_hoc(rel, holds):
    tasks = [task(0.1, 0.0, duration=600.0), task(0.2, 0.0, duration=600.0)]
    s = here(tasks, [ground_uav()], time_deps=(TimeDependency(0, 1, rel),))
    rep, _, _ = evaluate(s, one([(0,), (0,)], (0, 1)))
    assert rep.allen == (0 if holds else 1)


# ---------------------------------------------------------------- exhaustive oracle

def oracle_world(dep_relation):
    """T=2 (task 1 multi-UAV), U=2, G=1, one sensor per UAV; thresholds sit between plan values."""
    tasks = [task(40.05, -3.0, sensor=EO, duration=900.0),
             task(40.3, -2.7, sensor=EO, duration=1200.0, radius=2.0, multi=True)]
    uavs = [uav(40.0, -3.0, sensors=(EO,), max_speed=180.0, min_alt=3000.0, max_alt=8000.0,
                fuel=44.0, max_time=2600.0, max_range=47.0),
            uav(40.1, -3.3, sensors=(SAR,), type_tag=UavType.HALE, max_speed=250.0, min_alt=4000.0, max_alt=6000.0,
                fuel=55.0, max_time=3000.0, max_range=61.0)]
    deps = (TimeDependency(0, 1, dep_relation),)
    s = world(tasks, uavs, [gcs(40.0, -3.0, max_uavs=1, types=(UavType.MALE,), radius=5000.0)], time_deps=deps)
    return s


def plain_world(s):
    def prof(u, kind):
        p = u.profile(kind)
        return {"speed": p.speed, "rate": p.fuel_rate, "alt": p.altitude, "angle": p.angle}

    return {
        "tasks": [{"center": (t.center.lat, t.center.lon), "radius": t.radius, "sensor": t.required_sensor,
                   "duration": t.base_duration} for t in s.tasks],
        "uavs": [{"pos": (u.position.lat, u.position.lon), "sensors": set(u.sensors), "type": u.type_tag,
                  "profiles": {"min": prof(u, MIN), "max": prof(u, MAX), "climb": prof(u, ProfileKind.CLIMB),
                               "descent": prof(u, ProfileKind.DESCENT)},
                  "max_speed": u.max_speed, "fuel": u.initial_fuel, "max_time": u.max_flight_time,
                  "max_range": u.max_range} for u in s.uavs],
        "gcss": [{"types": set(g.allowed_types), "max_uavs": g.max_uavs} for g in s.gcss],
        "deps": [{"first": d.first, "second": d.second, "relation": d.relation.value.lower()} for d in s.time_deps],
    }


def all_chromosomes(s):
    sensor = [next(iter(u.sensors)) for u in s.uavs]
    teams = [(0,), (1,), (0, 1)]
    for u0, p0, team, perm in itertools.product((0, 1), (MIN, MAX), teams, ((0, 1), (1, 0))):
        for pf in itertools.product((MIN, MAX), repeat=len(team)):
            for ret in itertools.product((MIN, MAX), repeat=2):
                yield Chromosome(((u0,), team), ((p0,), pf), ((sensor[u0],), tuple(sensor[u] for u in team)),
                                 perm, (0, 0), ret)


def as_plain(c):
    key = {MIN: "min", MAX: "max"}
    return {"task_assign": c.task_assign, "sensor_assign": c.sensor_assign, "order_perm": c.order_perm,
            "gcs_assign": c.gcs_assign, "path_fp": [[key[p] for p in cell] for cell in c.path_fp],
            "return_fp": [key[p] for p in c.return_fp]}


@pytest.mark.parametrize("relation", [AllenRelation.BEFORE, AllenRelation.MEETS])
def test_exhaustive_oracle_agreement(relation):
    s = oracle_world(relation)
    assert s.time_deps[0].relation.value.lower() in ("before", "meets")
    p = MissionProblem(s)
    w = plain_world(s)
    cs = list(all_chromosomes(s))
    assert len(cs) == 256
    totals = set()
    for c in cs:
        rep, _, tl = p.evaluate(c)
        # thresholds are far from every plan value, so both evaluators agree without float ties
        for u in tl.used:
            tr, lim = tl.uavs[u], s.uavs[u]
            assert abs(tr.fuel - lim.initial_fuel) > 0.05
            assert abs(tr.flight_time - lim.max_flight_time) > 1.0
            assert abs(tr.distance - lim.max_range) > 0.05
        assert rep.total == straight_line_violations(w, as_plain(c)), c
        totals.add(rep.total)
    assert len(totals) > 4


# ---------------------------------------------------------------- objectives and risk

def test_cost_for_one_hour():
    # 10 NM out and back at 100 kt is 720 s; the task fills the rest of the hour
    s = here([task(10 / SCALE, 0.0, duration=2880.0)], [ground_uav(cost=100.0, min_speed=100.0)])
    _, obj, _ = evaluate(s, one([(0,)], (0,)))
    assert obj.cost == pytest.approx(100.0)
    assert obj.flight_time == pytest.approx(3600.0)
    assert obj.n_uavs == 1


def test_makespan_and_idle_uav():
    tasks = [task(5 / SCALE, 0.0, duration=640.0), task(0.0, 10 / SCALE, duration=924.0)]
    uavs = [ground_uav(), ground_uav(lon=2 / SCALE), ground_uav(lat=-0.5)]
    s = here(tasks, uavs)
    _, obj, tl = evaluate(s, one([(0,), (1,)], (0, 1), ret=(MIN,) * 3))
    assert [tl.uavs[u].return_time for u in (0, 1)] == pytest.approx([1000.0, 1500.0])
    assert obj.makespan == pytest.approx(1500.0)
    assert obj.n_uavs == 2
    assert obj.fuel == pytest.approx(tl.uavs[0].fuel + tl.uavs[1].fuel)
    assert not tl.uavs[2].used and tl.uavs[2].cost == 0


def test_functional_api_matches_problem():
    s = generate_scenario(TABLE1[2], seed=5)
    c = weighted_random_individual(s, StrategyTriple(), random.Random(1))
    plan = decode(c, s)
    tl = propagate(plan, s, c)
    rep = check_constraints(tl, plan, c, s)
    ref, obj, _ = MissionProblem(s).evaluate(c)
    assert rep == ref
    if obj is not None:
        assert objectives(tl, plan, s) == obj


def track(fuel_remaining=100.0, clearance=5000.0, out=0.0, flight=1000.0):
    return UavTrack(used=True, fuel_remaining=fuel_remaining, min_clearance=clearance, out_of_coverage=out,
                    flight_time=flight, return_time=flight)


TH = RiskThresholds(fuel_th=50.0, ground_clearance=1000.0, separation=1.0)


def test_risk_all_clear():
    tl = Timeline({}, [track(), track()], [], {(0, 1): 10.0})
    assert risk(tl, TH) == 0.0


def test_risk_one_of_two_low_on_fuel():
    tl = Timeline({}, [track(fuel_remaining=10.0), track()], [], {(0, 1): 10.0})
    assert risk(tl, TH) == pytest.approx(12.5)


def test_risk_everything_breached():
    tl = Timeline({}, [track(10.0, 100.0, 1000.0), track(10.0, 100.0, 1000.0)], [], {(0, 1): 0.5})
    assert risk(tl, TH) == pytest.approx(100.0)


@settings(max_examples=30, deadline=None)
@given(st.floats(2, 40), st.floats(1, 30))
def test_objectives_monotone_in_leg_length(d, extra):
    base = here([task(d / SCALE, 0.0)], [ground_uav()])
    far = here([task((d + extra) / SCALE, 0.0)], [ground_uav()])
    c = one([(0,)], (0,))
    _, a, _ = evaluate(base, c)
    _, b, _ = evaluate(far, c)
    for k in ("cost", "fuel", "flight_time", "distance"):
        assert getattr(b, k) >= getattr(a, k) - 1e-9


def test_risk_bounds_on_generated_plans():
    s = generate_scenario(TABLE1[5], seed=2)
    p = MissionProblem(s)
    rng = random.Random(0)
    for _ in range(30):
        c = weighted_random_individual(s, StrategyTriple(), rng)
        _, _, tl = p.evaluate(c)
        assert 0.0 <= risk(tl, s.thresholds) <= 100.0


def test_timeline_dump_is_plain():
    import json
    s = here([task(0.1, 0.1)], [ground_uav()])
    _, _, tl = evaluate(s, one([(0,)], (0,)))
    json.dumps(tl.to_dict())


def test_station_points_spread_on_radius():
    s = here([task(0.0, 0.0, radius=3.0, multi=True)], [ground_uav(), ground_uav(lat=0.1)])
    p = MissionProblem(s)
    a, b = p.point(("task", 0, 0, 2)), p.point(("task", 0, 1, 2))
    from swarm_planner.model import geodesic_distance
    assert geodesic_distance(a, GeoPoint(0, 0)) == pytest.approx(3.0, rel=1e-6)
    assert geodesic_distance(a, b) == pytest.approx(6.0, rel=1e-6)
