"""Timeline propagation, constraint checking and objectives for a decoded plan.

`MissionProblem` holds everything that depends only on the scenario (grid,
station points, cached routes) so a population can be evaluated cheaply.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from itertools import combinations

import numpy as np

from .model import (
    EARTH_RADIUS_NM,
    AllenRelation,
    GeoPoint,
    ProfileKind,
    RiskThresholds,
    Scenario,
    VehicleMode,
    destination,
    haversine_nm,
)
from .pathfind import (
    Grid,
    InfeasibleClimb,
    NoPath,
    OutOfBounds,
    Route,
    Segment,
    build_grid,
    route_metrics,
    theta_star,
)
from .plan import Chromosome, PlanView, decode

TIME_TOL = 1e-6


class PropagationFailed(RuntimeError):
    pass


@dataclass(frozen=True)
class CspConfig:
    grid_resolution: float = 1.0  # NM
    sample_step: float = 30.0  # s, trajectory sampling for coverage/clearance/separation
    collision_floor: float = 0.0  # NM, separation at or below this is a collision
    duration_exponent: float = 1.0  # multi-UAV task duration = base / n**exponent


@dataclass
class Leg:
    task: int
    uav: int
    profile: ProfileKind
    departure: float
    start: float
    end: float
    dur_path: float
    dist_path: float
    fuel_path: float
    waypoints: tuple[GeoPoint, ...]
    dur_task: float
    dur_loiter: float
    fuel_task: float
    fuel_loiter: float
    path_ok: bool


@dataclass
class UavTrack:
    used: bool = False
    takeoff: float = 0.0
    return_time: float = 0.0
    dur_return: float = 0.0
    dist_return: float = 0.0
    fuel_return: float = 0.0
    return_ok: bool = True
    return_waypoints: tuple[GeoPoint, ...] = ()
    flight_time: float = 0.0
    distance: float = 0.0
    fuel: float = 0.0
    fuel_remaining: float = 0.0
    cost: float = 0.0
    min_clearance: float = math.inf
    out_of_coverage: float = 0.0
    coverage_breach: bool = False
    # piecewise-linear airborne trajectory: times, lat, lon
    track: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None


@dataclass
class Timeline:
    legs: dict[tuple[int, int], Leg]
    uavs: list[UavTrack]
    windows: list[tuple[float, float]]  # per task (start, end)
    separation: dict[tuple[int, int], float] = field(default_factory=dict)

    @property
    def used(self) -> list[int]:
        return [u for u, tr in enumerate(self.uavs) if tr.used]

    def to_dict(self) -> dict:
        return {
            "legs": [
                {"task": lg.task, "uav": lg.uav, "profile": lg.profile.value, "departure": lg.departure,
                 "start": lg.start, "end": lg.end, "dur_path": lg.dur_path, "dist_path": lg.dist_path,
                 "fuel_path": lg.fuel_path, "dur_task": lg.dur_task, "dur_loiter": lg.dur_loiter,
                 "path_ok": lg.path_ok, "waypoints": [[p.lat, p.lon] for p in lg.waypoints]}
                for lg in self.legs.values()
            ],
            "uavs": [
                {"used": tr.used, "takeoff": tr.takeoff, "return": tr.return_time, "flight_time": tr.flight_time,
                 "distance": tr.distance, "fuel": tr.fuel, "cost": tr.cost,
                 "min_clearance": None if math.isinf(tr.min_clearance) else tr.min_clearance,
                 "out_of_coverage": tr.out_of_coverage}
                for tr in self.uavs
            ],
            "separation": [[a, b, None if math.isinf(v) else v] for (a, b), v in self.separation.items()],
        }


@dataclass
class ViolationReport:
    sensor: int = 0
    order: int = 0
    allen: int = 0
    vehicle_dep: int = 0
    gcs_type: int = 0
    gcs_capacity: int = 0
    gcs_coverage: int = 0
    path: int = 0
    ret: int = 0
    overaltitude_overspeed: int = 0
    ground_clearance: int = 0
    uav_separation: int = 0
    fuel: int = 0
    flight_time: int = 0
    range: int = 0

    @property
    def total(self) -> int:
        return sum(getattr(self, f.name) for f in fields(self))

    def as_dict(self) -> dict[str, int]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


OBJECTIVE_NAMES = ("cost", "makespan", "risk", "n_uavs", "fuel", "flight_time", "distance")


@dataclass(frozen=True)
class ObjectiveVector:
    cost: float
    makespan: float
    risk: float
    n_uavs: int
    fuel: float
    flight_time: float
    distance: float

    def as_tuple(self) -> tuple[float, ...]:
        return (self.cost, self.makespan, self.risk, float(self.n_uavs), self.fuel, self.flight_time, self.distance)


@dataclass(frozen=True)
class _RouteInfo:
    route: Route
    ok: bool
    samples: tuple[np.ndarray, np.ndarray, np.ndarray]  # t, lat, lon
    clearance: float


def _haversine_np(lat1, lon1, lat2, lon2):
    p1, p2 = np.radians(lat1), np.radians(lat2)
    dp = p2 - p1
    dl = np.radians(lon2 - lon1)
    h = np.sin(dp / 2) ** 2 + np.cos(p1) * np.cos(p2) * np.sin(dl / 2) ** 2
    return 2 * EARTH_RADIUS_NM * np.arcsin(np.minimum(1.0, np.sqrt(h)))


class MissionProblem:
    """Scenario-bound evaluator with route and coverage caches."""

    def __init__(self, scenario: Scenario, config: CspConfig = CspConfig()):
        self.scenario = scenario
        self.config = config
        self._grid: Grid | None = None
        self._skeletons: dict = {}
        self._routes: dict = {}
        self._coverage: dict = {}
        self._stations: dict = {}
        self.ground = [scenario.terrain.elevation_ft(u.position.lat, u.position.lon) for u in scenario.uavs]

    # ---------------------------------------------------------------- geometry

    @property
    def grid(self) -> Grid:
        if self._grid is None:
            self._grid = build_grid(self.scenario, self.config.grid_resolution)
        return self._grid

    def point(self, key) -> GeoPoint:
        if key[0] == "base":
            return self.scenario.uavs[key[1]].position
        if key not in self._stations:
            _, t, k, n = key
            task = self.scenario.tasks[t]
            if n == 1 or task.radius == 0:
                p = GeoPoint(task.center.lat, task.center.lon)
            else:
                lat, lon = destination(task.center.lat, task.center.lon, 360.0 * k / n, task.radius)
                p = GeoPoint(lat, lon)
            self._stations[key] = p
        return self._stations[key]

    def skeleton(self, a, b) -> list[GeoPoint] | None:
        key = (a, b)
        if key not in self._skeletons:
            pa, pb = self.point(a), self.point(b)
            if not self.scenario.nfzs:
                sk = [pa, pb]
            else:
                try:
                    sk = theta_star(self.grid, pa, pb)
                except (NoPath, OutOfBounds):
                    sk = None
            self._skeletons[key] = sk
        return self._skeletons[key]

    def route(self, uav: int, a, a_alt: float, b, kind: ProfileKind, end_alt: float | None) -> _RouteInfo:
        key = (uav, a, a_alt, b, kind, end_alt)
        info = self._routes.get(key)
        if info is None:
            u = self.scenario.uavs[uav]
            cruise = u.profile(kind)
            sk = self.skeleton(a, b)
            ok = sk is not None
            route = None
            if ok:
                try:
                    route = route_metrics(sk, cruise, u, a_alt, end_alt)
                except InfeasibleClimb:
                    ok = False
            if route is None:
                route = self._straight(self.point(a), self.point(b), cruise, a_alt)
            info = self._route_info(route, cruise.altitude)
            info = _RouteInfo(info.route, ok, info.samples, info.clearance)
            self._routes[key] = info
        return info

    @staticmethod
    def _straight(pa: GeoPoint, pb: GeoPoint, cruise, alt0: float) -> Route:
        d = haversine_nm(pa.lat, pa.lon, pb.lat, pb.lon)
        dur = d / cruise.speed * 3600.0
        seg = Segment(cruise.kind, d, dur, cruise.fuel_rate * dur / 3600.0)
        bps = ((0.0, pa.lat, pa.lon, alt0), (dur, pb.lat, pb.lon, cruise.altitude))
        return Route((pa, pb), d, (seg,), bps)

    def _route_info(self, route: Route, cruise_alt: float) -> _RouteInfo:
        bp = np.array(route.breakpoints, dtype=float).reshape(-1, 4)
        dur = bp[-1, 0]
        grid_t = np.arange(0.0, dur, self.config.sample_step) if dur > 0 else np.zeros(0)
        t = np.union1d(bp[:, 0], grid_t)
        lat = np.interp(t, bp[:, 0], bp[:, 1])
        lon = np.interp(t, bp[:, 0], bp[:, 2])
        alt = np.interp(t, bp[:, 0], bp[:, 3])
        terrain = self.scenario.terrain
        cruise_mask = np.abs(alt - cruise_alt) <= 1e-6
        if cruise_mask.any():
            ground = np.array([terrain.elevation_ft(a, b) for a, b in zip(lat[cruise_mask], lon[cruise_mask])])
            clearance = float(np.min(alt[cruise_mask] - ground))
        else:
            clearance = math.inf
        return _RouteInfo(route, True, (t, lat, lon), clearance)

    def route_coverage(self, info: _RouteInfo, gcs: int) -> tuple[float, bool]:
        key = (id(info), gcs)
        hit = self._coverage.get(key)
        if hit is None:
            g = self.scenario.gcss[gcs]
            t, lat, lon = info.samples
            out = _haversine_np(lat, lon, g.position.lat, g.position.lon) > g.coverage_radius
            if len(t) > 1:
                out_time = float(np.sum(np.diff(t) * (out[1:].astype(float) + out[:-1]) / 2.0))
            else:
                out_time = 0.0
            hit = (out_time, bool(out.any()))
            self._coverage[key] = hit
        return hit

    def point_out_of_coverage(self, p: GeoPoint, gcs: int) -> bool:
        g = self.scenario.gcss[gcs]
        return haversine_nm(p.lat, p.lon, g.position.lat, g.position.lon) > g.coverage_radius

    # ---------------------------------------------------------------- propagation

    def propagate(self, plan: PlanView, c: Chromosome) -> Timeline:
        """Earliest-start schedule of the plan (see module docs of `propagate`)."""
        s = self.scenario
        n_u = len(s.uavs)
        prec: list[list[int]] = [[] for _ in s.tasks]
        for d in s.time_deps:
            if d.relation in (AllenRelation.BEFORE, AllenRelation.MEETS):
                prec[d.second].append(d.first)

        ready = [0.0] * n_u
        loc = [("base", u) for u in range(n_u)]
        alt = list(self.ground)
        airborne = [False] * n_u
        tracks = [UavTrack(fuel_remaining=u.initial_fuel) for u in s.uavs]
        pts: list[list[tuple[float, float, float]]] = [[] for _ in range(n_u)]
        ends: list[float | None] = [None] * len(s.tasks)
        windows: list[tuple[float, float]] = [(0.0, 0.0)] * len(s.tasks)
        legs: dict[tuple[int, int], Leg] = {}
        exp = self.config.duration_exponent
        min_rate = [u.profile(ProfileKind.MIN_CONSUMPTION).fuel_rate for u in s.uavs]

        for t in c.order_perm:
            team = c.task_assign[t]
            n = len(team)
            infos = []
            arrival = 0.0
            for k, u in enumerate(team):
                station = ("task", t, k, n)
                kind = c.path_fp[t][k]
                info = self.route(u, loc[u], alt[u], station, kind, None)
                infos.append((station, kind, info))
                arrival = max(arrival, ready[u] + info.route.duration)
            bound = max((ends[a] for a in prec[t] if ends[a] is not None), default=0.0)
            start = max(arrival, bound)
            dur_task = s.tasks[t].base_duration / n ** exp
            end = start + dur_task
            ends[t] = end
            windows[t] = (start, end)
            for k, u in enumerate(team):
                station, kind, info = infos[k]
                r = info.route
                departure = start - r.duration
                loiter = max(0.0, departure - ready[u])
                tr = tracks[u]
                fuel_loiter = 0.0
                if airborne[u]:
                    fuel_loiter = min_rate[u] * loiter / 3600.0
                    if loiter > 0:
                        self._stationary(tr, u, c, self.point(loc[u]), loiter, alt[u])
                else:
                    airborne[u] = True
                    tr.used = True
                    tr.takeoff = departure
                    b = s.uavs[u].position
                    pts[u].append((departure, b.lat, b.lon))
                fuel_task = min_rate[u] * dur_task / 3600.0
                legs[(t, u)] = Leg(t, u, kind, departure, start, end, r.duration, r.length, r.fuel,
                                   r.waypoints, dur_task, departure - ready[u], fuel_task, fuel_loiter, info.ok)
                tr.distance += r.length
                tr.fuel += r.fuel + fuel_task + fuel_loiter
                self._leg_track(tr, u, c, info, departure, pts[u])
                sp = self.point(station)
                pts[u].append((end, sp.lat, sp.lon))
                self._stationary(tr, u, c, sp, dur_task, s.uavs[u].profile(kind).altitude)
                ready[u] = end
                loc[u] = station
                alt[u] = s.uavs[u].profile(kind).altitude

        for u, tr in enumerate(tracks):
            if not tr.used:
                continue
            kind = c.return_fp[u]
            info = self.route(u, loc[u], alt[u], ("base", u), kind, self.ground[u])
            r = info.route
            tr.dur_return = r.duration
            tr.dist_return = r.length
            tr.fuel_return = r.fuel
            tr.return_ok = info.ok
            tr.return_waypoints = r.waypoints
            tr.return_time = ready[u] + r.duration
            tr.distance += r.length
            tr.fuel += r.fuel
            self._leg_track(tr, u, c, info, ready[u], pts[u])
            tr.flight_time = tr.return_time - tr.takeoff
            tr.fuel_remaining = s.uavs[u].initial_fuel - tr.fuel
            tr.cost = s.uavs[u].cost_per_hour * tr.flight_time / 3600.0
            arr = np.array(pts[u], dtype=float)
            tr.track = (arr[:, 0], arr[:, 1], arr[:, 2])

        timeline = Timeline(legs, tracks, windows)
        timeline.separation = self._separation(timeline)
        return timeline

    def _leg_track(self, tr: UavTrack, u: int, c: Chromosome, info: _RouteInfo, t0: float, pts) -> None:
        for t, lat, lon, _ in info.route.breakpoints:
            pts.append((t0 + t, lat, lon))
        out_time, breach = self.route_coverage(info, c.gcs_assign[u])
        tr.out_of_coverage += out_time
        tr.coverage_breach |= breach
        tr.min_clearance = min(tr.min_clearance, info.clearance)

    def _stationary(self, tr: UavTrack, u: int, c: Chromosome, p: GeoPoint, duration: float, alt_ft: float) -> None:
        if self.point_out_of_coverage(p, c.gcs_assign[u]):
            tr.coverage_breach = True
            tr.out_of_coverage += duration
        tr.min_clearance = min(tr.min_clearance, alt_ft - self.scenario.terrain.elevation_ft(p.lat, p.lon))

    def _separation(self, tl: Timeline) -> dict[tuple[int, int], float]:
        used = tl.used
        if len(used) < 2:
            return {}
        horizon = max(tl.uavs[u].return_time for u in used)
        grid_t = np.arange(0.0, horizon + self.config.sample_step, self.config.sample_step)
        pos = {}
        for u in used:
            tr = tl.uavs[u]
            ts, la, lo = tr.track
            mask = (grid_t >= tr.takeoff) & (grid_t <= tr.return_time)
            pos[u] = (mask, np.interp(grid_t, ts, la), np.interp(grid_t, ts, lo))
        out = {}
        for a, b in combinations(used, 2):
            ma, la, loa = pos[a]
            mb, lb, lob = pos[b]
            m = ma & mb
            if not m.any():
                out[(a, b)] = math.inf
                continue
            out[(a, b)] = float(np.min(_haversine_np(la[m], loa[m], lb[m], lob[m])))
        return out

    # ---------------------------------------------------------------- constraints

    def check(self, tl: Timeline, plan: PlanView, c: Chromosome) -> ViolationReport:
        s = self.scenario
        rep = ViolationReport()
        for t, team in enumerate(c.task_assign):
            need = s.tasks[t].required_sensor
            for k, u in enumerate(team):
                sensor = c.sensor_assign[t][k]
                if sensor != need or sensor not in s.uavs[u].sensors:
                    rep.sensor += 1
        rep.order = len(c.order_perm) - len(set(c.order_perm))

        for d in s.time_deps:
            if not _allen_holds(d.relation, tl.windows[d.first], tl.windows[d.second]):
                rep.allen += 1
        for d in s.vehicle_deps:
            a, b = set(c.task_assign[d.first]), set(c.task_assign[d.second])
            ok = a == b if d.mode is VehicleMode.SAME_UAV else not (a & b)
            rep.vehicle_dep += not ok

        load = [0] * len(s.gcss)
        for u, g in enumerate(c.gcs_assign):
            load[g] += 1
            if s.uavs[u].type_tag not in s.gcss[g].allowed_types:
                rep.gcs_type += 1
        rep.gcs_capacity = sum(max(0, n - s.gcss[g].max_uavs) for g, n in enumerate(load))

        for (t, u), leg in tl.legs.items():
            rep.path += not leg.path_ok
            rep.overaltitude_overspeed += self._over_limits(u, leg.profile)
        for u in tl.used:
            tr = tl.uavs[u]
            uav = s.uavs[u]
            rep.ret += not tr.return_ok
            rep.overaltitude_overspeed += self._over_limits(u, c.return_fp[u])
            rep.gcs_coverage += tr.coverage_breach
            rep.ground_clearance += tr.min_clearance <= 0
            rep.fuel += tr.fuel >= uav.initial_fuel
            rep.flight_time += tr.flight_time > uav.max_flight_time
            rep.range += tr.distance > uav.max_range
        rep.uav_separation = sum(v <= self.config.collision_floor for v in tl.separation.values())
        return rep

    def _over_limits(self, u: int, kind: ProfileKind) -> bool:
        uav = self.scenario.uavs[u]
        p = uav.profile(kind)
        return bool((uav.max_speed is not None and p.speed > uav.max_speed)
                    or (uav.max_altitude is not None and p.altitude > uav.max_altitude))

    def objectives(self, tl: Timeline) -> ObjectiveVector:
        used = tl.used
        trs = [tl.uavs[u] for u in used]
        return ObjectiveVector(
            cost=sum(tr.cost for tr in trs),
            makespan=max((tr.return_time for tr in trs), default=0.0),
            risk=risk(tl, self.scenario.thresholds),
            n_uavs=sum(tr.flight_time > 0 for tr in trs),
            fuel=sum(tr.fuel for tr in trs),
            flight_time=sum(tr.flight_time for tr in trs),
            distance=sum(tr.distance for tr in trs),
        )

    def evaluate(self, c: Chromosome) -> tuple[ViolationReport, ObjectiveVector | None, Timeline]:
        plan = decode(c, self.scenario)
        tl = self.propagate(plan, c)
        rep = self.check(tl, plan, c)
        return rep, (self.objectives(tl) if rep.total == 0 else None), tl


def _allen_holds(rel: AllenRelation, a: tuple[float, float], b: tuple[float, float], tol: float = TIME_TOL) -> bool:
    sa, ea = a
    sb, eb = b
    if rel is AllenRelation.BEFORE:
        return ea <= sb + tol
    if rel is AllenRelation.MEETS:
        return abs(ea - sb) <= tol
    if rel is AllenRelation.OVERLAPS:
        return sa < sb - tol and sb < ea - tol and ea < eb - tol
    if rel is AllenRelation.STARTS:
        return abs(sa - sb) <= tol and ea < eb - tol
    if rel is AllenRelation.DURING:
        return sa > sb + tol and ea < eb - tol
    if rel is AllenRelation.FINISHES:
        return abs(ea - eb) <= tol and sa > sb + tol
    if rel is AllenRelation.EQUALS:
        return abs(sa - sb) <= tol and abs(ea - eb) <= tol
    raise ValueError(rel)


def risk(tl: Timeline, th: RiskThresholds) -> float:
    """Mean of four percentages over used UAVs: low final fuel, low ground
    clearance, fraction of flight time out of GCS coverage, and close pairs."""
    used = tl.used
    if not used:
        return 0.0
    trs = [tl.uavs[u] for u in used]
    n = len(trs)
    low_fuel = 100.0 * sum(tr.fuel_remaining < th.fuel_th for tr in trs) / n
    low_alt = 100.0 * sum(tr.min_clearance < th.ground_clearance for tr in trs) / n
    uncovered = sum(min(1.0, tr.out_of_coverage / tr.flight_time) if tr.flight_time > 0 else 0.0
                    for tr in trs) * 100.0 / n
    pairs = list(tl.separation.values())
    close = 100.0 * sum(v < th.separation for v in pairs) / len(pairs) if pairs else 0.0
    return (low_fuel + low_alt + uncovered + close) / 4.0


_problems: dict[int, tuple[Scenario, MissionProblem]] = {}


def problem_for(s: Scenario) -> MissionProblem:
    hit = _problems.get(id(s))
    if hit is None or hit[0] is not s:
        if len(_problems) > 32:
            _problems.clear()
        hit = (s, MissionProblem(s))
        _problems[id(s)] = hit
    return hit[1]


def propagate(p: PlanView, s: Scenario, c: Chromosome) -> Timeline:
    return problem_for(s).propagate(p, c)


def check_constraints(t: Timeline, p: PlanView, c: Chromosome, s: Scenario) -> ViolationReport:
    return problem_for(s).check(t, p, c)


def objectives(t: Timeline, p: PlanView, s: Scenario) -> ObjectiveVector:
    return problem_for(s).objectives(t)
