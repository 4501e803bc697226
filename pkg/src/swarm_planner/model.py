"""Mission world: domain types, scenario validation, distances and synthetic datasets.

Indices are 0-based everywhere: a task, UAV or GCS is identified by its
position in the corresponding scenario tuple.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

EARTH_RADIUS_NM = 3440.065
FT_PER_NM = 6076.12
FT_PER_M = 3.28084


class SensorKind(str, Enum):
    EO_IR = "EoIr"
    SAR_RADAR = "SarRadar"
    ISAR_RADAR = "IsarRadar"
    MPR_RADAR = "MprRadar"


class ProfileKind(str, Enum):
    CLIMB = "Climb"
    DESCENT = "Descent"
    MIN_CONSUMPTION = "MinConsumption"
    MAX_SPEED = "MaxSpeed"


CRUISE_KINDS = (ProfileKind.MIN_CONSUMPTION, ProfileKind.MAX_SPEED)


class UavType(str, Enum):
    MALE = "MALE"
    HALE = "HALE"
    UCAV = "UCAV"
    URAV = "URAV"


class AllenRelation(str, Enum):
    BEFORE = "Before"
    MEETS = "Meets"
    OVERLAPS = "Overlaps"
    STARTS = "Starts"
    DURING = "During"
    FINISHES = "Finishes"
    EQUALS = "Equals"


PRECEDENCE_RELATIONS = (AllenRelation.BEFORE, AllenRelation.MEETS)


class VehicleMode(str, Enum):
    SAME_UAV = "SameUav"
    DIFFERENT_UAV = "DifferentUav"


class GenerationFailed(RuntimeError):
    pass


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float
    alt: float = 0.0  # feet

    def __post_init__(self):
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude out of range: {self.lat}")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude out of range: {self.lon}")
        if not math.isfinite(self.alt) or self.alt < 0:
            raise ValueError(f"altitude must be finite and non-negative: {self.alt}")


@dataclass(frozen=True)
class Task:
    center: GeoPoint
    radius: float  # NM
    required_sensor: SensorKind
    base_duration: float  # seconds
    multi_uav: bool = False

    def __post_init__(self):
        if self.base_duration <= 0:
            raise ValueError("task base_duration must be positive")
        if self.radius < 0:
            raise ValueError("task radius must be non-negative")


@dataclass(frozen=True)
class FlightProfile:
    kind: ProfileKind
    speed: float  # knots
    fuel_rate: float  # kg/h
    altitude: float | None = None  # feet, cruise kinds
    angle: float | None = None  # degrees, climb/descent kinds

    def __post_init__(self):
        if self.speed <= 0 or self.fuel_rate <= 0:
            raise ValueError(f"{self.kind.value} profile needs positive speed and fuel rate")
        if self.kind in CRUISE_KINDS:
            if self.altitude is None or self.altitude < 0:
                raise ValueError(f"{self.kind.value} profile needs a non-negative altitude")
        elif self.angle is None or not 0 < self.angle < 90:
            raise ValueError(f"{self.kind.value} profile needs an angle in (0, 90) degrees")


@dataclass(frozen=True)
class Uav:
    type_tag: UavType
    position: GeoPoint
    initial_fuel: float  # kg
    cost_per_hour: float
    max_flight_time: float  # seconds
    max_range: float  # NM
    sensors: frozenset[SensorKind]
    profiles: tuple[FlightProfile, ...]
    max_speed: float | None = None  # knots
    max_altitude: float | None = None  # feet

    def __post_init__(self):
        if self.initial_fuel <= 0:
            raise ValueError("initial_fuel must be positive")
        if self.cost_per_hour < 0 or self.max_flight_time <= 0 or self.max_range <= 0:
            raise ValueError("invalid UAV limits")
        if not self.sensors:
            raise ValueError("a UAV carries at least one sensor")
        kinds = {p.kind for p in self.profiles}
        if kinds != set(ProfileKind) or len(self.profiles) != len(ProfileKind):
            raise ValueError("a UAV needs exactly one profile of each kind")
        object.__setattr__(self, "_by_kind", {p.kind: p for p in self.profiles})

    def profile(self, kind: ProfileKind) -> FlightProfile:
        return self._by_kind[kind]

    def sorted_sensors(self) -> list[SensorKind]:
        order = list(SensorKind)
        return sorted(self.sensors, key=order.index)


@dataclass(frozen=True)
class Gcs:
    position: GeoPoint
    max_uavs: int
    allowed_types: frozenset[UavType]
    coverage_radius: float  # NM

    def __post_init__(self):
        if self.max_uavs < 1:
            raise ValueError("max_uavs must be at least 1")
        if not self.allowed_types:
            raise ValueError("allowed_types must be non-empty")
        if self.coverage_radius <= 0:
            raise ValueError("coverage_radius must be positive")


@dataclass(frozen=True)
class Nfz:
    polygon: tuple[GeoPoint, ...]

    def __post_init__(self):
        if len(self.polygon) < 3:
            raise ValueError("an NFZ polygon needs at least 3 vertices")

    def contains(self, lat: float, lon: float) -> bool:
        return point_in_polygon(lat, lon, [(p.lat, p.lon) for p in self.polygon])


@dataclass(frozen=True)
class TimeDependency:
    first: int
    second: int
    relation: AllenRelation

    def __post_init__(self):
        if self.first == self.second:
            raise ValueError("a time dependency links two different tasks")


@dataclass(frozen=True)
class VehicleDependency:
    first: int
    second: int
    mode: VehicleMode

    def __post_init__(self):
        if self.first == self.second:
            raise ValueError("a vehicle dependency links two different tasks")


@dataclass(frozen=True)
class Terrain:
    """Elevation heightmap in meters over a lat/lon box, nearest-cell lookup."""

    lat_min: float = 0.0
    lat_max: float = 0.0
    lon_min: float = 0.0
    lon_max: float = 0.0
    heights: tuple[tuple[float, ...], ...] = ((0.0,),)

    def elevation_ft(self, lat: float, lon: float) -> float:
        rows, cols = len(self.heights), len(self.heights[0])
        if rows == 1 and cols == 1:
            return self.heights[0][0] * FT_PER_M
        fy = (lat - self.lat_min) / max(self.lat_max - self.lat_min, 1e-12)
        fx = (lon - self.lon_min) / max(self.lon_max - self.lon_min, 1e-12)
        r = min(max(int(fy * rows), 0), rows - 1)
        c = min(max(int(fx * cols), 0), cols - 1)
        return self.heights[r][c] * FT_PER_M


@dataclass(frozen=True)
class RiskThresholds:
    fuel_th: float = 50.0  # kg
    ground_clearance: float = 1000.0  # feet
    separation: float = 1.0  # NM

    def __post_init__(self):
        if min(self.fuel_th, self.ground_clearance, self.separation) <= 0:
            raise ValueError("risk thresholds must be strictly positive")


@dataclass(frozen=True)
class Scenario:
    tasks: tuple[Task, ...]
    uavs: tuple[Uav, ...]
    gcss: tuple[Gcs, ...]
    nfzs: tuple[Nfz, ...] = ()
    time_deps: tuple[TimeDependency, ...] = ()
    vehicle_deps: tuple[VehicleDependency, ...] = ()
    terrain: Terrain = field(default_factory=Terrain)
    thresholds: RiskThresholds = field(default_factory=RiskThresholds)
    name: str = ""

    @property
    def n_multi(self) -> int:
        return sum(t.multi_uav for t in self.tasks)

    def capable_uavs(self, task: int) -> list[int]:
        """UAVs carrying the sensor a task requires."""
        need = self.tasks[task].required_sensor
        return [u for u, uav in enumerate(self.uavs) if need in uav.sensors]

    def compatible_gcss(self, uav: int) -> list[int]:
        kind = self.uavs[uav].type_tag
        return [g for g, gcs in enumerate(self.gcss) if kind in gcs.allowed_types]

    def fingerprint(self) -> str:
        """Content hash of the canonical JSON form."""
        return hashlib.sha256(json.dumps(scenario_to_dict(self), sort_keys=True).encode()).hexdigest()[:16]


@dataclass(frozen=True)
class DatasetSpec:
    tasks: int
    multi_uav_tasks: int
    uavs: int
    gcss: int
    nfzs: int
    time_deps: int

    def __post_init__(self):
        counts = (self.tasks, self.multi_uav_tasks, self.uavs, self.gcss, self.nfzs, self.time_deps)
        if min(counts) < 0:
            raise ValueError("dataset counts must be non-negative")
        if self.multi_uav_tasks > self.tasks:
            raise ValueError("more multi-UAV tasks than tasks")
        if self.uavs < 1 or self.gcss < 1 or self.tasks < 1:
            raise ValueError("a dataset needs at least one task, UAV and GCS")
        if self.time_deps > self.tasks * (self.tasks - 1) // 2:
            raise ValueError("too many time dependencies for an acyclic chain")


# Feature counts of the sixteen benchmark missions (tasks, multi-UAV, UAVs, GCSs, NFZs, time deps).
TABLE1 = (
    DatasetSpec(5, 0, 3, 1, 0, 0),
    DatasetSpec(6, 1, 3, 1, 1, 0),
    DatasetSpec(6, 1, 4, 2, 2, 1),
    DatasetSpec(7, 1, 5, 2, 1, 2),
    DatasetSpec(8, 2, 5, 2, 3, 1),
    DatasetSpec(9, 2, 5, 2, 0, 2),
    DatasetSpec(9, 2, 6, 2, 2, 2),
    DatasetSpec(10, 2, 6, 2, 3, 3),
    DatasetSpec(11, 3, 6, 2, 3, 2),
    DatasetSpec(12, 3, 7, 3, 0, 2),
    DatasetSpec(12, 3, 8, 3, 2, 3),
    DatasetSpec(13, 4, 7, 3, 4, 4),
    DatasetSpec(14, 4, 8, 3, 0, 3),
    DatasetSpec(15, 4, 9, 3, 5, 4),
    DatasetSpec(16, 4, 9, 3, 4, 4),
    DatasetSpec(16, 5, 10, 3, 5, 5),
)


def geodesic_distance(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in nautical miles (haversine); altitude ignored."""
    return haversine_nm(a.lat, a.lon, b.lat, b.lon)


def haversine_nm(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dp = p2 - p1
    dl = math.radians(lon2 - lon1)
    h = math.sin(dp / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
    return 2 * EARTH_RADIUS_NM * math.asin(min(1.0, math.sqrt(h)))


def destination(lat: float, lon: float, bearing_deg: float, dist_nm: float) -> tuple[float, float]:
    """Point reached from (lat, lon) flying dist_nm along an initial bearing."""
    d = dist_nm / EARTH_RADIUS_NM
    th = math.radians(bearing_deg)
    p1, l1 = math.radians(lat), math.radians(lon)
    p2 = math.asin(math.sin(p1) * math.cos(d) + math.cos(p1) * math.sin(d) * math.cos(th))
    l2 = l1 + math.atan2(math.sin(th) * math.sin(d) * math.cos(p1), math.cos(d) - math.sin(p1) * math.sin(p2))
    return math.degrees(p2), (math.degrees(l2) + 540.0) % 360.0 - 180.0


def point_in_polygon(y: float, x: float, poly: Sequence[tuple[float, float]]) -> bool:
    """Even-odd rule; poly holds (y, x) vertices."""
    inside = False
    n = len(poly)
    j = n - 1
    for i in range(n):
        yi, xi = poly[i]
        yj, xj = poly[j]
        if (yi > y) != (yj > y):
            x_cross = xi + (y - yi) * (xj - xi) / (yj - yi)
            if x < x_cross:
                inside = not inside
        j = i
    return inside


def _segments_cross(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        return (v > 1e-15) - (v < -1e-15)

    o1, o2 = orient(p1, p2, q1), orient(p1, p2, q2)
    o3, o4 = orient(q1, q2, p1), orient(q1, q2, p2)
    return o1 != o2 and o3 != o4 and 0 not in (o1, o2, o3, o4)


def polygon_is_simple(poly: Sequence[tuple[float, float]]) -> bool:
    n = len(poly)
    edges = [(poly[i], poly[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue
            if _segments_cross(*edges[i], *edges[j]):
                return False
    return True


# --------------------------------------------------------------------------- validation


@dataclass(frozen=True)
class Defect:
    code: str
    message: str


@dataclass
class ValidationReport:
    defects: list[Defect] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.defects

    def codes(self) -> list[str]:
        return [d.code for d in self.defects]

    def add(self, code: str, message: str) -> None:
        self.defects.append(Defect(code, message))


def _max_matching(adj: list[list[int]], capacity: list[int]) -> int:
    """Size of a maximum capacitated assignment of left nodes to right slots."""
    slots = [(g, k) for g, cap in enumerate(capacity) for k in range(cap)]
    slot_ids: dict[int, list[int]] = {}
    for s, (g, _) in enumerate(slots):
        slot_ids.setdefault(g, []).append(s)
    owner = [-1] * len(slots)

    def augment(u: int, seen: set[int]) -> bool:
        for g in adj[u]:
            for s in slot_ids.get(g, []):
                if s in seen:
                    continue
                seen.add(s)
                if owner[s] < 0 or augment(owner[s], seen):
                    owner[s] = u
                    return True
        return False

    return sum(augment(u, set()) for u in range(len(adj)))


def validate_scenario(s: Scenario) -> ValidationReport:
    """List every structural defect; an empty report means the scenario can be solved."""
    report = ValidationReport()
    n_tasks = len(s.tasks)
    if not s.tasks:
        report.add("no tasks", "scenario has no tasks")
    if not s.uavs:
        report.add("no uavs", "scenario has no UAVs")
    if not s.gcss:
        report.add("no gcss", "scenario has no GCSs")

    for k, dep in enumerate(list(s.time_deps) + list(s.vehicle_deps)):
        for tid in (dep.first, dep.second):
            if not 0 <= tid < n_tasks:
                report.add("dangling task id", f"dependency {k} references task {tid}")

    for t, task in enumerate(s.tasks):
        if not s.capable_uavs(t):
            report.add("no capable UAV", f"task {t} requires {task.required_sensor.value}, no UAV carries it")

    if s.uavs and s.gcss:
        adj = [s.compatible_gcss(u) for u in range(len(s.uavs))]
        for u, opts in enumerate(adj):
            if not opts:
                report.add("no compatible GCS", f"UAV {u} of type {s.uavs[u].type_tag.value} fits no GCS")
        if _max_matching(adj, [g.max_uavs for g in s.gcss]) < len(s.uavs):
            report.add("gcs capacity", "no assignment of all UAVs to GCSs respects types and capacities")

    for z, nfz in enumerate(s.nfzs):
        if not polygon_is_simple([(p.lat, p.lon) for p in nfz.polygon]):
            report.add("nfz not simple", f"NFZ {z} polygon self-intersects")
        for u, uav in enumerate(s.uavs):
            if nfz.contains(uav.position.lat, uav.position.lon):
                report.add("nfz covers base", f"NFZ {z} covers the base of UAV {u}")

    edges = [
        (d.first, d.second)
        for d in s.time_deps
        if d.relation in PRECEDENCE_RELATIONS and 0 <= d.first < n_tasks and 0 <= d.second < n_tasks
    ]
    if _has_cycle(n_tasks, edges):
        report.add("cyclic precedence", "Before/Meets dependencies form a cycle")
    return report


def _has_cycle(n: int, edges: Iterable[tuple[int, int]]) -> bool:
    from graphlib import CycleError, TopologicalSorter

    ts = TopologicalSorter({i: set() for i in range(n)})
    for a, b in edges:
        ts.add(b, a)
    try:
        ts.prepare()
    except CycleError:
        return True
    return False


# --------------------------------------------------------------------------- generator


@dataclass(frozen=True)
class UavTemplate:
    """Nominal figures for one vehicle class; the generator jitters them per UAV."""

    type_tag: UavType
    min_speed: float
    min_rate: float
    min_alt: float
    max_speed: float
    max_rate: float
    max_alt: float
    climb_speed: float
    climb_rate: float
    climb_angle: float
    descent_speed: float
    descent_rate: float
    descent_angle: float
    fuel: float
    cost_per_hour: float
    max_flight_time: float
    max_range: float


DEFAULT_TEMPLATES = (
    UavTemplate(UavType.MALE, 110, 45, 6000, 190, 120, 4500, 120, 95, 12.0, 150, 30, 10.0,
                fuel=260, cost_per_hour=900, max_flight_time=3.0 * 3600, max_range=330),
    UavTemplate(UavType.HALE, 130, 60, 7000, 210, 150, 5500, 140, 120, 11.0, 170, 40, 9.0,
                fuel=340, cost_per_hour=1400, max_flight_time=3.5 * 3600, max_range=420),
    UavTemplate(UavType.UCAV, 150, 80, 5000, 260, 210, 3500, 170, 160, 15.0, 200, 50, 12.0,
                fuel=320, cost_per_hour=2000, max_flight_time=2.2 * 3600, max_range=340),
    UavTemplate(UavType.URAV, 90, 30, 4000, 150, 85, 3000, 100, 70, 14.0, 120, 20, 12.0,
                fuel=180, cost_per_hour=600, max_flight_time=3.0 * 3600, max_range=260),
)


@dataclass(frozen=True)
class GeneratorConfig:
    """Synthetic-world knobs. Defaults are declared choices, not benchmark ground truth."""

    lat_range: tuple[float, float] = (40.0, 40.9)
    lon_range: tuple[float, float] = (-4.0, -2.8)
    task_radius: tuple[float, float] = (0.5, 1.5)  # NM
    task_duration: tuple[float, float] = (900.0, 2400.0)  # s
    nfz_radius: tuple[float, float] = (3.0, 6.0)  # NM
    nfz_clearance: float = 2.5  # NM kept between an NFZ and any task zone, base or GCS
    min_spacing: float = 4.0  # NM between task zones / bases
    gcs_margin: float = 6.0  # NM added to coverage beyond the farthest point a GCS must see
    gcs_reach: str = "nearest"  # or "capable"
    sensors_per_uav: tuple[int, int] = (1, 2)
    relations: tuple[AllenRelation, ...] = (AllenRelation.BEFORE, AllenRelation.MEETS)
    templates: tuple[UavTemplate, ...] = DEFAULT_TEMPLATES
    thresholds: RiskThresholds = RiskThresholds()
    # max-speed fuel per NM relative to min-consumption; None keeps the template rate
    fast_burn_ratio: float | None = 0.9
    max_attempts: int = 2000


def _jitter(rng: random.Random, value: float, spread: float = 0.1) -> float:
    return round(value * rng.uniform(1 - spread, 1 + spread), 3)


def _make_uav(rng: random.Random, tpl: UavTemplate, pos: GeoPoint, sensors: frozenset[SensorKind],
              fast_burn_ratio: float | None = None) -> Uav:
    min_speed, min_rate = _jitter(rng, tpl.min_speed), _jitter(rng, tpl.min_rate)
    max_speed, max_rate = _jitter(rng, tpl.max_speed), _jitter(rng, tpl.max_rate)
    if fast_burn_ratio is not None:
        # fuel per NM at max speed is a fixed fraction of the min-consumption figure
        max_rate = round(min_rate * max_speed / min_speed * fast_burn_ratio, 3)
    profiles = (
        FlightProfile(ProfileKind.CLIMB, _jitter(rng, tpl.climb_speed), _jitter(rng, tpl.climb_rate),
                      angle=_jitter(rng, tpl.climb_angle)),
        FlightProfile(ProfileKind.DESCENT, _jitter(rng, tpl.descent_speed), _jitter(rng, tpl.descent_rate),
                      angle=_jitter(rng, tpl.descent_angle)),
        FlightProfile(ProfileKind.MIN_CONSUMPTION, min_speed, min_rate,
                      altitude=round(tpl.min_alt * rng.uniform(0.9, 1.1), -2)),
        FlightProfile(ProfileKind.MAX_SPEED, max_speed, max_rate,
                      altitude=round(tpl.max_alt * rng.uniform(0.9, 1.1), -2)),
    )
    top_speed = max(p.speed for p in profiles)
    top_alt = max(p.altitude or 0.0 for p in profiles)
    return Uav(
        type_tag=tpl.type_tag,
        position=pos,
        initial_fuel=_jitter(rng, tpl.fuel),
        cost_per_hour=_jitter(rng, tpl.cost_per_hour),
        max_flight_time=round(_jitter(rng, tpl.max_flight_time)),
        max_range=_jitter(rng, tpl.max_range),
        sensors=sensors,
        profiles=profiles,
        max_speed=round(top_speed * 1.15, 1),
        max_altitude=round(top_alt * 1.25, -2),
    )


def _regular_polygon(rng: random.Random, lat: float, lon: float, radius: float) -> tuple[GeoPoint, ...]:
    n = rng.randint(4, 7)
    start = rng.uniform(0, 360)
    pts = []
    for k in range(n):
        r = radius * rng.uniform(0.75, 1.0)
        plat, plon = destination(lat, lon, start + 360.0 * k / n, r)
        pts.append(GeoPoint(round(plat, 6), round(plon, 6)))
    return tuple(pts)


def generate_scenario(spec: DatasetSpec, seed: int, config: GeneratorConfig = GeneratorConfig(),
                      name: str = "") -> Scenario:
    """Build a random admissible scenario with exactly the feature counts of `spec`.

    Pure function of (spec, seed, config).
    """
    rng = random.Random(seed)
    lat0, lat1 = config.lat_range
    lon0, lon1 = config.lon_range

    def draw_point(avoid: list[GeoPoint], spacing: float) -> GeoPoint:
        for _ in range(config.max_attempts):
            p = GeoPoint(round(rng.uniform(lat0, lat1), 6), round(rng.uniform(lon0, lon1), 6))
            if all(geodesic_distance(p, q) >= spacing for q in avoid):
                return p
        raise GenerationFailed("could not place a point with the requested spacing")

    placed: list[GeoPoint] = []
    bases = []
    for _ in range(spec.uavs):
        p = draw_point(placed, config.min_spacing)
        placed.append(p)
        bases.append(p)
    centers = []
    for _ in range(spec.tasks):
        p = draw_point(placed, config.min_spacing)
        placed.append(p)
        centers.append(p)

    # sensors: every UAV gets 1-2 kinds; tasks require a kind someone carries
    kinds = list(SensorKind)
    uav_sensors = []
    for _ in range(spec.uavs):
        k = rng.randint(*config.sensors_per_uav)
        uav_sensors.append(frozenset(rng.sample(kinds, min(k, len(kinds)))))
    carried: dict[SensorKind, int] = {}
    for ss in uav_sensors:
        for sk in ss:
            carried[sk] = carried.get(sk, 0) + 1
    available = sorted(carried, key=kinds.index)
    shared = [sk for sk in available if carried[sk] >= 2] or available

    multi = set(rng.sample(range(spec.tasks), spec.multi_uav_tasks))
    tasks = []
    for t, c in enumerate(centers):
        sensor = rng.choice(shared if t in multi else available)
        tasks.append(Task(
            center=c,
            radius=round(rng.uniform(*config.task_radius), 3),
            required_sensor=sensor,
            base_duration=round(rng.uniform(*config.task_duration)),
            multi_uav=t in multi,
        ))

    templates = config.templates
    uavs = [
        _make_uav(rng, templates[rng.randrange(len(templates))], bases[u], uav_sensors[u],
                  config.fast_burn_ratio)
        for u in range(spec.uavs)
    ]

    # GCS placement: each UAV gets a home GCS, and every GCS covers its homes plus nearby tasks
    gcs_pos = [draw_point([], 0.0) for _ in range(spec.gcss)]
    homes: list[list[int]] = [[] for _ in range(spec.gcss)]
    for u, b in enumerate(bases):
        g = min(range(spec.gcss), key=lambda k: geodesic_distance(b, gcs_pos[k]))
        homes[g].append(u)
    # a GCS sees its home bases plus, per task, either only the nearest GCS whose home
    # UAVs can serve it ("nearest") or every such GCS ("capable")
    seen: list[list[tuple[GeoPoint, float]]] = [[(bases[u], 0.0) for u in homes[g]] for g in range(spec.gcss)]
    for task in tasks:
        able = [g for g in range(spec.gcss) if any(task.required_sensor in uav_sensors[u] for u in homes[g])]
        able = able or list(range(spec.gcss))
        if config.gcs_reach == "nearest":
            able = [min(able, key=lambda k: geodesic_distance(task.center, gcs_pos[k]))]
        for g in able:
            seen[g].append((task.center, task.radius))
    gcss = []
    all_types = [tpl.type_tag for tpl in templates]
    for g in range(spec.gcss):
        home_types = {uavs[u].type_tag for u in homes[g]}
        extra = {t for t in all_types if rng.random() < 0.5}
        allowed = frozenset(home_types | extra) or frozenset({rng.choice(all_types)})
        reach = max((geodesic_distance(gcs_pos[g], p) + r for p, r in seen[g]), default=0.0) + config.gcs_margin
        cap = min(spec.uavs, max(1, len(homes[g]) + rng.randint(0, 1)))
        gcss.append(Gcs(gcs_pos[g], cap, allowed, round(reach, 3)))

    # NFZs keep clear of every zone, base and station
    keep_out = [(b, 0.0) for b in bases] + [(g.position, 0.0) for g in gcss]
    keep_out += [(t.center, t.radius) for t in tasks]
    nfzs = []
    for _ in range(spec.nfzs):
        for _attempt in range(config.max_attempts):
            radius = rng.uniform(*config.nfz_radius)
            lat = rng.uniform(lat0, lat1)
            lon = rng.uniform(lon0, lon1)
            centre = GeoPoint(lat, lon)
            if all(geodesic_distance(centre, p) > radius + r + config.nfz_clearance for p, r in keep_out):
                nfzs.append(Nfz(_regular_polygon(rng, lat, lon, radius)))
                break
        else:
            raise GenerationFailed("could not place an NFZ clear of tasks and bases")

    deps = []
    pairs = [(a, b) for a in range(spec.tasks) for b in range(spec.tasks) if a < b]
    for a, b in rng.sample(pairs, spec.time_deps):
        if rng.random() < 0.5:
            a, b = b, a
        deps.append((a, b))
    # orient along a random topological order so precedence stays acyclic
    rank = list(range(spec.tasks))
    rng.shuffle(rank)
    time_deps = []
    for a, b in deps:
        if rank[a] > rank[b]:
            a, b = b, a
        time_deps.append(TimeDependency(a, b, rng.choice(config.relations)))

    scenario = Scenario(
        tasks=tuple(tasks),
        uavs=tuple(uavs),
        gcss=tuple(gcss),
        nfzs=tuple(nfzs),
        time_deps=tuple(time_deps),
        vehicle_deps=(),
        terrain=Terrain(),
        thresholds=config.thresholds,
        name=name,
    )
    report = validate_scenario(scenario)
    if not report.ok:
        raise GenerationFailed("; ".join(d.message for d in report.defects))
    return scenario


# --------------------------------------------------------------------------- JSON


def _point(p: GeoPoint) -> list[float]:
    return [p.lat, p.lon, p.alt]


def _unpoint(v: Sequence[float]) -> GeoPoint:
    return GeoPoint(*[float(x) for x in v])


def scenario_to_dict(s: Scenario) -> dict:
    return {
        "name": s.name,
        "tasks": [
            {"center": _point(t.center), "radius": t.radius, "required_sensor": t.required_sensor.value,
             "base_duration": t.base_duration, "multi_uav": t.multi_uav}
            for t in s.tasks
        ],
        "uavs": [
            {"type": u.type_tag.value, "position": _point(u.position), "initial_fuel": u.initial_fuel,
             "cost_per_hour": u.cost_per_hour, "max_flight_time": u.max_flight_time,
             "max_range": u.max_range, "sensors": [k.value for k in u.sorted_sensors()],
             "max_speed": u.max_speed, "max_altitude": u.max_altitude,
             "profiles": [
                 {"kind": p.kind.value, "speed": p.speed, "fuel_rate": p.fuel_rate,
                  "altitude": p.altitude, "angle": p.angle}
                 for p in u.profiles
             ]}
            for u in s.uavs
        ],
        "gcss": [
            {"position": _point(g.position), "max_uavs": g.max_uavs,
             "allowed_types": sorted(t.value for t in g.allowed_types),
             "coverage_radius": g.coverage_radius}
            for g in s.gcss
        ],
        "nfzs": [[_point(p) for p in z.polygon] for z in s.nfzs],
        "time_deps": [[d.first, d.second, d.relation.value] for d in s.time_deps],
        "vehicle_deps": [[d.first, d.second, d.mode.value] for d in s.vehicle_deps],
        "terrain": {"lat_min": s.terrain.lat_min, "lat_max": s.terrain.lat_max,
                    "lon_min": s.terrain.lon_min, "lon_max": s.terrain.lon_max,
                    "heights": [list(r) for r in s.terrain.heights]},
        "thresholds": {"fuel_th": s.thresholds.fuel_th, "ground_clearance": s.thresholds.ground_clearance,
                       "separation": s.thresholds.separation},
    }


def scenario_from_dict(d: Mapping) -> Scenario:
    tasks = tuple(
        Task(_unpoint(t["center"]), float(t["radius"]), SensorKind(t["required_sensor"]),
             float(t["base_duration"]), bool(t.get("multi_uav", False)))
        for t in d["tasks"]
    )
    uavs = tuple(
        Uav(
            type_tag=UavType(u["type"]),
            position=_unpoint(u["position"]),
            initial_fuel=float(u["initial_fuel"]),
            cost_per_hour=float(u["cost_per_hour"]),
            max_flight_time=float(u["max_flight_time"]),
            max_range=float(u["max_range"]),
            sensors=frozenset(SensorKind(k) for k in u["sensors"]),
            profiles=tuple(
                FlightProfile(ProfileKind(p["kind"]), float(p["speed"]), float(p["fuel_rate"]),
                              p.get("altitude"), p.get("angle"))
                for p in u["profiles"]
            ),
            max_speed=u.get("max_speed"),
            max_altitude=u.get("max_altitude"),
        )
        for u in d["uavs"]
    )
    gcss = tuple(
        Gcs(_unpoint(g["position"]), int(g["max_uavs"]), frozenset(UavType(t) for t in g["allowed_types"]),
            float(g["coverage_radius"]))
        for g in d["gcss"]
    )
    terrain_d = d.get("terrain") or {}
    terrain = Terrain(
        terrain_d.get("lat_min", 0.0), terrain_d.get("lat_max", 0.0),
        terrain_d.get("lon_min", 0.0), terrain_d.get("lon_max", 0.0),
        tuple(tuple(float(h) for h in row) for row in terrain_d.get("heights", [[0.0]])),
    )
    return Scenario(
        tasks=tasks,
        uavs=uavs,
        gcss=gcss,
        nfzs=tuple(Nfz(tuple(_unpoint(p) for p in poly)) for poly in d.get("nfzs", [])),
        time_deps=tuple(TimeDependency(int(a), int(b), AllenRelation(r)) for a, b, r in d.get("time_deps", [])),
        vehicle_deps=tuple(VehicleDependency(int(a), int(b), VehicleMode(m)) for a, b, m in d.get("vehicle_deps", [])),
        terrain=terrain,
        thresholds=RiskThresholds(**d.get("thresholds", {})),
        name=d.get("name", ""),
    )


def dump_scenario(s: Scenario) -> str:
    return json.dumps(scenario_to_dict(s), indent=1) + "\n"


def save_scenario(s: Scenario, path: str | Path) -> None:
    Path(path).write_text(dump_scenario(s))


def load_scenario(path: str | Path) -> Scenario:
    return scenario_from_dict(json.loads(Path(path).read_text()))
