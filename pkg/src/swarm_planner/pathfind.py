"""Any-angle NFZ avoidance on a planar grid and per-leg route metrics."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .model import (
    FT_PER_NM,
    FlightProfile,
    GeoPoint,
    ProfileKind,
    Scenario,
    Uav,
    haversine_nm,
    point_in_polygon,
)


class NoPath(RuntimeError):
    pass


class OutOfBounds(ValueError):
    pass


class InfeasibleClimb(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class Grid:
    """Square cells over a local equirectangular projection (x east, y north, in NM).

    `blocked[j, i]` is True for the cell in row j (y) and column i (x).
    """

    lat0: float
    lon0: float
    ref_lat: float
    resolution: float
    nx: int
    ny: int
    blocked: np.ndarray

    def __post_init__(self):
        if self.resolution <= 0:
            raise ValueError("grid resolution must be positive")
        object.__setattr__(self, "_kx", 60.0 * math.cos(math.radians(self.ref_lat)))

    def to_xy(self, lat: float, lon: float) -> tuple[float, float]:
        return (lon - self.lon0) * self._kx, (lat - self.lat0) * 60.0

    def to_geo(self, x: float, y: float) -> tuple[float, float]:
        return self.lat0 + y / 60.0, self.lon0 + x / self._kx

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        return int(math.floor(x / self.resolution)), int(math.floor(y / self.resolution))

    def in_bounds(self, x: float, y: float) -> bool:
        return 0.0 <= x <= self.nx * self.resolution and 0.0 <= y <= self.ny * self.resolution

    def is_free(self, i: int, j: int) -> bool:
        return 0 <= i < self.nx and 0 <= j < self.ny and not self.blocked[j, i]

    def center(self, i: int, j: int) -> tuple[float, float]:
        return (i + 0.5) * self.resolution, (j + 0.5) * self.resolution

    @property
    def n_blocked(self) -> int:
        return int(self.blocked.sum())


@dataclass(frozen=True)
class Segment:
    kind: ProfileKind
    distance: float  # NM
    duration: float  # s
    fuel: float  # kg


@dataclass(frozen=True)
class Route:
    waypoints: tuple[GeoPoint, ...]
    length: float
    segments: tuple[Segment, ...]
    # (t offset s, lat, lon, alt ft) at every waypoint and altitude-transition mark
    breakpoints: tuple[tuple[float, float, float, float], ...] = ()

    @property
    def duration(self) -> float:
        return sum(s.duration for s in self.segments)

    @property
    def fuel(self) -> float:
        return sum(s.fuel for s in self.segments)


def _scenario_points(s: Scenario) -> list[tuple[float, float]]:
    pts = [(t.center.lat, t.center.lon) for t in s.tasks]
    pts += [(u.position.lat, u.position.lon) for u in s.uavs]
    pts += [(g.position.lat, g.position.lon) for g in s.gcss]
    pts += [(p.lat, p.lon) for z in s.nfzs for p in z.polygon]
    return pts


def build_grid(s: Scenario, resolution: float = 1.0, margin: float = 6.0) -> Grid:
    """Grid over the scenario's extent plus `margin` NM; cells whose center lies in an NFZ are blocked."""
    if resolution <= 0:
        raise ValueError("grid resolution must be positive")
    pts = _scenario_points(s)
    lats = [p[0] for p in pts]
    lons = [p[1] for p in pts]
    ref_lat = 0.5 * (min(lats) + max(lats))
    kx = 60.0 * math.cos(math.radians(ref_lat))
    lat0 = min(lats) - margin / 60.0
    lon0 = min(lons) - margin / kx
    width = (max(lons) - min(lons)) * kx + 2 * margin
    height = (max(lats) - min(lats)) * 60.0 + 2 * margin
    nx = max(1, int(math.ceil(width / resolution)))
    ny = max(1, int(math.ceil(height / resolution)))
    blocked = np.zeros((ny, nx), dtype=bool)
    if s.nfzs:
        ii, jj = np.meshgrid(np.arange(nx), np.arange(ny))
        cx = (ii + 0.5) * resolution
        cy = (jj + 0.5) * resolution
        for nfz in s.nfzs:
            poly = [((p.lat - lat0) * 60.0, (p.lon - lon0) * kx) for p in nfz.polygon]
            blocked |= _points_in_polygon(cy, cx, poly)
    return Grid(lat0, lon0, ref_lat, resolution, nx, ny, blocked)


def _points_in_polygon(y: np.ndarray, x: np.ndarray, poly) -> np.ndarray:
    inside = np.zeros(y.shape, dtype=bool)
    n = len(poly)
    j = n - 1
    for i in range(n):
        yi, xi = poly[i]
        yj, xj = poly[j]
        if yi != yj:
            crosses = (yi > y) != (yj > y)
            x_cross = xi + (y - yi) * (xj - xi) / (yj - yi)
            inside ^= crosses & (x < x_cross)
        j = i
    return inside


def line_of_sight(g: Grid, x0: float, y0: float, x1: float, y1: float) -> bool:
    """Supercover traversal: False if any cell the segment touches is blocked or off-grid.

    Passing exactly through a cell corner tests both side cells.
    """
    r = g.resolution
    ax, ay, bx, by = x0 / r, y0 / r, x1 / r, y1 / r
    i, j = math.floor(ax), math.floor(ay)
    i_end, j_end = math.floor(bx), math.floor(by)
    if not g.is_free(i, j):
        return False
    dx, dy = bx - ax, by - ay
    si = 1 if dx > 0 else -1
    sj = 1 if dy > 0 else -1
    if dx != 0:
        tx = ((i + (si > 0)) - ax) / dx
        tdx = abs(1.0 / dx)
    else:
        tx, tdx = math.inf, math.inf
    if dy != 0:
        ty = ((j + (sj > 0)) - ay) / dy
        tdy = abs(1.0 / dy)
    else:
        ty, tdy = math.inf, math.inf
    blocked = g.blocked
    nx, ny = g.nx, g.ny
    while (i, j) != (i_end, j_end):
        t = min(tx, ty)
        if t > 1.0:
            break
        if abs(tx - ty) <= 1e-12:
            if not (0 <= i + si < nx and 0 <= j < ny) or blocked[j, i + si]:
                return False
            if not (0 <= i < nx and 0 <= j + sj < ny) or blocked[j + sj, i]:
                return False
            i += si
            j += sj
            tx += tdx
            ty += tdy
        elif tx < ty:
            i += si
            tx += tdx
        else:
            j += sj
            ty += tdy
        if not (0 <= i < nx and 0 <= j < ny) or blocked[j, i]:
            return False
    return True


_NEIGHBOURS = ((1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1))


def theta_star_xy(g: Grid, start: tuple[float, float], goal: tuple[float, float]) -> list[tuple[float, float]]:
    """Theta* over cell centers; start and goal keep their exact positions.

    Nodes are re-opened when their cost improves, which keeps the result no
    longer than the 8-connected grid optimum.
    """
    for x, y in (start, goal):
        if not g.in_bounds(x, y):
            raise OutOfBounds(f"point ({x:.3f}, {y:.3f}) NM lies outside the grid")
    s_cell = g.cell_of(*start)
    t_cell = g.cell_of(*goal)
    if not g.is_free(*s_cell) or not g.is_free(*t_cell):
        raise NoPath("start or goal lies in a blocked cell")
    if line_of_sight(g, *start, *goal):
        return [start, goal]

    def pos(c):
        if c == s_cell:
            return start
        if c == t_cell:
            return goal
        return g.center(*c)

    def dist(a, b):
        return math.hypot(a[0] - b[0], a[1] - b[1])

    gval = {s_cell: 0.0}
    parent = {s_cell: s_cell}
    heap = [(dist(start, goal), 0.0, s_cell)]
    while heap:
        _, gc, c = heapq.heappop(heap)
        if gc > gval[c]:
            continue
        if c == t_cell:
            path = [goal]
            while c != s_cell:
                c = parent[c]
                path.append(pos(c))
            return path[::-1]
        pc = pos(c)
        par = parent[c]
        ppar = pos(par)
        for di, dj in _NEIGHBOURS:
            n = (c[0] + di, c[1] + dj)
            if not g.is_free(*n):
                continue
            pn = pos(n)
            if line_of_sight(g, *ppar, *pn):
                cand, cand_parent = gval[par] + dist(ppar, pn), par
            elif line_of_sight(g, *pc, *pn):
                cand, cand_parent = gc + dist(pc, pn), c
            else:
                continue
            if cand < gval.get(n, math.inf) - 1e-12:
                gval[n] = cand
                parent[n] = cand_parent
                heapq.heappush(heap, (cand + dist(pn, goal), cand, n))
    raise NoPath("goal unreachable")


def theta_star(g: Grid, start: GeoPoint, goal: GeoPoint) -> list[GeoPoint]:
    """Collision-free polyline from start to goal, as GeoPoints (altitude dropped)."""
    a = g.to_xy(start.lat, start.lon)
    b = g.to_xy(goal.lat, goal.lon)
    pts = theta_star_xy(g, a, b)
    out = [GeoPoint(start.lat, start.lon)]
    for x, y in pts[1:-1]:
        lat, lon = g.to_geo(x, y)
        out.append(GeoPoint(lat, lon))
    out.append(GeoPoint(goal.lat, goal.lon))
    return out


def polyline_length(points: list[GeoPoint]) -> float:
    return sum(haversine_nm(a.lat, a.lon, b.lat, b.lon) for a, b in zip(points, points[1:]))


def _footprint(profile: FlightProfile, delta_ft: float) -> float:
    """Horizontal NM needed to change altitude by |delta_ft| at the profile's angle."""
    return abs(delta_ft) / math.tan(math.radians(profile.angle)) / FT_PER_NM


def _transition(uav: Uav, delta_ft: float) -> FlightProfile:
    return uav.profile(ProfileKind.CLIMB if delta_ft > 0 else ProfileKind.DESCENT)


def route_metrics(skeleton: list[GeoPoint], cruise: FlightProfile, uav: Uav, start_alt: float,
                  end_alt: float | None = None) -> Route:
    """Time and fuel along a planar skeleton flown at a cruise profile.

    An altitude change to the cruise level is flown first with the climb (or
    descent) profile; when `end_alt` is given, the final change to it is flown
    last. Raises InfeasibleClimb when these transitions do not fit in the leg.
    """
    if cruise.kind not in (ProfileKind.MIN_CONSUMPTION, ProfileKind.MAX_SPEED):
        raise ValueError("cruise profile must be MinConsumption or MaxSpeed")
    legs = [haversine_nm(a.lat, a.lon, b.lat, b.lon) for a, b in zip(skeleton, skeleton[1:])]
    total = sum(legs)
    alt = cruise.altitude
    d_first = alt - start_alt
    d_last = 0.0 if end_alt is None else end_alt - alt
    marks = []  # (distance along leg, profile, altitude at end of stretch)
    f_first = f_last = 0.0
    if abs(d_first) > 1e-9:
        prof = _transition(uav, d_first)
        f_first = _footprint(prof, d_first)
        marks.append((f_first, prof, alt))
    if abs(d_last) > 1e-9:
        prof_last = _transition(uav, d_last)
        f_last = _footprint(prof_last, d_last)
    if f_first + f_last > total + 1e-9:
        raise InfeasibleClimb(
            f"altitude changes need {f_first + f_last:.2f} NM but the leg is {total:.2f} NM")
    cruise_len = max(0.0, total - f_first - f_last)
    marks.append((f_first + cruise_len, cruise, alt))
    if f_last > 0:
        marks.append((total, prof_last, end_alt))

    segments = []
    for k, (end_d, prof, _) in enumerate(marks):
        start_d = marks[k - 1][0] if k else 0.0
        length = max(0.0, end_d - start_d)
        dur = length / prof.speed * 3600.0
        segments.append(Segment(prof.kind, length, dur, prof.fuel_rate * dur / 3600.0))
    segments = [s for s in segments if s.distance > 0 or s.kind == cruise.kind]

    breakpoints = _breakpoints(skeleton, legs, marks, start_alt)
    return Route(tuple(skeleton), total, tuple(segments), breakpoints)


def _breakpoints(skeleton, legs, marks, start_alt):
    """Timed 4-D samples at every waypoint and every profile change."""
    cum = [0.0]
    for d in legs:
        cum.append(cum[-1] + d)
    stations = sorted(set(cum) | {m[0] for m in marks})
    out = []
    t_prev, d_prev, alt_prev = 0.0, 0.0, start_alt
    mark_start = 0.0
    k = 0
    for d in stations:
        while k < len(marks) - 1 and d > marks[k][0] + 1e-12:
            mark_start = marks[k][0]
            k += 1
        end_d, prof, end_alt = marks[k]
        alt_from = marks[k - 1][2] if k else start_alt
        frac = 1.0 if end_d <= mark_start else (d - mark_start) / (end_d - mark_start)
        alt = alt_from + (end_alt - alt_from) * min(max(frac, 0.0), 1.0)
        t = t_prev + (d - d_prev) / prof.speed * 3600.0
        lat, lon = _along(skeleton, cum, d)
        out.append((t, lat, lon, alt))
        t_prev, d_prev, alt_prev = t, d, alt
    return tuple(out)


def _along(skeleton, cum, d):
    for k in range(len(skeleton) - 1):
        if d <= cum[k + 1] + 1e-12 or k == len(skeleton) - 2:
            span = cum[k + 1] - cum[k]
            f = 0.0 if span <= 0 else min(max((d - cum[k]) / span, 0.0), 1.0)
            a, b = skeleton[k], skeleton[k + 1]
            return a.lat + (b.lat - a.lat) * f, a.lon + (b.lon - a.lon) * f
    p = skeleton[-1]
    return p.lat, p.lon


def route_to_geojson(route: Route) -> dict:
    return {
        "type": "Feature",
        "geometry": {"type": "LineString", "coordinates": [[p.lon, p.lat] for p in route.waypoints]},
        "properties": {"length_nm": route.length, "duration_s": route.duration, "fuel_kg": route.fuel},
    }
