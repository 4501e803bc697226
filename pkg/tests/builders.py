"""Small hand-built worlds for unit tests."""

from __future__ import annotations

from swarm_planner.model import (
    FlightProfile, GeoPoint, Gcs, ProfileKind, Scenario, SensorKind, Task, Uav, UavType,
)

EO = SensorKind.EO_IR
SAR = SensorKind.SAR_RADAR


def profiles(min_speed=100.0, min_rate=50.0, min_alt=5000.0, max_speed=200.0, max_rate=150.0, max_alt=5000.0,
             climb=(120.0, 90.0, 15.0), descent=(150.0, 30.0, 12.0)):
    return (
        FlightProfile(ProfileKind.CLIMB, climb[0], climb[1], angle=climb[2]),
        FlightProfile(ProfileKind.DESCENT, descent[0], descent[1], angle=descent[2]),
        FlightProfile(ProfileKind.MIN_CONSUMPTION, min_speed, min_rate, altitude=min_alt),
        FlightProfile(ProfileKind.MAX_SPEED, max_speed, max_rate, altitude=max_alt),
    )


def uav(lat=40.0, lon=-3.0, sensors=(EO,), type_tag=UavType.MALE, fuel=500.0, cost=100.0,
        max_time=36000.0, max_range=1000.0, max_speed=None, max_altitude=None, **prof):
    return Uav(type_tag, GeoPoint(lat, lon), fuel, cost, max_time, max_range, frozenset(sensors),
               profiles(**prof), max_speed, max_altitude)


def task(lat, lon, sensor=EO, duration=600.0, radius=0.0, multi=False):
    return Task(GeoPoint(lat, lon), radius, sensor, duration, multi)


def gcs(lat=40.0, lon=-3.0, max_uavs=4, types=tuple(UavType), radius=500.0):
    return Gcs(GeoPoint(lat, lon), max_uavs, frozenset(types), radius)


def world(tasks, uavs, gcss=None, **kw) -> Scenario:
    return Scenario(tuple(tasks), tuple(uavs), tuple(gcss or [gcs()]), **kw)
