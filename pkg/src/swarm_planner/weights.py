"""Weighted random strategies that bias individual generation and mutation.

Three selections are biased: how many UAVs serve a multi-UAV task (NUS),
which UAVs serve a task, by distance (DUS), and which GCS controls a UAV, by
distance (DGS).
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from enum import Enum
from typing import Sequence, TypeVar

from .model import CRUISE_KINDS, Scenario, Task, Uav, Gcs, geodesic_distance
from .plan import Chromosome, precedence_pairs, repair_allen_order

T = TypeVar("T")

GEOMETRIC_MAX_EXPONENT = 60.0
GEOMETRIC_FLOOR = 1e-12
HARMONIC_EPS = 1e-3
DEFAULT_DISTANCE_UNIT = 10.0  # NM


class StrategyKind(str, Enum):
    CONSTANT = "constant"
    ARITHMETIC = "arithmetic"
    HARMONIC = "harmonic"
    GEOMETRIC = "geometric"


class EmptyInput(ValueError):
    pass


class NoEligibleUav(ValueError):
    pass


@dataclass(frozen=True)
class StrategyTriple:
    nus: StrategyKind = StrategyKind.CONSTANT
    dus: StrategyKind = StrategyKind.CONSTANT
    dgs: StrategyKind = StrategyKind.CONSTANT

    @classmethod
    def parse(cls, text: str) -> "StrategyTriple":
        """From 'nus,dus,dgs', e.g. 'geometric,harmonic,harmonic'."""
        parts = [p.strip().lower() for p in text.split(",")]
        if len(parts) != 3:
            raise ValueError(f"expected three comma-separated strategies, got {text!r}")
        return cls(*(StrategyKind(p) for p in parts))

    @property
    def label(self) -> str:
        return f"{self.nus.value}-{self.dus.value}-{self.dgs.value}"


def strategy_cost(value: float, max_value: float, kind: StrategyKind) -> float:
    """Selection weight of `value`; larger values get smaller weights."""
    if kind is StrategyKind.CONSTANT:
        return 1.0
    if kind is StrategyKind.ARITHMETIC:
        if max_value <= 0:
            return 0.0
        return max(0.0, (max_value - value) / max_value)
    if kind is StrategyKind.HARMONIC:
        return 1.0 / max(value, HARMONIC_EPS)
    if kind is StrategyKind.GEOMETRIC:
        return max(2.0 ** -min(value, GEOMETRIC_MAX_EXPONENT), GEOMETRIC_FLOOR)
    raise ValueError(f"unknown strategy {kind!r}")


def weighted_random_value(values: Sequence[T], costs: Sequence[float], rng: random.Random) -> T:
    """Pick values[i] with probability costs[i] / sum(costs) by cumulative subtraction.

    Zero-cost entries are never returned; an all-zero cost vector falls back to
    a uniform pick.
    """
    if not values:
        raise EmptyInput("no values to choose from")
    if len(values) != len(costs):
        raise ValueError("values and costs differ in length")
    total = sum(costs)
    if total <= 0:
        return values[rng.randrange(len(values))]
    r = rng.random() * total
    last = None
    for v, c in zip(values, costs):
        if c <= 0:
            continue
        r -= c
        last = v
        if r <= 0:
            return v
    return last  # rounding left a sliver of mass


def nus_costs(n: int, kind: StrategyKind) -> list[float]:
    """Weights for choosing 1..n UAVs."""
    return [strategy_cost(j, n, kind) for j in range(1, n + 1)]


def _distance_costs(dists: Sequence[float], kind: StrategyKind, unit: float) -> list[float]:
    scaled = [d / unit for d in dists]
    top = max(scaled)
    return [strategy_cost(d, top, kind) for d in scaled]


def dus_costs(task: Task, uavs: Sequence[Uav], kind: StrategyKind, unit: float = DEFAULT_DISTANCE_UNIT) -> list[float]:
    """Weights over candidate UAVs by distance from their base to the task zone."""
    return _distance_costs([geodesic_distance(task.center, u.position) for u in uavs], kind, unit)


def dgs_costs(uav: Uav, gcss: Sequence[Gcs], kind: StrategyKind, unit: float = DEFAULT_DISTANCE_UNIT) -> list[float]:
    """Weights over candidate GCSs by distance to the UAV base."""
    return _distance_costs([geodesic_distance(uav.position, g.position) for g in gcss], kind, unit)


class BiasedGenerator:
    """Per-scenario cache of candidate lists and weights used by initialisation and mutation."""

    def __init__(self, s: Scenario, strategies: StrategyTriple, distance_unit: float = DEFAULT_DISTANCE_UNIT):
        self.scenario = s
        self.strategies = strategies
        self.capable = [s.capable_uavs(t) for t in range(len(s.tasks))]
        for t, c in enumerate(self.capable):
            if not c:
                raise NoEligibleUav(f"no UAV carries the sensor task {t} requires")
        self.compatible = [s.compatible_gcss(u) for u in range(len(s.uavs))]
        for u, c in enumerate(self.compatible):
            if not c:
                raise ValueError(f"no GCS can control UAV {u}")
        self.dus = [dus_costs(s.tasks[t], [s.uavs[u] for u in c], strategies.dus, distance_unit)
                    for t, c in enumerate(self.capable)]
        self.dgs = [dgs_costs(s.uavs[u], [s.gcss[g] for g in c], strategies.dgs, distance_unit)
                    for u, c in enumerate(self.compatible)]
        self.nus = {n: nus_costs(n, strategies.nus) for n in {len(c) for c in self.capable}}
        self.sensor_options = [
            {u: [k for k in s.uavs[u].sorted_sensors() if k == s.tasks[t].required_sensor] for u in c}
            for t, c in enumerate(self.capable)
        ]
        self.precedence = precedence_pairs(s.time_deps)

    def uav_count(self, task: int, rng: random.Random) -> int:
        if not self.scenario.tasks[task].multi_uav:
            return 1
        n = len(self.capable[task])
        return weighted_random_value(list(range(1, n + 1)), self.nus[n], rng)

    def uav_set(self, task: int, count: int, rng: random.Random) -> tuple[int, ...]:
        """Draw `count` distinct capable UAVs without replacement."""
        cands = list(self.capable[task])
        costs = list(self.dus[task])
        chosen = []
        for _ in range(count):
            u = weighted_random_value(cands, costs, rng)
            k = cands.index(u)
            del cands[k], costs[k]
            chosen.append(u)
        return tuple(sorted(chosen))

    def gcs_for(self, uav: int, rng: random.Random) -> int:
        return weighted_random_value(self.compatible[uav], self.dgs[uav], rng)

    def sensor_for(self, task: int, uav: int, rng: random.Random):
        opts = self.sensor_options[task].get(uav)
        if not opts:
            # not capable (only reachable through crossover of foreign cells): keep any carried sensor
            opts = self.scenario.uavs[uav].sorted_sensors()
        return opts[rng.randrange(len(opts))]

    @staticmethod
    def profile(rng: random.Random):
        return CRUISE_KINDS[rng.randrange(2)]

    def random_cell(self, task: int, rng: random.Random):
        us = self.uav_set(task, self.uav_count(task, rng), rng)
        return us, tuple(self.profile(rng) for _ in us), tuple(self.sensor_for(task, u, rng) for u in us)

    def individual(self, rng: random.Random) -> Chromosome:
        s = self.scenario
        n_tasks = len(s.tasks)
        assign = tuple(self.uav_set(t, self.uav_count(t, rng), rng) for t in range(n_tasks))
        perm = list(range(n_tasks))
        rng.shuffle(perm)
        order = repair_allen_order(perm, self.precedence)
        path_fp = tuple(tuple(self.profile(rng) for _ in assign[t]) for t in range(n_tasks))
        sensors = tuple(tuple(self.sensor_for(t, u, rng) for u in assign[t]) for t in range(n_tasks))
        gcs = tuple(self.gcs_for(u, rng) for u in range(len(s.uavs)))
        ret = tuple(self.profile(rng) for _ in s.uavs)
        return Chromosome(assign, path_fp, sensors, order, gcs, ret)


def weighted_random_individual(s: Scenario, strat: StrategyTriple, rng: random.Random,
                               distance_unit: float = DEFAULT_DISTANCE_UNIT) -> Chromosome:
    """One biased random plan; sensor, GCS-type and Before/Meets order are always respected."""
    return BiasedGenerator(s, strat, distance_unit).individual(rng)
