"""Six-allele chromosome, its decoding into per-UAV task sequences, and order repair."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

from .model import PRECEDENCE_RELATIONS, ProfileKind, Scenario, SensorKind, TimeDependency


class CyclicDependency(ValueError):
    pass


@dataclass(frozen=True)
class Chromosome:
    """A candidate mission plan.

    task_assign[t] is the sorted tuple of UAVs performing task t; path_fp[t] and
    sensor_assign[t] are aligned with it. order_perm is the absolute task order;
    gcs_assign and return_fp are indexed by UAV.
    """

    task_assign: tuple[tuple[int, ...], ...]
    path_fp: tuple[tuple[ProfileKind, ...], ...]
    sensor_assign: tuple[tuple[SensorKind, ...], ...]
    order_perm: tuple[int, ...]
    gcs_assign: tuple[int, ...]
    return_fp: tuple[ProfileKind, ...]

    def check(self, s: Scenario) -> None:
        """Raise ValueError unless the structural invariants hold for scenario s."""
        n_t, n_u = len(s.tasks), len(s.uavs)
        if not (len(self.task_assign) == len(self.path_fp) == len(self.sensor_assign) == n_t):
            raise ValueError("task-indexed alleles must have one cell per task")
        for t, cell in enumerate(self.task_assign):
            if not cell:
                raise ValueError(f"task {t} has no UAV")
            if list(cell) != sorted(set(cell)) or not all(0 <= u < n_u for u in cell):
                raise ValueError(f"task {t} cell is not a sorted set of UAV ids")
            if not s.tasks[t].multi_uav and len(cell) != 1:
                raise ValueError(f"single-UAV task {t} assigned to {len(cell)} UAVs")
            if len(self.path_fp[t]) != len(cell) or len(self.sensor_assign[t]) != len(cell):
                raise ValueError(f"task {t} profile/sensor cells misaligned")
        if sorted(self.order_perm) != list(range(n_t)):
            raise ValueError("order_perm is not a permutation of the tasks")
        if len(self.gcs_assign) != n_u or len(self.return_fp) != n_u:
            raise ValueError("UAV-indexed alleles must have one cell per UAV")
        if not all(0 <= g < len(s.gcss) for g in self.gcs_assign):
            raise ValueError("GCS id out of range")

    def to_dict(self) -> dict:
        return {
            "task_assign": [list(c) for c in self.task_assign],
            "path_fp": [[p.value for p in c] for c in self.path_fp],
            "sensor_assign": [[k.value for k in c] for c in self.sensor_assign],
            "order_perm": list(self.order_perm),
            "gcs_assign": list(self.gcs_assign),
            "return_fp": [p.value for p in self.return_fp],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict) -> "Chromosome":
        return cls(
            task_assign=tuple(tuple(c) for c in d["task_assign"]),
            path_fp=tuple(tuple(ProfileKind(p) for p in c) for c in d["path_fp"]),
            sensor_assign=tuple(tuple(SensorKind(k) for k in c) for c in d["sensor_assign"]),
            order_perm=tuple(d["order_perm"]),
            gcs_assign=tuple(d["gcs_assign"]),
            return_fp=tuple(ProfileKind(p) for p in d["return_fp"]),
        )


@dataclass(frozen=True)
class Visit:
    task: int
    profile: ProfileKind
    sensor: SensorKind


@dataclass(frozen=True)
class PlanView:
    sequences: tuple[tuple[Visit, ...], ...]  # per UAV, in flight order
    return_fp: tuple[ProfileKind, ...]
    gcs: tuple[int, ...]

    def used(self) -> list[int]:
        return [u for u, seq in enumerate(self.sequences) if seq]


def decode(c: Chromosome, s: Scenario) -> PlanView:
    """Each UAV flies its tasks in the order they appear in order_perm."""
    seqs: list[list[Visit]] = [[] for _ in s.uavs]
    for t in c.order_perm:
        for k, u in enumerate(c.task_assign[t]):
            seqs[u].append(Visit(t, c.path_fp[t][k], c.sensor_assign[t][k]))
    return PlanView(tuple(tuple(q) for q in seqs), c.return_fp, c.gcs_assign)


def encode(view: PlanView, n_tasks: int) -> Chromosome:
    """Rebuild a chromosome from a plan view.

    The absolute order is recovered by merging the per-UAV sequences; any
    merge consistent with them decodes to the same view.
    """
    cells: list[dict[int, Visit]] = [{} for _ in range(n_tasks)]
    for u, seq in enumerate(view.sequences):
        for v in seq:
            cells[v.task][u] = v
    # topological merge of per-UAV sequences, ties broken by task id
    preds: dict[int, set[int]] = {t: set() for t in range(n_tasks)}
    for seq in view.sequences:
        for a, b in zip(seq, seq[1:]):
            preds[b.task].add(a.task)
    order, done = [], set()
    while len(order) < n_tasks:
        ready = [t for t in range(n_tasks) if t not in done and preds[t] <= done]
        if not ready:
            raise ValueError("per-UAV sequences are mutually inconsistent")
        order.append(ready[0])
        done.add(ready[0])
    ta, pf, sa = [], [], []
    for t in range(n_tasks):
        us = sorted(cells[t])
        ta.append(tuple(us))
        pf.append(tuple(cells[t][u].profile for u in us))
        sa.append(tuple(cells[t][u].sensor for u in us))
    return Chromosome(tuple(ta), tuple(pf), tuple(sa), tuple(order), tuple(view.gcs), tuple(view.return_fp))


@dataclass(frozen=True)
class SearchSpace:
    task_assign: int
    path_fp: int
    sensor_assign: int
    order_perm: int
    gcs_assign: int
    return_fp: int

    @property
    def sizes(self) -> tuple[int, ...]:
        return (self.task_assign, self.path_fp, self.sensor_assign, self.order_perm, self.gcs_assign, self.return_fp)

    @property
    def total(self) -> int:
        return math.prod(self.sizes)


def search_space_size(n_tasks: int, n_multi: int, n_uavs: int, n_gcss: int, sensors_per_uav: int) -> SearchSpace:
    """Exact per-allele combination counts (arbitrary precision)."""
    single = n_tasks - n_multi
    return SearchSpace(
        task_assign=n_uavs ** single * (2 ** n_uavs - 1) ** n_multi,
        path_fp=2 ** single * (2 ** (n_uavs + 1) - 2) ** n_multi,
        sensor_assign=sensors_per_uav ** single * sum(sensors_per_uav ** i for i in range(1, n_uavs + 1)) ** n_multi,
        order_perm=math.factorial(n_tasks),
        gcs_assign=n_gcss ** n_uavs,
        return_fp=2 ** n_uavs,
    )


def scenario_search_space(s: Scenario, sensors_per_uav: int) -> SearchSpace:
    return search_space_size(len(s.tasks), s.n_multi, len(s.uavs), len(s.gcss), sensors_per_uav)


def precedence_pairs(deps: Sequence[TimeDependency]) -> list[tuple[int, int]]:
    return [(d.first, d.second) for d in deps if d.relation in PRECEDENCE_RELATIONS]


def repair_allen_order(perm: Sequence[int], deps: Sequence[TimeDependency] | Sequence[tuple[int, int]]) -> tuple[int, ...]:
    """Swap the two tasks of every violated Before/Meets pair until none is left.

    `deps` may be TimeDependency objects or bare (first, second) precedence pairs.
    """
    pairs = [d if isinstance(d, tuple) else (d.first, d.second) for d in deps
             if isinstance(d, tuple) or d.relation in PRECEDENCE_RELATIONS]
    perm = list(perm)
    if not pairs:
        return tuple(perm)
    pos = {t: i for i, t in enumerate(perm)}
    n = len(perm)
    for _ in range(n * n + 1):
        changed = False
        for a, b in pairs:
            if pos[a] > pos[b]:
                ia, ib = pos[a], pos[b]
                perm[ia], perm[ib] = b, a
                pos[a], pos[b] = ib, ia
                changed = True
        if not changed:
            return tuple(perm)
    return _stable_topological(perm, pairs)


def _stable_topological(perm: list[int], pairs: list[tuple[int, int]]) -> tuple[int, ...]:
    preds: dict[int, set[int]] = {t: set() for t in perm}
    for a, b in pairs:
        preds[b].add(a)
    out, placed = [], set()
    remaining = list(perm)
    while remaining:
        for k, t in enumerate(remaining):
            if preds[t] <= placed:
                out.append(t)
                placed.add(t)
                del remaining[k]
                break
        else:
            raise CyclicDependency("Before/Meets dependencies form a cycle")
    return tuple(out)
