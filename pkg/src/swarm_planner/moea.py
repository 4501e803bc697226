"""NSGA-II with constraint-count gating and biased initialisation/mutation."""

from __future__ import annotations

import csv
import io
import math
import random
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from .csp import CspConfig, MissionProblem, ObjectiveVector
from .model import CRUISE_KINDS, Scenario
from .plan import Chromosome, precedence_pairs, repair_allen_order
from .weights import DEFAULT_DISTANCE_UNIT, BiasedGenerator, StrategyTriple

STAGNATION_DECIMALS = 9


@dataclass(frozen=True)
class Valid:
    objectives: ObjectiveVector


@dataclass(frozen=True)
class Invalid:
    violations: int

    def __post_init__(self):
        if self.violations < 1:
            raise ValueError("an invalid evaluation needs at least one violation")


Evaluation = Union[Valid, Invalid]


@dataclass(frozen=True)
class RunConfig:
    mu: int = 30
    lam: int = 300
    mutation_prob: float = 0.10
    crossover_prob: float = 0.90
    stagnation_gens: int = 10
    max_gens: int = 1000
    strategies: StrategyTriple = StrategyTriple()
    seed: int = 0
    scenario_path: str | None = None
    grid_resolution: float = 1.0
    distance_unit: float = DEFAULT_DISTANCE_UNIT
    tournament_size: int = 2
    sample_step: float = 30.0

    def __post_init__(self):
        if not 0 < self.mu <= self.lam:
            raise ValueError("need 0 < mu <= lambda")
        for p in (self.mutation_prob, self.crossover_prob):
            if not 0.0 <= p <= 1.0:
                raise ValueError("probabilities must lie in [0, 1]")
        if self.stagnation_gens < 1 or self.max_gens < 1 or self.tournament_size < 1:
            raise ValueError("stagnation_gens, max_gens and tournament_size must be >= 1")

    def to_dict(self) -> dict:
        return {
            "mu": self.mu, "lambda": self.lam, "mutation_prob": self.mutation_prob,
            "crossover_prob": self.crossover_prob, "stagnation_gens": self.stagnation_gens,
            "max_gens": self.max_gens, "strategies": self.strategies.label, "seed": self.seed,
            "scenario_path": self.scenario_path, "grid_resolution": self.grid_resolution,
            "distance_unit": self.distance_unit, "tournament_size": self.tournament_size,
            "sample_step": self.sample_step,
        }


@dataclass(frozen=True)
class GenerationLog:
    gen: int
    n_valid: int
    front_size: int
    min_violation: int
    archive_size: int


@dataclass
class RunResult:
    front: list[tuple[Chromosome, ObjectiveVector]]
    generations_run: int
    converged: bool
    history: list[GenerationLog] = field(default_factory=list)
    config: RunConfig | None = None

    def log_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["gen", "n_valid", "front_size", "min_violation", "archive_size"])
        for h in self.history:
            w.writerow([h.gen, h.n_valid, h.front_size, h.min_violation, h.archive_size])
        return buf.getvalue()


# ---------------------------------------------------------------- dominance

def dominates(a: Evaluation, b: Evaluation) -> bool:
    if isinstance(a, Valid):
        if isinstance(b, Invalid):
            return True
        u, v = a.objectives.as_tuple(), b.objectives.as_tuple()
        return all(x <= y for x, y in zip(u, v)) and any(x < y for x, y in zip(u, v))
    if isinstance(b, Valid):
        return False
    return a.violations < b.violations


def dominance_matrix(pop: Sequence[Evaluation]) -> np.ndarray:
    """D[i, j] is True when pop[i] constrained-dominates pop[j]."""
    n = len(pop)
    valid = np.array([isinstance(e, Valid) for e in pop], dtype=bool)
    viol = np.array([0 if isinstance(e, Valid) else e.violations for e in pop], dtype=float)
    objs = np.array([e.objectives.as_tuple() if isinstance(e, Valid) else (0.0,) * 7 for e in pop],
                    dtype=float).reshape(n, 7)
    le = np.all(objs[:, None, :] <= objs[None, :, :], axis=2)
    lt = np.any(objs[:, None, :] < objs[None, :, :], axis=2)
    both_valid = valid[:, None] & valid[None, :]
    both_invalid = ~valid[:, None] & ~valid[None, :]
    d = both_valid & le & lt
    d |= valid[:, None] & ~valid[None, :]
    d |= both_invalid & (viol[:, None] < viol[None, :])
    return d


def fast_nondominated_sort(pop: Sequence[Evaluation]) -> list[list[int]]:
    n = len(pop)
    if n == 0:
        return []
    d = dominance_matrix(pop)
    counts = d.sum(axis=0).astype(int)
    assigned = np.zeros(n, dtype=bool)
    fronts = []
    while not assigned.all():
        current = np.flatnonzero((counts == 0) & ~assigned)
        fronts.append(current.tolist())
        assigned[current] = True
        counts -= d[current].sum(axis=0).astype(int)
    return fronts


def crowding_distance(front: Sequence[Sequence[float]]) -> list[float]:
    """Sum of normalised neighbour gaps per objective; boundaries get infinity.

    Objectives with zero range add nothing, boundaries included.
    """
    n = len(front)
    if n <= 2:
        return [math.inf] * n
    v = np.asarray(front, dtype=float)
    dist = np.zeros(n)
    for m in range(v.shape[1]):
        col = v[:, m]
        order = np.argsort(col, kind="stable")
        span = col[order[-1]] - col[order[0]]
        if span == 0:
            continue
        dist[order[0]] = dist[order[-1]] = math.inf
        dist[order[1:-1]] += (col[order[2:]] - col[order[:-2]]) / span
    return dist.tolist()


def _crowding_key(e: Evaluation) -> tuple[float, ...]:
    return e.objectives.as_tuple() if isinstance(e, Valid) else (float(e.violations),)


def rank_and_crowding(pop: Sequence[Evaluation]) -> tuple[list[int], list[float]]:
    ranks = [0] * len(pop)
    crowd = [0.0] * len(pop)
    for r, front in enumerate(fast_nondominated_sort(pop)):
        cd = crowding_distance([_crowding_key(pop[i]) for i in front])
        for i, c in zip(front, cd):
            ranks[i] = r
            crowd[i] = c
    return ranks, crowd


def best_indices(ranks: Sequence[int], crowd: Sequence[float], k: int) -> list[int]:
    return sorted(range(len(ranks)), key=lambda i: (ranks[i], -crowd[i], i))[:k]


def tournament_select(ranks: Sequence[int], crowd: Sequence[float], rng: random.Random, k: int = 2) -> int:
    n = len(ranks)
    if n == 0:
        raise ValueError("empty population")
    entrants = [rng.randrange(n) for _ in range(k)]
    best_key = min((ranks[i], -crowd[i]) for i in entrants)
    tied = [i for i in entrants if (ranks[i], -crowd[i]) == best_key]
    return tied[0] if len(tied) == 1 else tied[rng.randrange(len(tied))]


# ---------------------------------------------------------------- variation

def pmx(p1: Sequence[int], p2: Sequence[int], i: int, j: int) -> tuple[int, ...]:
    """Child keeps p1[i:j]; other positions come from p2, mapped through the segment."""
    n = len(p1)
    child: list[int | None] = [None] * n
    child[i:j] = p1[i:j]
    seg = set(p1[i:j])
    where = {v: k for k, v in enumerate(p1)}
    for k in list(range(0, i)) + list(range(j, n)):
        v = p2[k]
        while v in seg:
            v = p2[where[v]]
        child[k] = v
    return tuple(child)  # type: ignore[arg-type]


def _cut(n: int, rng: random.Random) -> tuple[int, int]:
    a, b = rng.randrange(n + 1), rng.randrange(n + 1)
    return (a, b) if a <= b else (b, a)


def crossover(p1: Chromosome, p2: Chromosome, rng: random.Random, precedence=(),
              cuts: tuple[tuple[int, int], tuple[int, int], tuple[int, int]] | None = None
              ) -> tuple[Chromosome, Chromosome]:
    """Two-point exchange on the task- and UAV-indexed alleles, PMX on the order.

    `cuts` fixes the (task, order, uav) cut pairs; otherwise they are drawn.
    Children get their order repaired against `precedence` pairs.
    """
    n_t, n_u = len(p1.task_assign), len(p1.gcs_assign)
    if cuts is None:
        cuts = (_cut(n_t, rng), _cut(n_t, rng), _cut(n_u, rng))
    (ti, tj), (oi, oj), (ui, uj) = cuts

    def swap(a, b, i, j):
        return a[:i] + b[i:j] + a[j:], b[:i] + a[i:j] + b[j:]

    ta1, ta2 = swap(p1.task_assign, p2.task_assign, ti, tj)
    pf1, pf2 = swap(p1.path_fp, p2.path_fp, ti, tj)
    sa1, sa2 = swap(p1.sensor_assign, p2.sensor_assign, ti, tj)
    o1, o2 = pmx(p1.order_perm, p2.order_perm, oi, oj), pmx(p2.order_perm, p1.order_perm, oi, oj)
    g1, g2 = swap(p1.gcs_assign, p2.gcs_assign, ui, uj)
    r1, r2 = swap(p1.return_fp, p2.return_fp, ui, uj)
    if precedence:
        o1, o2 = repair_allen_order(o1, precedence), repair_allen_order(o2, precedence)
    return Chromosome(ta1, pf1, sa1, o1, g1, r1), Chromosome(ta2, pf2, sa2, o2, g2, r2)


def insert_move(perm: Sequence[int], i: int, j: int) -> tuple[int, ...]:
    p = list(perm)
    v = p.pop(i)
    p.insert(j, v)
    return tuple(p)


def mutate(c: Chromosome, s: Scenario, cfg: RunConfig, rng: random.Random,
           gen: BiasedGenerator | None = None) -> Chromosome:
    """Per-gene mutation with probability cfg.mutation_prob, biased where the strategies apply."""
    p = cfg.mutation_prob
    if p <= 0:
        return c
    if gen is None:
        gen = BiasedGenerator(s, cfg.strategies, cfg.distance_unit)
    ta, pf, sa = list(c.task_assign), list(c.path_fp), list(c.sensor_assign)
    for t in range(len(ta)):
        if rng.random() < p:
            ta[t], pf[t], sa[t] = gen.random_cell(t, rng)
            continue
        profs, sens = list(pf[t]), list(sa[t])
        for k, u in enumerate(ta[t]):
            if rng.random() < p:
                profs[k] = CRUISE_KINDS[rng.randrange(2)]
            if rng.random() < p:
                sens[k] = gen.sensor_for(t, u, rng)
        pf[t], sa[t] = tuple(profs), tuple(sens)

    order = c.order_perm
    n = len(order)
    moved = False
    for i in range(n):
        if n > 1 and rng.random() < p:
            j = rng.randrange(n - 1)
            order = insert_move(order, i, j if j < i else j + 1)
            moved = True
    if moved:
        order = repair_allen_order(order, gen.precedence)

    gcs = tuple(gen.gcs_for(u, rng) if rng.random() < p else g for u, g in enumerate(c.gcs_assign))
    ret = tuple(CRUISE_KINDS[rng.randrange(2)] if rng.random() < p else f for f in c.return_fp)
    return Chromosome(tuple(ta), tuple(pf), tuple(sa), order, gcs, ret)


# ---------------------------------------------------------------- fitness

class Evaluator:
    """Memoised constraint-gated fitness for one scenario."""

    def __init__(self, s: Scenario, csp_config: CspConfig = CspConfig()):
        self.problem = MissionProblem(s, csp_config)
        self._cache: dict[Chromosome, Evaluation] = {}

    def __call__(self, c: Chromosome) -> Evaluation:
        hit = self._cache.get(c)
        if hit is None:
            report, obj, _ = self.problem.evaluate(c)
            hit = Valid(obj) if report.total == 0 else Invalid(report.total)
            self._cache[c] = hit
        return hit

    def many(self, pop: Sequence[Chromosome]) -> list[Evaluation]:
        return [self(c) for c in pop]


def fitness(c: Chromosome, s: Scenario) -> Evaluation:
    report, obj, _ = MissionProblem(s).evaluate(c)
    return Valid(obj) if report.total == 0 else Invalid(report.total)


# ---------------------------------------------------------------- archive and loop

def _objective_key(v: ObjectiveVector) -> tuple[float, ...]:
    return tuple(round(x, STAGNATION_DECIMALS) for x in v.as_tuple())


class ParetoArchive:
    """Valid non-dominated objective vectors seen so far, keyed after rounding."""

    def __init__(self):
        self.members: dict[tuple[float, ...], tuple[Chromosome, ObjectiveVector]] = {}

    def add(self, c: Chromosome, v: ObjectiveVector) -> bool:
        key = _objective_key(v)
        if key in self.members:
            return False
        for other in self.members:
            if all(a <= b for a, b in zip(other, key)):
                return False
        for other in [k for k in self.members if all(a <= b for a, b in zip(key, k))]:
            del self.members[other]
        self.members[key] = (c, v)
        return True

    def front(self) -> list[tuple[Chromosome, ObjectiveVector]]:
        return [self.members[k] for k in sorted(self.members)]

    def __len__(self) -> int:
        return len(self.members)


def evolve(cfg: RunConfig, s: Scenario, on_generation: Callable[[GenerationLog], None] | None = None,
           evaluator: Evaluator | None = None) -> RunResult:
    rng = random.Random(cfg.seed)
    gen = BiasedGenerator(s, cfg.strategies, cfg.distance_unit)
    ev = evaluator or Evaluator(s, CspConfig(grid_resolution=cfg.grid_resolution, sample_step=cfg.sample_step))
    prec = precedence_pairs(s.time_deps)
    archive = ParetoArchive()

    pop = [gen.individual(rng) for _ in range(cfg.lam)]
    evals = ev.many(pop)
    for c, e in zip(pop, evals):
        if isinstance(e, Valid):
            archive.add(c, e.objectives)
    ranks, crowd = rank_and_crowding(evals)
    history: list[GenerationLog] = []
    stable = 0
    converged = False
    g = 0
    while g < cfg.max_gens:
        g += 1
        offspring: list[Chromosome] = []
        while len(offspring) < cfg.lam:
            a = pop[tournament_select(ranks, crowd, rng, cfg.tournament_size)]
            b = pop[tournament_select(ranks, crowd, rng, cfg.tournament_size)]
            if rng.random() < cfg.crossover_prob:
                a, b = crossover(a, b, rng, prec)
            offspring.append(mutate(a, s, cfg, rng, gen))
            offspring.append(mutate(b, s, cfg, rng, gen))
        offspring = offspring[:cfg.lam]
        off_evals = ev.many(offspring)

        changed = False
        for c, e in zip(offspring, off_evals):
            if isinstance(e, Valid):
                changed |= archive.add(c, e.objectives)

        elite = best_indices(ranks, crowd, cfg.mu)
        off_ranks, off_crowd = rank_and_crowding(off_evals)
        fill = best_indices(off_ranks, off_crowd, cfg.lam - cfg.mu)
        pop = [pop[i] for i in elite] + [offspring[i] for i in fill]
        evals = [evals[i] for i in elite] + [off_evals[i] for i in fill]
        ranks, crowd = rank_and_crowding(evals)

        n_valid = sum(isinstance(e, Valid) for e in evals)
        front_size = sum(1 for i, r in enumerate(ranks) if r == 0 and isinstance(evals[i], Valid))
        min_viol = min((e.violations for e in evals if isinstance(e, Invalid)), default=0)
        entry = GenerationLog(g, n_valid, front_size, min_viol, len(archive))
        history.append(entry)
        if on_generation:
            on_generation(entry)

        stable = 0 if changed else stable + 1
        if len(archive) and stable >= cfg.stagnation_gens:
            converged = True
            break
    return RunResult(archive.front(), g, converged, history, cfg)
