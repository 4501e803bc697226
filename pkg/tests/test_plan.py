import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from swarm_planner.model import AllenRelation, ProfileKind, TimeDependency
from swarm_planner.plan import (
    Chromosome, CyclicDependency, decode, encode, repair_allen_order, scenario_search_space, search_space_size,
)
from builders import EO, task, uav, world

MIN, MAX = ProfileKind.MIN_CONSUMPTION, ProfileKind.MAX_SPEED


def scenario(n_tasks=5, n_uavs=3, multi=()):
    tasks = [task(40 + 0.05 * t, -3 + 0.05 * t, multi=t in multi) for t in range(n_tasks)]
    uavs = [uav(lat=40 - 0.02 * u) for u in range(n_uavs)]
    return world(tasks, uavs)


def random_chromosome(s, rng):
    ta, pf, sa = [], [], []
    for t, tk in enumerate(s.tasks):
        if tk.multi_uav:
            team = tuple(sorted(rng.sample(range(len(s.uavs)), rng.randint(1, len(s.uavs)))))
        else:
            team = (rng.randrange(len(s.uavs)),)
        ta.append(team)
        pf.append(tuple(rng.choice((MIN, MAX)) for _ in team))
        sa.append(tuple(EO for _ in team))
    perm = list(range(len(s.tasks)))
    rng.shuffle(perm)
    return Chromosome(tuple(ta), tuple(pf), tuple(sa), tuple(perm),
                      tuple(rng.randrange(len(s.gcss)) for _ in s.uavs),
                      tuple(rng.choice((MIN, MAX)) for _ in s.uavs))


def test_decode_figure_shape():
    s = scenario()
    # zero-based: UAV 0 holds tasks 0, 3, 4 and the order starts 0, 3, 4
    c = Chromosome(((0,), (1,), (2,), (0,), (0,)), ((MIN,),) * 5, ((EO,),) * 5, (0, 3, 4, 1, 2), (0, 0, 0),
                   (MIN, MIN, MIN))
    c.check(s)
    v = decode(c, s)
    assert [x.task for x in v.sequences[0]] == [0, 3, 4]
    assert [x.task for x in v.sequences[1]] == [1]
    assert v.used() == [0, 1, 2]


def test_decode_single():
    s = scenario(1, 1)
    c = Chromosome(((0,),), ((MAX,),), ((EO,),), (0,), (0,), (MIN,))
    assert [x.task for x in decode(c, s).sequences[0]] == [0]


def test_decode_multi_uav_task_in_both_sequences():
    s = scenario(3, 3, multi=(2,))
    c = Chromosome(((1,), (0,), (1, 2)), ((MIN,), (MIN,), (MIN, MAX)), ((EO,), (EO,), (EO, EO)), (2, 0, 1),
                   (0, 0, 0), (MIN,) * 3)
    c.check(s)
    v = decode(c, s)
    assert [x.task for x in v.sequences[1]] == [2, 0]
    assert [x.task for x in v.sequences[2]] == [2]
    assert v.sequences[2][0].profile == MAX


def test_check_rejects_structural_defects():
    s = scenario(2, 2)
    good = Chromosome(((0,), (1,)), ((MIN,), (MIN,)), ((EO,), (EO,)), (0, 1), (0, 0), (MIN, MIN))
    good.check(s)
    bad = [
        Chromosome(((0, 1), (1,)), ((MIN, MIN), (MIN,)), ((EO, EO), (EO,)), (0, 1), (0, 0), (MIN, MIN)),
        Chromosome(((0,), (1,)), ((MIN,), (MIN,)), ((EO,), (EO,)), (0, 0), (0, 0), (MIN, MIN)),
        Chromosome(((0,), ()), ((MIN,), ()), ((EO,), ()), (0, 1), (0, 0), (MIN, MIN)),
        Chromosome(((0,), (1,)), ((MIN,), (MIN,)), ((EO,), (EO,)), (0, 1), (0, 5), (MIN, MIN)),
    ]
    for c in bad:
        with pytest.raises(ValueError):
            c.check(s)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6), st.integers(1, 4))
def test_encode_decode_roundtrip(seed, n_tasks, n_uavs):
    rng = random.Random(seed)
    multi = tuple(t for t in range(n_tasks) if rng.random() < 0.4)
    s = scenario(n_tasks, n_uavs, multi)
    c = random_chromosome(s, rng)
    c.check(s)
    v = decode(c, s)
    c2 = encode(v, n_tasks)
    c2.check(s)
    assert decode(c2, s) == v
    # per-UAV order follows order_perm
    pos = {t: i for i, t in enumerate(c.order_perm)}
    for seq in v.sequences:
        assert [pos[x.task] for x in seq] == sorted(pos[x.task] for x in seq)


def test_json_roundtrip():
    s = scenario(4, 3, multi=(1,))
    c = random_chromosome(s, random.Random(3))
    import json
    assert Chromosome.from_dict(json.loads(c.to_json())) == c


def test_search_space_examples():
    sp = search_space_size(5, 0, 3, 1, 1)
    assert sp.sizes == (243, 32, 1, 120, 1, 8)
    assert sp.total == 7_464_960
    assert search_space_size(1, 0, 1, 1, 1).sizes == (1, 2, 1, 1, 1, 2)
    assert search_space_size(1, 0, 1, 1, 1).total == 4
    assert search_space_size(1, 1, 2, 1, 1).task_assign == 3


def test_search_space_multi_cells_count_by_team_size():
    # a multi-UAV cell of i UAVs contributes 2**i profile and s**i sensor choices, summed over i = 1..U
    sp = search_space_size(1, 1, 2, 1, 3)
    assert sp.path_fp == 2 + 4
    assert sp.sensor_assign == 3 + 9
    assert sp.task_assign == 3


@given(st.integers(1, 12), st.integers(1, 8), st.integers(1, 4), st.integers(1, 3))
def test_search_space_without_multi_degenerates(T, U, G, s):
    sp = search_space_size(T, 0, U, G, s)
    assert sp.total == U ** T * 2 ** T * s ** T * math.factorial(T) * G ** U * 2 ** U


def test_scenario_search_space():
    assert scenario_search_space(scenario(), 1).total == 7_464_960


def test_repair_examples():
    dep = [TimeDependency(1, 0, AllenRelation.BEFORE)]
    assert repair_allen_order((0, 1, 2), dep) == (1, 0, 2)
    assert repair_allen_order((0, 1, 2), []) == (0, 1, 2)
    with pytest.raises(CyclicDependency):
        repair_allen_order((0, 1), [TimeDependency(0, 1, AllenRelation.BEFORE), TimeDependency(1, 0, AllenRelation.BEFORE)])


def test_repair_ignores_other_relations():
    dep = [TimeDependency(1, 0, AllenRelation.OVERLAPS)]
    assert repair_allen_order((0, 1, 2), dep) == (0, 1, 2)


def acyclic_deps(n, rng, k):
    order = list(range(n))
    rng.shuffle(order)
    pairs = set()
    for _ in range(k):
        i, j = sorted(rng.sample(range(n), 2))
        pairs.add((order[i], order[j]))
    rel = (AllenRelation.BEFORE, AllenRelation.MEETS)
    return [TimeDependency(a, b, rng.choice(rel)) for a, b in sorted(pairs)]


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 10), st.integers(0, 8))
def test_repair_properties(seed, n, k):
    rng = random.Random(seed)
    deps = acyclic_deps(n, rng, k)
    perm = list(range(n))
    rng.shuffle(perm)
    out = repair_allen_order(perm, deps)
    assert sorted(out) == list(range(n))
    pos = {t: i for i, t in enumerate(out)}
    assert all(pos[d.first] < pos[d.second] for d in deps)
    assert repair_allen_order(out, deps) == out
