from __future__ import annotations

import math

import numpy as np
import pytest

from dynhst.embedding import compute_labels
from dynhst.geometry import InputError, PointSet, Rng, make_schedule
from dynhst.grid_hash import GridHash
from dynhst.mpc import CapacityError, MpcSimulator, RoundLog, run_embedding_mpc, words


def instance(n, d=3, seed=0, side=32.0):
    rng = Rng(seed)
    pts = PointSet.from_array(rng.child("pts").generator().uniform(0, side, size=(n, d)))
    s = make_schedule(side * math.sqrt(d), 2.0, rng)
    g = GridHash.sample(s, d, rng)
    return pts, s, g, rng.child("priority")


def test_words():
    assert words(5) == 1 and words((1, (2, 3))) == 3 and words([]) == 0


def test_single_machine_costs_no_rounds():
    sim = MpcSimulator(1, 100)
    assert sim.broadcast(7) == [7]
    assert sim.aggregate([3]) == 3
    assert sim.sort([[3, 1, 2]], key=lambda r: r) == [[1, 2, 3]]
    assert sim.log.rounds == 0


def test_broadcast_then_aggregate():
    sim = MpcSimulator(10, 4)
    vals = sim.broadcast(42)
    assert vals == [42] * 10
    assert sim.aggregate(vals, min) == 42
    assert sim.log.rounds > 0
    assert sim.log.per_primitive["broadcast"] + sim.log.per_primitive["aggregate"] == sim.log.rounds


def test_sort_is_global_and_logarithmic():
    n, s = 10_000, 100
    M = n // s
    gen = np.random.default_rng(0)
    keys = gen.integers(0, 10 ** 9, size=n).tolist()
    stores = [keys[j * s:(j + 1) * s] for j in range(M)]
    sim = MpcSimulator(M, 40 * s)
    out = sim.sort(stores, key=lambda r: r)
    flat = [x for part in out for x in part]
    assert flat == sorted(keys)
    assert sim.log.rounds <= 4 * math.log(n) / math.log(s)


def test_per_bucket_minima_by_aggregation():
    gen = np.random.default_rng(1)
    recs = [(int(b), int(v)) for b, v in zip(gen.integers(0, 5, 200), gen.integers(0, 10 ** 6, 200))]
    want = {}
    for b, v in recs:
        want[b] = min(v, want.get(b, v))
    M = 8
    local = []
    for j in range(M):
        part = {}
        for b, v in recs[j::M]:
            part[b] = min(v, part.get(b, v))
        local.append(tuple(sorted(part.items())))

    def merge(x, y):
        out = dict(x)
        for b, v in y:
            out[b] = min(v, out.get(b, v))
        return tuple(sorted(out.items()))

    sim = MpcSimulator(M, 1000)
    assert dict(sim.aggregate(local, merge)) == want


def test_capacity_violation_raises():
    sim = MpcSimulator(2, 3)
    with pytest.raises(CapacityError):
        sim.exchange([[(1, (1, 2, 3, 4))], []], "x")
    with pytest.raises(InputError):
        MpcSimulator(0, 5)


@pytest.mark.parametrize("n,s", [(10, 16), (100, 16), (500, 64)])
def test_labels_identical_to_sequential(n, s):
    pts, sched, grid, prng = instance(n, seed=n)
    table, log = run_embedding_mpc(pts, sched, grid, s, prng)
    assert table == compute_labels(pts, sched, grid, prng)
    if n <= s:
        assert log.rounds == 0
    else:
        assert log.rounds <= 8 * math.log(n) / math.log(s)
    assert log.total_space > 0 and log.max_load > 0


def test_local_space_floor_and_empty_input():
    pts, sched, grid, prng = instance(20)
    with pytest.raises(InputError):
        run_embedding_mpc(pts, sched, grid, 8, prng)
    table, log = run_embedding_mpc(PointSet.from_points([]), sched, grid, 16, prng)
    assert len(table) == 0 and log == RoundLog()


def test_tiny_slack_is_a_capacity_fault():
    pts, sched, grid, prng = instance(200)
    with pytest.raises(CapacityError):
        run_embedding_mpc(pts, sched, grid, 32, prng, slack=0.001)
