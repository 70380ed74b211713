from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dynhst.geometry import InputError, LevelSchedule, Rng, dist, make_schedule
from dynhst.grid_hash import BucketKey, GridHash
from dynhst.oracles import bbox_ball_cells


def unit_grid(shift: float = 0.3) -> GridHash:
    # d=1, m=1, tau=1 -> side 1
    sched = LevelSchedule(m=1, gamma=1.0, beta=0.5, w=(2.0,), tau=(1.0,), r=(0.5,))
    return GridHash(sched, 1, [[shift]])


def test_bucket_of_examples():
    g = unit_grid()
    assert g.bucket_of(1, (0.5,)) == BucketKey(1, (0,))
    assert g.bucket_of(1, (1.4,)) == BucketKey(1, (1,))
    assert g.bucket_of(1, (1.4,)) == g.bucket_of(1, (1.4,))
    assert str(g.bucket_of(1, (1.4,))) == "1:1"


def test_enumerate_examples():
    g = unit_grid()
    assert g.enumerate_ball_buckets(1, (0.5,), 0.19) == {BucketKey(1, (0,))}
    # cells are closed for ball tests: touching the boundary at 0.3 also reports cell -1
    assert g.enumerate_ball_buckets(1, (0.5,), 0.2) == {BucketKey(1, (-1,)), BucketKey(1, (0,))}
    assert g.enumerate_ball_buckets(1, (0.5,), 0.0) == {g.bucket_of(1, (0.5,))}
    assert g.enumerate_ball_buckets(1, (0.5,), 0.8) == {BucketKey(1, (c,)) for c in (-1, 0, 1)}
    assert g.enumerate_ball_buckets(1, (0.9,), 0.45) == {BucketKey(1, (0,)), BucketKey(1, (1,))}


def test_bad_inputs():
    g = unit_grid()
    with pytest.raises(InputError):
        g.bucket_of(2, (0.0,))
    with pytest.raises(InputError):
        g.cell_of(1, (0.0, 1.0))
    with pytest.raises(InputError):
        g.ball_cells(1, (0.0,), -1.0)
    with pytest.raises(InputError):
        GridHash(g.schedule, 1, [[1.5]])


def test_sample_is_deterministic():
    s = make_schedule(100, 2, Rng(1))
    a = GridHash.sample(s, 3, Rng(1))
    b = GridHash.sample(s, 3, Rng(1))
    assert a.shifts == b.shifts
    assert a.sides[0] == pytest.approx(s.tau[0] / math.sqrt(3))


@given(st.integers(0, 10_000), st.integers(1, 5))
def test_same_bucket_points_are_within_tau(seed, d):
    gen = np.random.default_rng(seed)
    s = make_schedule(64, 2, Rng(seed))
    g = GridHash.sample(s, d, Rng(seed))
    level = int(gen.integers(1, s.m + 1))
    x = gen.uniform(0, 64, size=d)
    cell = np.array(g.cell_of(level, x))
    lo = np.array(g.shift(level)) + cell * g.side(level)
    y = lo + gen.uniform(0, g.side(level), size=d)
    if g.cell_of(level, y) == tuple(cell):
        assert dist(x, y) <= s.tau[level - 1] + 1e-12


def test_cells_of_matches_cell_of():
    s = make_schedule(50, 2, Rng(3))
    g = GridHash.sample(s, 4, Rng(3))
    X = np.random.default_rng(3).uniform(-10, 60, size=(200, 4))
    for level in range(1, s.m + 1):
        vec = g.cells_of(level, X)
        assert [tuple(r) for r in vec.tolist()] == [g.cell_of(level, x) for x in X]


def test_cell_sqdist_many_matches_scalar():
    s = make_schedule(50, 2, Rng(4))
    g = GridHash.sample(s, 3, Rng(4))
    gen = np.random.default_rng(4)
    X = gen.uniform(0, 50, size=(100, 3))
    C = gen.integers(-2, 12, size=(100, 3))
    many = g.cell_sqdist_many(2, X, C)
    assert list(many) == [g.cell_sqdist(2, x, tuple(c)) for x, c in zip(X, C)]


def test_dfs_matches_bounding_box():
    gen = np.random.default_rng(8)
    for t in range(300):
        d = int(gen.integers(1, 5))
        s = make_schedule(64, float(gen.choice([1, 2, 4])), Rng(t))
        g = GridHash.sample(s, d, Rng(t))
        level = int(gen.integers(1, s.m + 1))
        c = tuple(gen.uniform(0, 64, size=d))
        r = float(gen.uniform(0, 2 * g.side(level)))
        cells, visits = g.ball_cells(level, c, r)
        assert set(cells) == bbox_ball_cells(g, level, c, r)
        assert len(cells) == len(set(cells))
        assert visits <= (2 * d + 1) * len(cells)


def test_consistency_singletons_and_bound():
    s = make_schedule(256, 4, Rng(0))
    g = GridHash.sample(s, 4, Rng(0))
    assert g.measure_consistency(2, math.inf, 200, Rng(0)).mean == 1.0
    est = g.measure_consistency(2, 4, 4000, Rng(0))
    assert est.mean <= 1.5 ** 4 + 3 * est.stderr + 0.2
    assert g.manifest()["dim"] == 4
