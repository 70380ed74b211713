from __future__ import annotations

import math

import numpy as np
import pytest

from dynhst.embedding import Label, compute_labels
from dynhst.geometry import InputError, PointSet, Rng, draw_priority, make_schedule
from dynhst.grid_hash import GridHash
from dynhst.hst import HstStore
from dynhst.oracles import (brute_kmedian, brute_perfect_matching, exhaustive_labels, harmonic,
                            hungarian_tree, min_cost_flow, mincost_transport, prefix_minima_stats,
                            tree_metric)


def L(x: int) -> Label:
    return Label(x, x)


def siblings() -> HstStore:
    s = HstStore(2)
    for p, vec in enumerate([[1, 1], [1, 2], [2, 1], [2, 2]]):
        s.apply(s.prepare_insert(p, tuple(L(x) for x in vec)))
    return s


def test_exhaustive_singleton_and_cross_check():
    rng = Rng(0)
    s = make_schedule(16, 2, rng)
    g = GridHash.sample(s, 2, rng)
    one = exhaustive_labels(PointSet.from_array([[3.0, 3.0]]), s, g, rng)
    assert one[0] == tuple(Label(draw_priority(0, rng), 0) for _ in range(s.m))
    for seed in range(100):
        gen = np.random.default_rng(seed)
        n, d = int(gen.integers(1, 33)), int(gen.integers(1, 4))
        pts = PointSet.from_array(gen.uniform(0, 16, size=(n, d)))
        r = Rng(seed)
        s = make_schedule(16 * math.sqrt(d), float(gen.choice([1, 2, 4])), r)
        g = GridHash.sample(s, d, r)
        assert exhaustive_labels(pts, s, g, r) == compute_labels(pts, s, g, r)
    with pytest.raises(InputError):
        exhaustive_labels(PointSet.from_array(np.zeros((513, 1))), s, GridHash.sample(s, 1, r), r)


def test_small_tree_optima():
    s = siblings()
    assert brute_kmedian(s, 4) == 0.0
    assert brute_kmedian(s, 2) == 4.0
    assert hungarian_tree(s, [0], [3]) == s.tree_distance(0, 3) == 6.0
    assert hungarian_tree(s, [0, 2], [1, 3]) == 4.0 == hungarian_tree(s, [1, 3], [0, 2])
    assert hungarian_tree(s, [], []) == 0.0
    assert brute_perfect_matching(s) == 4.0
    assert brute_perfect_matching(s, [0, 2]) == 6.0
    assert mincost_transport(s, {}) == 0.0
    assert mincost_transport(s, {0: 1, 3: -1}) == 6.0
    metric = tree_metric(s)
    assert metric(0, 1) == 2.0 and metric(0, 0) == 0.0


def test_two_siblings_k1():
    s = HstStore(3)
    for p, vec in enumerate([[1, 1, 1], [1, 1, 2]]):
        s.apply(s.prepare_insert(p, tuple(L(x) for x in vec)))
    assert brute_kmedian(s, 1) == 2.0


def test_oracle_limits():
    s = siblings()
    with pytest.raises(InputError):
        brute_kmedian(s, 5)
    with pytest.raises(InputError):
        hungarian_tree(s, [0], [])
    with pytest.raises(InputError):
        brute_perfect_matching(s, [0, 1, 2])
    with pytest.raises(InputError):
        mincost_transport(s, {0: 1})
    with pytest.raises(InputError):
        mincost_transport(s, {0: 150, 1: -150})


def test_min_cost_flow_small_network():
    # two routes from 0 to 3: cost 1+1 (cap 1) and 2+2 (cap 2)
    edges = [(0, 1, 1, 1.0), (1, 3, 1, 1.0), (0, 2, 2, 2.0), (2, 3, 2, 2.0)]
    assert min_cost_flow(4, edges, 0, 3, 1) == 2.0
    assert min_cost_flow(4, edges, 0, 3, 3) == 2.0 + 8.0
    with pytest.raises(InputError):
        min_cost_flow(4, edges, 0, 3, 4)


def test_prefix_minima():
    mean, se = prefix_minima_stats(1, 10, Rng(0))
    assert mean == 1.0 and se == 0.0
    mean, se = prefix_minima_stats(4, 100_000, Rng(0))
    assert harmonic(4) == pytest.approx(25 / 12)
    assert abs(mean - 25 / 12) <= 3 * se
    assert harmonic(1000) == pytest.approx(7.4855, abs=1e-4)
    with pytest.raises(InputError):
        prefix_minima_stats(0, 10, Rng(0))
