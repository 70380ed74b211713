from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dynhst.embedding import Label
from dynhst.geometry import InputError
from dynhst.hst import HstStore, Type1
from dynhst.kmedian import TreeKMedian
from dynhst.oracles import brute_kmedian


def L(x: int) -> Label:
    return Label(x, x)


def put(store, p, vec):
    store.apply(store.prepare_insert(p, tuple(L(x) for x in vec)))


def test_first_leaf_benefits_telescope():
    s = HstStore(3)
    km = TreeKMedian(s, k=1)
    put(s, 4, [1, 1, 1])
    km.sync()
    path = s.path(s.leaf_of(4))
    # benf at level l is 2^(m-l+1) - 1 for a single point
    assert [km.benf[v] for v in path] == [1, 3, 7, 15]
    assert all(km.kcenter[v] == 4 for v in path)
    assert km.centers() == [4]


def test_two_siblings():
    s = HstStore(3)
    km = TreeKMedian(s, k=1)
    put(s, 1, [1, 1, 1])
    put(s, 2, [1, 1, 2])
    km.sync()
    parent = s.parent(s.leaf_of(1))
    assert km.benf[parent] == 2 * 2 + 1
    assert km.centers() == [1]
    assert km.solution_cost() == 2.0
    assert brute_kmedian(s, 1) == 2.0
    assert km.solution_cost(2) == 0.0
    assert sorted(km.centers(2)) == [1, 2]


def test_delete_only_leaf():
    s = HstStore(2)
    km = TreeKMedian(s, k=2)
    put(s, 1, [1, 1])
    km.sync()
    leaf = s.leaf_of(1)
    s.apply(Type1(leaf, 1))
    km.sync()
    assert all(km.benf[v] == 0 for v in s.path(leaf))
    assert len(km.candidates) == 0
    assert km.solution_cost() == 0.0
    with pytest.raises(InputError):
        km.query_center(1)


def test_query_center_cases():
    s = HstStore(3)
    km = TreeKMedian(s, k=1)
    for p, vec in enumerate([[1, 1, 1], [1, 1, 2], [1, 2, 2], [3, 3, 3]]):
        put(s, p, vec)
    km.sync()
    (c,) = km.centers()
    assert all(km.query_center(p) == c for p in range(4))
    assert km.query_center(c) == c
    with pytest.raises(InputError):
        TreeKMedian(s, k=0, consumer="other")
    with pytest.raises(InputError):
        km.centers(0)


def test_k_at_least_n_opens_everything():
    s = HstStore(2)
    km = TreeKMedian(s, k=4)
    for p, vec in enumerate([[1, 1], [1, 2], [2, 2]]):
        put(s, p, vec)
    km.sync()
    assert sorted(km.centers()) == [0, 1, 2]
    assert km.solution_cost() == 0.0


def test_subscribing_late_sees_existing_points():
    s = HstStore(3)
    for p, vec in enumerate([[1, 1, 1], [1, 1, 2], [2, 2, 2], [2, 2, 3], [2, 3, 3]]):
        put(s, p, vec)
    km = TreeKMedian(s, k=2)
    assert km.solution_cost() == brute_kmedian(s, 2)


vecs = st.lists(st.tuples(st.integers(0, 2), st.integers(0, 2), st.integers(0, 2)), min_size=1, max_size=10)


@given(vecs, st.lists(st.integers(0, 9), max_size=6), st.integers(1, 4))
def test_random_trace_matches_recomputation_and_brute_force(vectors, deletes, k):
    s = HstStore(3)
    km = TreeKMedian(s, k=k)
    gone = set()
    ops = [("I", p) for p in range(len(vectors))] + [("D", p) for p in deletes if p < len(vectors)]
    for kind, p in ops:
        if kind == "I":
            put(s, p, vectors[p])
        elif p not in gone:
            s.apply(Type1(s.leaf_of(p), p))
            gone.add(p)
        else:
            continue
        km.sync()
        fresh = TreeKMedian(s, k=k, consumer=f"fresh-{len(s._queues)}")
        for v in s._level:
            if s.active_count(v):
                assert km.benf[v] == fresh.benf[v]
                assert km.kcenter[v] == fresh.kcenter[v]
        if s.active_points():
            assert km.solution_cost() == brute_kmedian(s, k)
            cs = km.centers()
            for q in s.active_points():
                best = min(s.tree_distance(q, c) for c in cs)
                assert s.tree_distance(q, km.query_center(q)) == best
