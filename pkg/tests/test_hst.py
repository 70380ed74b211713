from __future__ import annotations

import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from dynhst.embedding import Label
from dynhst.geometry import InputError
from dynhst.hst import HstStore, PreconditionError, Type1, Type2
from dynhst.oracles import tree_metric


def L(x: int) -> Label:
    return Label(x, x)


def attach(store: HstStore, point: int, labels) -> Type2:
    e = store.prepare_insert(point, tuple(labels))
    store.apply(e)
    return e


def test_first_insert_creates_full_path():
    s = HstStore(3)
    attach(s, 7, [L(1), L(2), L(3)])
    assert s.node_count() == 4
    leaf = s.leaf_of(7)
    assert s.level(leaf) == 3 and s.is_leaf(leaf)
    assert [s.level(v) for v in s.path(leaf)] == [3, 2, 1, 0]
    assert s.labels_of(7) == (L(1), L(2), L(3))


def test_deactivate_only_leaf_keeps_structure():
    s = HstStore(2)
    attach(s, 1, [L(1), L(2)])
    leaf = s.leaf_of(1)
    s.apply(Type1(leaf, 1))
    assert s.active_points() == [] and s.node_count() == 3
    assert s.active_count(s.root) == 0
    with pytest.raises(InputError):
        s.leaf_of(1)


def test_tree_distance_examples():
    s = HstStore(2)
    attach(s, 1, [L(1), L(1)])
    attach(s, 2, [L(1), L(2)])
    attach(s, 3, [L(3), L(3)])
    assert s.tree_distance(1, 2) == 2.0
    assert s.tree_distance(1, 3) == 6.0
    assert s.tree_distance(1, 1) == 0.0
    metric = tree_metric(s)
    for p, q in itertools.product([1, 2, 3], repeat=2):
        assert metric(p, q) == s.tree_distance(p, q)


def test_reinsert_keeps_other_distances():
    s = HstStore(3)
    for p, labs in enumerate([[1, 1, 1], [1, 1, 2], [1, 3, 3], [4, 4, 4]]):
        attach(s, p, [L(x) for x in labs])
    before = {(p, q): s.tree_distance(p, q) for p in range(1, 4) for q in range(1, 4)}
    labels = s.labels_of(0)
    s.apply(Type1(s.leaf_of(0), 0))
    attach(s, 0, labels)
    assert before == {(p, q): s.tree_distance(p, q) for p in range(1, 4) for q in range(1, 4)}


def test_preconditions():
    s = HstStore(2)
    with pytest.raises(PreconditionError):
        s.apply(Type2(1, (L(1),), 0))
    with pytest.raises(PreconditionError):
        s.apply(Type2(1, (L(1), L(2)), 2))
    attach(s, 1, [L(1), L(2)])
    with pytest.raises(PreconditionError):
        s.apply(Type2(1, (L(1), L(2)), 2))
    with pytest.raises(PreconditionError):
        s.apply(Type1(s.leaf_of(1) + 99, 1))
    with pytest.raises(InputError):
        s.apply("not an event")
    with pytest.raises(InputError):
        HstStore(0)


def test_coincident_labels_share_a_leaf():
    s = HstStore(2)
    attach(s, 1, [L(1), L(1)])
    e = attach(s, 2, [L(1), L(1)])
    assert e.attach_depth == 2
    assert s.leaf_of(1) == s.leaf_of(2)
    assert s.leaf_points(s.leaf_of(1)) == {1, 2}
    assert s.tree_distance(1, 2) == 0.0


def test_queues():
    s = HstStore(2)
    s.subscribe("a")
    assert s.drain("a") == []
    s.subscribe("b")
    attach(s, 1, [L(1), L(1)])
    s.apply(Type1(s.leaf_of(1), 1))
    a, b = s.drain("a"), s.drain("b")
    assert a == b and [type(e) for e in a] == [Type2, Type1]
    assert a[0].leaf == a[1].leaf != -1
    with pytest.raises(InputError):
        s.drain("nobody")
    with pytest.raises(InputError):
        s.subscribe("a")


def test_compaction_waits_for_consumers():
    s = HstStore(2)
    s.subscribe("c")
    attach(s, 1, [L(1), L(1)])
    attach(s, 2, [L(2), L(2)])
    s.apply(Type1(s.leaf_of(1), 1))
    assert s.compact() == 0
    s.drain("c")
    assert s.compact() == 2
    assert s.node_count() == 3
    attach(s, 1, [L(1), L(1)])
    assert s.tree_distance(1, 2) == 6.0


def test_dump_format():
    s = HstStore(1)
    attach(s, 5, [L(9)])
    assert s.dump() == ["0 0 -1 -1 1", "1 1 0 9 1"]
    assert Type1(1, 5).format() == "T1 1 5"
    assert Type2(5, (L(9),), 0).format() == "T2 5 0 9"


labels_st = st.lists(st.tuples(st.integers(0, 2), st.integers(0, 2), st.integers(0, 2)), min_size=1, max_size=12)


@given(labels_st, st.lists(st.integers(0, 11), max_size=8))
def test_random_events_match_label_table(vectors, deletes):
    s = HstStore(3)
    for p, vec in enumerate(vectors):
        attach(s, p, [L(x) for x in vec])
    gone = set()
    for p in deletes:
        if p < len(vectors) and p not in gone:
            s.apply(Type1(s.leaf_of(p), p))
            gone.add(p)
    table = s.label_table()
    assert set(table.ids()) == set(range(len(vectors))) - gone
    for p in table.ids():
        assert table[p] == tuple(L(x) for x in vectors[p])
        for q in table.ids():
            assert s.tree_distance(p, q) == table.tree_distance(p, q)
    for v in list(s._level):
        below = sum(1 for p in table.ids() if v in s.path(s.leaf_of(p)))
        assert s.active_count(v) == below
