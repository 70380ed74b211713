from __future__ import annotations

import math

import numpy as np
import pytest

from dynhst.dynamic import DynamicConfig, DynamicEmbedding
from dynhst.embedding import compute_labels
from dynhst.geometry import InputError, JLMap, Point, PointSet, Rng, draw_priority, make_schedule
from dynhst.grid_hash import GridHash
from dynhst.hst import HstStore, Type1, Type2
from dynhst.oracles import harmonic


def make(seed=0, dim=2, side=32.0, **kw) -> DynamicEmbedding:
    return DynamicEmbedding(DynamicConfig(dim=dim, delta_max=side * math.sqrt(dim), seed=seed, **kw))


def fill(emb: DynamicEmbedding, n: int, seed: int, side: float = 32.0, start: int = 0):
    gen = np.random.default_rng(seed)
    events = []
    for i in range(start, start + n):
        events += emb.insert(Point(i, tuple(gen.uniform(0, side, size=emb.config.dim))))
    return events


def test_first_insert_is_one_type2():
    emb = make()
    events = emb.insert(Point(0, (1.0, 2.0)))
    assert len(events) == 1 and isinstance(events[0], Type2)
    assert emb.recourse_stats().mean_events == 1.0


@pytest.mark.parametrize("registry", ["neighbor", "explicit"])
def test_insertion_only_equals_static_epoch_zero(registry):
    # no rebuild: the static labels are rebuilt from the seed independently
    emb = make(seed=5, dim=3, registry=registry, rebuild_floor=10_000)
    fill(emb, 256, seed=5)
    erng = Rng(5).child("epoch-0")
    sched = make_schedule(32 * math.sqrt(3), 2.0, erng)
    grid = GridHash.sample(sched, 3, erng)
    gen = np.random.default_rng(5)
    pts = PointSet.from_array(gen.uniform(0, 32, size=(256, 3)))
    assert emb.label_table() == compute_labels(pts, sched, grid, erng.child("priority"))


@pytest.mark.parametrize("registry", ["neighbor", "explicit"])
def test_insertion_only_with_rebuilds_equals_static(registry):
    emb = make(seed=6, dim=2, registry=registry)
    fill(emb, 256, seed=6)
    assert emb.recourse_stats().rebuilds >= 1
    static = compute_labels(emb.epoch_point_set(), emb.schedule, emb.grid, emb.priority_rng)
    assert emb.label_table() == static
    assert emb.store.label_table() == static
    emb.check_registration()


def test_largest_priority_insert_changes_nothing():
    emb = make(seed=1, rebuild_floor=10_000)
    fill(emb, 50, seed=1)
    top = max(emb.keys.values())
    cands = range(1000, 3000)
    pid = max(cands, key=lambda i: draw_priority(i, emb.priority_rng))
    assert (draw_priority(pid, emb.priority_rng), pid) > top
    before = emb.label_table()
    events = emb.insert(Point(pid, (16.0, 16.0)))
    assert len(events) == 1
    after = emb.label_table()
    assert all(after[p] == before[p] for p in before.ids())


def test_delete_semantics():
    emb = make(seed=2, rebuild_floor=10_000)
    fill(emb, 40, seed=2)
    before = {(p, q): emb.tree_distance(p, q) for p in range(1, 40) for q in range(1, 40)}
    events = emb.delete(0)
    assert events == [events[0]] and isinstance(events[0], Type1)
    with pytest.raises(InputError):
        emb.tree_distance(0, 1)
    with pytest.raises(InputError):
        emb.delete(0)
    assert before == {(p, q): emb.tree_distance(p, q) for p in range(1, 40) for q in range(1, 40)}
    emb.reset_stats()
    for p in range(1, 40):
        emb.delete(p)
    st = emb.recourse_stats()
    assert (st.type1, st.type2) == (39, 0)
    assert len(emb) == 0 and emb.store.active_points() == []


def test_ids_are_never_reused():
    emb = make()
    emb.insert(Point(3, (0.0, 0.0)))
    with pytest.raises(InputError):
        emb.insert(Point(3, (1.0, 1.0)))
    emb.delete(3)
    with pytest.raises(InputError):
        emb.insert(Point(3, (1.0, 1.0)))
    with pytest.raises(InputError):
        emb.insert(Point(4, (1.0, 1.0, 1.0)))
    with pytest.raises(InputError):
        emb.insert(Point(5, (math.nan, 1.0)))


def test_validate_rejects_points_outside_the_box():
    emb = make(side=8.0, validate=True)
    with pytest.raises(InputError):
        emb.insert(Point(0, (-1.0, 0.0)))


def test_rebuild_empty_and_determinism():
    assert make().rebuild() == []
    a, b = make(seed=9), make(seed=9)
    fill(a, 100, seed=9)
    fill(b, 100, seed=9)
    a.rebuild()
    b.rebuild()
    assert a.label_table() == b.label_table()
    assert a.manifest() == b.manifest()
    assert a.store.dump() == b.store.dump()


def test_rebuild_keeps_dominance():
    emb = make(seed=3, side=64.0, rebuild_floor=16)
    gen = np.random.default_rng(3)
    X = gen.uniform(0, 64, size=(80, 2))
    for i, x in enumerate(X):
        emb.insert(Point(i, tuple(x)))
    for i in range(0, 80, 3):
        emb.delete(i)
    emb.rebuild()
    act = sorted(emb.active)
    for p in act:
        for q in act:
            gap = float(np.linalg.norm(X[p] - X[q]))
            if gap >= 1:
                assert emb.tree_distance(p, q) >= gap


def test_rebuild_events_replay():
    emb = make(seed=4, rebuild_floor=8)
    events = fill(emb, 30, seed=4)
    for p in range(0, 30, 2):
        events += emb.delete(p)
    events += fill(emb, 20, seed=44, start=100)
    fresh = HstStore(emb.m)
    for e in events:
        fresh.apply(e)
    assert fresh.label_table() == emb.label_table()


def test_registries_agree_on_mixed_traces():
    tables = []
    for registry in ("neighbor", "explicit"):
        emb = make(seed=7, dim=3, registry=registry, rebuild_floor=20)
        gen = np.random.default_rng(7)
        live, nid = [], 0
        for _ in range(150):
            if live and gen.random() < 0.3:
                emb.delete(live.pop(int(gen.integers(len(live)))))
            else:
                emb.insert(Point(nid, tuple(gen.uniform(0, 32, size=3))))
                live.append(nid)
                nid += 1
        emb.check_registration()
        tables.append(emb.label_table())
    assert tables[0] == tables[1]


def test_jl_projection_is_applied_before_labels():
    cfg = DynamicConfig(dim=16, delta_max=200.0, seed=8, jl_dim=4, rebuild_floor=10_000)
    emb = DynamicEmbedding(cfg)
    gen = np.random.default_rng(8)
    X = gen.uniform(0, 20, size=(60, 16))
    for i, x in enumerate(X):
        emb.insert(Point(i, tuple(x)))
    jl = JLMap.sample(16, 4, Rng(8))
    pts = PointSet.from_array(jl.apply(X))
    assert emb.label_table() == compute_labels(pts, emb.schedule, emb.grid, emb.priority_rng)
    assert emb.original[5] == tuple(X[5])


def test_bulk_load_matches_static():
    emb = make(seed=10)
    gen = np.random.default_rng(10)
    pts = [Point(i, tuple(gen.uniform(0, 32, size=2))) for i in range(120)]
    events = emb.bulk_load(pts)
    assert len(events) == 120 and all(isinstance(e, Type2) for e in events)
    static = compute_labels(PointSet.from_points(pts), emb.schedule, emb.grid, emb.priority_rng)
    assert emb.label_table() == static
    with pytest.raises(InputError):
        emb.bulk_load([Point(0, (1.0, 1.0))])


def test_bucket_min_changes_follow_prefix_minima():
    # n inserts into one bucket per level: the bucket minimum changes at every
    # running minimum of the priority sequence, H_n times in expectation
    n, seeds = 300, 60
    counts = []
    for seed in range(seeds):
        emb = DynamicEmbedding(DynamicConfig(dim=1, delta_max=64.0, seed=seed, rebuild_floor=10_000,
                                             registry="explicit"))
        base = 10.0 + 1e-3 * seed
        for i in range(n):
            emb.insert(Point(i, (base + i * 1e-12,)))
        counts.append(emb.recourse_stats().bucket_min_changes / emb.m)
    c = np.array(counts)
    stderr = c.std(ddof=1) / math.sqrt(seeds)
    assert abs(c.mean() - harmonic(n)) <= 4 * stderr


def test_recourse_report_fields():
    emb = make(seed=11)
    fill(emb, 200, seed=11)
    emb.delete(3)
    d = emb.recourse_stats().as_dict()
    assert d["updates"] == 201 and d["deletes"] == 1
    assert d["type1"] + d["type2"] == sum(int(k) * v for k, v in d["events_histogram"].items())
    assert d["rebuilds"] >= 1 and d["operations"] > 0
    assert sum(d["label_changes_per_level"].values()) >= 0


def test_config_validation():
    for bad in (dict(dim=0, delta_max=4), dict(dim=2, delta_max=0.5), dict(dim=2, delta_max=4, gamma=0.5),
                dict(dim=2, delta_max=4, rebuild_floor=0), dict(dim=2, delta_max=4, registry="x")):
        with pytest.raises(InputError):
            DynamicConfig(**bad)
