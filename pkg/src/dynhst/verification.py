"""Randomized cross-checks of the maintained structures against the oracles.

Every suite takes a seed plus size knobs and returns a SuiteResult counting
individual comparisons and failures. The small tree instances come from real
dynamic embeddings of points in a small 2-d box, with a low rebuild floor so
traces also exercise rebuild waves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .dynamic import DynamicConfig, DynamicEmbedding
from .embedding import LabelTable, compute_labels
from .geometry import InputError, Point, PointSet, Rng, make_schedule
from .grid_hash import GridHash
from .hst import HstStore
from .kmedian import TreeKMedian
from .matching import BLUE, RED, TreeMatching
from .mpc import run_embedding_mpc
from .oracles import (bbox_ball_cells, brute_kmedian, brute_perfect_matching, exhaustive_labels,
                      hungarian_tree, mincost_transport, tree_metric)
from .transport import TreeTransport


@dataclass
class SuiteResult:
    name: str
    seed: int
    checks: int = 0
    failures: int = 0
    detail: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.failures == 0 and self.checks > 0

    def check(self, ok: bool, what: str) -> None:
        self.checks += 1
        if not ok:
            self.failures += 1
            if len(self.detail) < 10:
                self.detail.append(what)

    def summary(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"{verdict} {self.name} seed={self.seed} checks={self.checks} failures={self.failures}"


def _coords(gen: np.random.Generator, d: int, side: float) -> tuple[float, ...]:
    return tuple(float(v) for v in gen.uniform(0.0, side, size=d))


def small_embedding(seed: int, dim: int = 2, side: float = 8.0, gamma: float = 2.0,
                    rebuild_floor: int = 4, registry: str = "explicit") -> DynamicEmbedding:
    return DynamicEmbedding(DynamicConfig(dim=dim, delta_max=max(1.0, side * math.sqrt(dim)), gamma=gamma,
                                          seed=seed, rebuild_floor=rebuild_floor, registry=registry))


def implied_shape(table: LabelTable) -> dict[tuple, int]:
    """Active-leaf count of every label prefix (the tree the table describes)."""
    shape: dict[tuple, int] = {}
    for p in table.ids():
        vec = table[p]
        for depth in range(table.m + 1):
            key = tuple(vec[:depth])
            shape[key] = shape.get(key, 0) + 1
    return shape


def store_shape(store: HstStore) -> dict[tuple, int]:
    """Active-leaf count of every node with active leaves, keyed by its label path."""
    shape: dict[tuple, int] = {}
    stack = [(store.root, ())]
    while stack:
        v, key = stack.pop()
        if store.active_count(v) == 0:
            continue
        shape[key] = store.active_count(v)
        for c in store.children(v):
            stack.append((c, key + (store.label(c),)))
    return shape


def replay_matches(emb: DynamicEmbedding, events: list) -> list[str]:
    """Replay ``events`` into a fresh store; list every disagreement with ``emb``."""
    fresh = HstStore(emb.m)
    for e in events:
        fresh.apply(e)
    problems = []
    table = emb.label_table()
    if fresh.label_table() != table:
        problems.append("replayed labels differ")
    if store_shape(fresh) != implied_shape(table):
        problems.append("replayed tree shape differs from the label table")
    pts = table.ids()
    metric = tree_metric(fresh)
    for a in pts[:12]:
        for b in pts[:12]:
            if metric(a, b) != table.tree_distance(a, b):
                problems.append(f"distance {a}-{b} differs")
    return problems


# -- suites ----------------------------------------------------------------------------


def suite_labels(seed: int = 0, instances: int = 20, max_n: int = 32) -> SuiteResult:
    """Static labels (both methods) against the exhaustive scan."""
    res = SuiteResult("labels", seed)
    gen = Rng(seed).child("labels").generator()
    for t in range(instances):
        n = int(gen.integers(1, max_n + 1))
        d = int(gen.integers(1, 5))
        side = float(gen.choice([4.0, 16.0, 64.0]))
        gamma = float(gen.choice([1.0, 2.0, 4.0]))
        pts = PointSet.from_array(gen.uniform(0.0, side, size=(n, d)))
        rng = Rng(seed).child(f"labels-{t}")
        schedule = make_schedule(max(1.0, side * math.sqrt(d)), gamma, rng)
        grid = GridHash.sample(schedule, d, rng)
        want = exhaustive_labels(pts, schedule, grid, rng.child("priority"))
        for method in ("kdtree", "enumerate"):
            got = compute_labels(pts, schedule, grid, rng.child("priority"), method=method)
            res.check(got == want, f"instance {t} method {method}")
    return res


def suite_dynamic(seed: int = 0, traces: int = 10, max_n: int = 64, max_d: int = 4) -> SuiteResult:
    """Insertion-only dynamic labels against the exhaustive scan, plus event replay."""
    res = SuiteResult("dynamic", seed)
    gen = Rng(seed).child("dynamic").generator()
    for t in range(traces):
        n = int(gen.integers(1, max_n + 1))
        d = int(gen.integers(1, max_d + 1))
        side = float(gen.choice([8.0, 32.0, 128.0]))
        # explicit enumeration meets ~5^d cells per level, so it is only exercised up to d=4
        registry = "explicit" if t % 2 and d <= 4 else "neighbor"
        emb = DynamicEmbedding(DynamicConfig(dim=d, delta_max=side * math.sqrt(d), gamma=2.0,
                                             seed=seed * 1000 + t, registry=registry))
        events = []
        for i in range(n):
            events.extend(emb.insert(Point(i, _coords(gen, d, side))))
        want = exhaustive_labels(emb.epoch_point_set(), emb.schedule, emb.grid, emb.priority_rng)
        res.check(emb.label_table() == want, f"trace {t}: labels differ from exhaustive scan")
        for prob in replay_matches(emb, events):
            res.check(False, f"trace {t}: {prob}")
        res.check(True, "replay")
    return res


def suite_replay(seed: int = 0, traces: int = 10, updates: int = 120) -> SuiteResult:
    """Mixed insert/delete traces: replayed events rebuild the implied tree."""
    res = SuiteResult("replay", seed)
    gen = Rng(seed).child("replay").generator()
    for t in range(traces):
        d = int(gen.integers(1, 5))
        emb = small_embedding(seed * 1000 + t, dim=d, side=16.0, rebuild_floor=8,
                              registry="explicit" if t % 2 else "neighbor")
        events, live, nid = [], [], 0
        for _ in range(updates):
            if live and gen.random() < 0.35:
                events.extend(emb.delete(live.pop(int(gen.integers(len(live))))))
            else:
                events.extend(emb.insert(Point(nid, _coords(gen, d, 16.0))))
                live.append(nid)
                nid += 1
        emb.check_registration()
        want = exhaustive_labels(emb.epoch_point_set(), emb.schedule, emb.grid, emb.priority_rng)
        sub = LabelTable(want.m, {p: want[p] for p in emb.active})
        res.check(emb.label_table() == sub, f"trace {t}: labels differ from exhaustive scan")
        for prob in replay_matches(emb, events):
            res.check(False, f"trace {t}: {prob}")
        res.check(True, "replay")
    return res


def suite_kmedian(seed: int = 0, instances: int = 20, steps: int = 30, max_n: int = 12) -> SuiteResult:
    """Maintained k-median cost equals the exhaustive optimum after every update."""
    res = SuiteResult("kmedian", seed)
    gen = Rng(seed).child("kmedian").generator()
    for t in range(instances):
        k = int(gen.integers(1, 5))
        emb = small_embedding(seed * 1000 + t)
        km = TreeKMedian(emb.store, k=k)
        live, nid = [], 0
        for step in range(steps):
            if live and (len(live) >= max_n or gen.random() < 0.4):
                emb.delete(live.pop(int(gen.integers(len(live)))))
            else:
                emb.insert(Point(nid, _coords(gen, 2, 8.0)))
                live.append(nid)
                nid += 1
            km.sync()
            if not live:
                continue
            got = km.solution_cost()
            want = brute_kmedian(emb.store, k)
            res.check(got == want, f"instance {t} step {step}: cost {got} != {want}")
            cs = km.centers()
            for p in live:
                c = km.query_center(p)
                best = min(emb.store.tree_distance(p, x) for x in cs)
                res.check(c in cs and emb.store.tree_distance(p, c) == best,
                          f"instance {t} step {step}: bad center for {p}")
    return res


def suite_bipartite(seed: int = 0, instances: int = 20, steps: int = 24, max_pairs: int = 8) -> SuiteResult:
    """Maintained bipartite matching cost equals the assignment optimum."""
    res = SuiteResult("bipartite", seed)
    gen = Rng(seed).child("bipartite").generator()
    for t in range(instances):
        emb = small_embedding(seed * 1000 + t)
        bm = TreeMatching(emb.store, "bipartite")
        pairs: list[tuple[int, int]] = []
        nid = 0
        for step in range(steps):
            if pairs and (len(pairs) >= max_pairs or gen.random() < 0.35):
                a, b = pairs.pop(int(gen.integers(len(pairs))))
                bm.bm_delete(a)
                bm.bm_delete(b)
                emb.delete(a)
                emb.delete(b)
            else:
                a, b = nid, nid + 1
                nid += 2
                bm.bm_insert(a, RED)
                bm.bm_insert(b, BLUE)
                emb.insert(Point(a, _coords(gen, 2, 8.0)))
                emb.insert(Point(b, _coords(gen, 2, 8.0)))
                pairs.append((a, b))
            bm.sync()
            want = hungarian_tree(emb.store, [a for a, _ in pairs], [b for _, b in pairs])
            res.check(bm.matching_cost() == want, f"instance {t} step {step}: {bm.matching_cost()} != {want}")
            try:
                bm.check_invariants()
                res.check(True, "")
            except AssertionError as exc:
                res.check(False, f"instance {t} step {step}: {exc}")
    return res


def suite_transport(seed: int = 0, instances: int = 20, steps: int = 30, max_n: int = 8,
                    max_w: int = 10) -> SuiteResult:
    """Maintained transport cost equals min-cost flow after every update."""
    res = SuiteResult("transport", seed)
    gen = Rng(seed).child("transport").generator()
    for t in range(instances):
        emb = small_embedding(seed * 1000 + t)
        tr = TreeTransport(emb.store)
        w: dict[int, int] = {}
        nid = 0
        for step in range(steps):
            live = sorted(w)
            r = gen.random()
            if len(live) < 2 or (r < 0.3 and len(live) < max_n):
                emb.insert(Point(nid, _coords(gen, 2, 8.0)))
                w[nid] = 0
                nid += 1
            elif r < 0.5:
                # delete a point and hand its weight to another live point
                a, b = (int(x) for x in gen.choice(live, size=2, replace=False))
                if abs(w[b] + w[a]) <= max_w:
                    tr.set_weight(b, w[b] + w[a])
                    w[b] += w[a]
                    tr.set_weight(a, 0)
                    del w[a]
                    emb.delete(a)
            else:
                a, b = (int(x) for x in gen.choice(live, size=2, replace=False))
                delta = int(gen.integers(-max_w, max_w + 1))
                if abs(w[a] + delta) <= max_w and abs(w[b] - delta) <= max_w:
                    w[a] += delta
                    w[b] -= delta
                    tr.set_weight(a, w[a])
                    tr.set_weight(b, w[b])
            tr.sync()
            want = mincost_transport(emb.store, {p: x for p, x in w.items() if x})
            res.check(tr.transport_cost() == want, f"instance {t} step {step}: {tr.transport_cost()} != {want}")
            res.check(tr.recompute_cost() == tr.transport_cost(), f"instance {t} step {step}: drift")
    return res


def suite_general(seed: int = 0, instances: int = 20, steps: int = 30, max_n: int = 10) -> SuiteResult:
    """Maintained general matching cost equals the exhaustive optimum on even sets."""
    res = SuiteResult("general", seed)
    gen = Rng(seed).child("general").generator()
    for t in range(instances):
        emb = small_embedding(seed * 1000 + t)
        gm = TreeMatching(emb.store, "general")
        live, nid = [], 0
        for step in range(steps):
            if live and (len(live) >= max_n or gen.random() < 0.4):
                p = live.pop(int(gen.integers(len(live))))
                gm.gm_delete(p)
                emb.delete(p)
            else:
                gm.gm_insert(nid)
                emb.insert(Point(nid, _coords(gen, 2, 8.0)))
                live.append(nid)
                nid += 1
            gm.sync()
            try:
                gm.check_invariants()
                res.check(True, "")
            except AssertionError as exc:
                res.check(False, f"instance {t} step {step}: {exc}")
            if len(live) % 2 == 0:
                want = brute_perfect_matching(emb.store, live)
                res.check(gm.matching_cost() == want,
                          f"instance {t} step {step}: {gm.matching_cost()} != {want}")
    return res


def suite_enumeration(seed: int = 0, queries: int = 1000, max_d: int = 4) -> SuiteResult:
    """Grid DFS ball enumeration against the bounding-box scan."""
    res = SuiteResult("enumeration", seed)
    gen = Rng(seed).child("enumeration").generator()
    for q in range(queries):
        d = int(gen.integers(1, max_d + 1))
        gamma = float(gen.choice([1.0, 2.0, 4.0]))
        rng = Rng(seed).child(f"enum-{q}")
        schedule = make_schedule(64.0, gamma, rng)
        grid = GridHash.sample(schedule, d, rng)
        level = int(gen.integers(1, schedule.m + 1))
        center = _coords(gen, d, 64.0)
        radius = float(gen.choice([grid.radius(level), gen.uniform(0, 2 * grid.side(level))]))
        cells, visits = grid.ball_cells(level, center, radius)
        want = bbox_ball_cells(grid, level, center, radius)
        res.check(set(cells) == want and len(cells) == len(want), f"query {q}: cell sets differ")
        res.check(visits <= (2 * d + 1) * len(cells), f"query {q}: {visits} visits for {len(cells)} cells")
    return res


def suite_mpc(seed: int = 0, configs: tuple[tuple[int, int], ...] = ((100, 16), (300, 32), (64, 64))) -> SuiteResult:
    """Simulated parallel labels are identical to the sequential ones."""
    res = SuiteResult("mpc", seed)
    for n, s in configs:
        rng = Rng(seed).child(f"mpc-{n}-{s}")
        gen = rng.child("points").generator()
        d = 3
        pts = PointSet.from_array(gen.uniform(0.0, 32.0, size=(n, d)))
        schedule = make_schedule(32.0 * math.sqrt(d), 2.0, rng)
        grid = GridHash.sample(schedule, d, rng)
        table, log = run_embedding_mpc(pts, schedule, grid, s, rng.child("priority"))
        want = compute_labels(pts, schedule, grid, rng.child("priority"))
        res.check(table == want, f"n={n} s={s}: labels differ")
        bound = 8 * math.log(n) / math.log(s) if n > s else 0
        res.check(log.rounds <= max(bound, 0), f"n={n} s={s}: {log.rounds} rounds")
    return res


SUITES: dict[str, Callable[..., SuiteResult]] = {
    "labels": suite_labels,
    "dynamic": suite_dynamic,
    "replay": suite_replay,
    "kmedian": suite_kmedian,
    "bipartite": suite_bipartite,
    "transport": suite_transport,
    "general": suite_general,
    "enumeration": suite_enumeration,
    "mpc": suite_mpc,
}


def run_suite(name: str, seed: int = 0, **knobs) -> SuiteResult:
    if name not in SUITES:
        raise InputError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    return SUITES[name](seed, **knobs)
