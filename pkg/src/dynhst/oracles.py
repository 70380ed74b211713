"""Brute-force references used to cross-check the maintained structures.

Nothing here reuses the main implementations' distance, enumeration or label
routines: tree distances are explicit edge-weight sums along parent pointers,
labels come from a pairwise point-versus-bucket scan, and cell enumeration
walks the ball's bounding box.
"""

from __future__ import annotations

import itertools
import math
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .embedding import Label, LabelTable
from .geometry import InputError, LevelSchedule, PointSet, Rng, draw_priority
from .grid_hash import GridHash
from .hst import HstStore


def tree_metric(store: HstStore) -> Callable[[int, int], float]:
    """dist_T on active points as a sum of edge weights (child level i weighs 2^(m-i))."""
    m = store.m

    def up(p: int) -> list[int]:
        chain, v = [], store.leaf_of(p)
        while v != -1:
            chain.append(v)
            v = store.parent(v)
        return chain

    def metric(p: int, q: int) -> float:
        a, b = up(p), up(q)
        common = set(a) & set(b)
        total = 0.0
        for chain in (a, b):
            for v in chain:
                if v in common:
                    break
                total += 2.0 ** (m - store.level(v))
        return total

    return metric


def exhaustive_labels(points: PointSet, schedule: LevelSchedule, grid: GridHash, rng: Rng) -> LabelTable:
    """Labels by scanning every (point, other point's bucket) pair per level."""
    n = len(points)
    if n > 512:
        raise InputError("exhaustive_labels is limited to 512 points")
    X = points.coords
    ids = [int(i) for i in points.ids]
    keys = [(draw_priority(i, rng), i) for i in ids]
    d = X.shape[1]
    labels: dict[int, list[Label]] = {i: [] for i in ids}
    for level in range(1, schedule.m + 1):
        side = schedule.tau[level - 1] / math.sqrt(d)
        shift = np.array(grid.shift(level))
        r = schedule.r[level - 1]
        cell = np.floor((X - shift) / side)
        lo = shift + cell * side
        hi = lo + side
        for a in range(n):
            gap = X[a] - np.clip(X[a], lo, hi)
            near = (gap * gap).sum(axis=1) <= r * r
            near |= (cell == cell[a]).all(axis=1)
            best = min(keys[b] for b in np.flatnonzero(near))
            labels[ids[a]].append(Label(*best))
    return LabelTable(schedule.m, {i: tuple(v) for i, v in labels.items()})


def bbox_ball_cells(grid: GridHash, level: int, center: Sequence[float], radius: float) -> set[tuple]:
    """Cells meeting the closed ball, by testing every cell of its bounding box."""
    side = grid.side(level)
    shift = grid.shift(level)
    ranges = [range(math.floor((c - radius - s) / side), math.floor((c + radius - s) / side) + 1)
              for c, s in zip(center, shift)]
    own = tuple(math.floor((c - s) / side) for c, s in zip(center, shift))
    out = {own}
    for cell in itertools.product(*ranges):
        gap2 = 0.0
        for c, s, k in zip(center, shift, cell):
            lo = s + k * side
            nearest = min(max(c, lo), lo + side)
            gap2 += (c - nearest) ** 2
        if gap2 <= radius * radius:
            out.add(cell)
    return out


def brute_kmedian(store: HstStore, k: int) -> float:
    """Optimal tree k-median cost over all k-subsets of active points."""
    pts = store.active_points()
    if len(pts) > 12 or k > 4:
        raise InputError("brute_kmedian is limited to n <= 12, k <= 4")
    if k >= len(pts):
        return 0.0
    dist = tree_metric(store)
    D = {(p, q): dist(p, q) for p in pts for q in pts}
    return min(sum(min(D[p, c] for c in cs) for p in pts) for cs in itertools.combinations(pts, k))


def hungarian_tree(store: HstStore, A: Sequence[int], B: Sequence[int]) -> float:
    if len(A) != len(B):
        raise InputError("|A| must equal |B|")
    if not A:
        return 0.0
    dist = tree_metric(store)
    C = np.array([[dist(a, b) for b in B] for a in A])
    rows, cols = linear_sum_assignment(C)
    return float(C[rows, cols].sum())


def min_cost_flow(n: int, edges: list[tuple[int, int, int, float]], source: int, sink: int,
                  demand: int) -> float:
    """Successive shortest paths (Bellman-Ford) sending ``demand`` units."""
    graph: list[list[int]] = [[] for _ in range(n)]
    to, cap, cost = [], [], []
    for u, v, c, w in edges:
        for a, b, cc, ww in ((u, v, c, w), (v, u, 0, -w)):
            graph[a].append(len(to))
            to.append(b)
            cap.append(cc)
            cost.append(ww)
    total, sent = 0.0, 0
    while sent < demand:
        dist = [math.inf] * n
        prev = [-1] * n
        dist[source] = 0.0
        for _ in range(n):
            changed = False
            for u in range(n):
                if dist[u] == math.inf:
                    continue
                for e in graph[u]:
                    if cap[e] > 0 and dist[u] + cost[e] < dist[to[e]]:
                        dist[to[e]] = dist[u] + cost[e]
                        prev[to[e]] = e
                        changed = True
            if not changed:
                break
        if dist[sink] == math.inf:
            raise InputError("demand cannot be routed")
        push, v = demand - sent, sink
        while v != source:
            e = prev[v]
            push = min(push, cap[e])
            v = to[e ^ 1]
        v = sink
        while v != source:
            e = prev[v]
            cap[e] -= push
            cap[e ^ 1] += push
            v = to[e ^ 1]
        sent += push
        total += push * dist[sink]
    return total


def mincost_transport(store: HstStore, weights: dict[int, int]) -> float:
    """Optimal transport cost under dist_T; positive weights supply, negative demand."""
    if sum(weights.values()) != 0:
        raise InputError("weights must sum to zero")
    if sum(abs(w) for w in weights.values()) > 200:
        raise InputError("mincost_transport is limited to total |w| <= 200")
    sup = [p for p, w in weights.items() if w > 0]
    dem = [p for p, w in weights.items() if w < 0]
    if not sup:
        return 0.0
    dist = tree_metric(store)
    src, snk = 0, 1 + len(sup) + len(dem)
    edges = [(src, 1 + i, weights[a], 0.0) for i, a in enumerate(sup)]
    edges += [(1 + len(sup) + j, snk, -weights[b], 0.0) for j, b in enumerate(dem)]
    for i, a in enumerate(sup):
        for j, b in enumerate(dem):
            edges.append((1 + i, 1 + len(sup) + j, weights[a], dist(a, b)))
    return min_cost_flow(snk + 1, edges, src, snk, sum(weights[a] for a in sup))


def brute_perfect_matching(store: HstStore, points: Sequence[int] | None = None) -> float:
    """Minimum-cost perfect matching by enumerating all (n-1)!! pairings."""
    pts = sorted(store.active_points() if points is None else points)
    if len(pts) % 2 or len(pts) > 10:
        raise InputError("brute_perfect_matching needs an even n <= 10")
    dist = tree_metric(store)

    def best(rest: tuple[int, ...]) -> float:
        if not rest:
            return 0.0
        a, others = rest[0], rest[1:]
        return min(dist(a, b) + best(others[:i] + others[i + 1:]) for i, b in enumerate(others))

    return best(tuple(pts))


def prefix_minima_stats(n: int, trials: int, rng: Rng, chunk: int = 10_000) -> tuple[float, float]:
    """Mean and standard error of the number of strict running minima of n uniforms."""
    if n < 1 or trials < 1:
        raise InputError("n and trials must be >= 1")
    gen = rng.child("prefix-minima").generator()
    counts = []
    done = 0
    while done < trials:
        t = min(chunk, trials - done)
        S = gen.random((t, n))
        running = np.minimum.accumulate(S, axis=1)
        counts.append((S == running).sum(axis=1))
        done += t
    c = np.concatenate(counts).astype(np.float64)
    se = float(c.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return float(c.mean()), se


def harmonic(n: int) -> float:
    return math.fsum(1.0 / i for i in range(1, n + 1))
