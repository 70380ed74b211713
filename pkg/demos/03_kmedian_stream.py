"""Keep k centers up to date while points arrive and leave.

The tree solution is exact for the tree metric. In the plane its centers land
in the right clusters; the demo compares their Euclidean cost with a swap-based
local search run from scratch at every checkpoint.
"""

from __future__ import annotations

import math

import numpy as np

from dynhst.dynamic import DynamicConfig, DynamicEmbedding
from dynhst.geometry import Point, dist
from dynhst.kmedian import TreeKMedian

K = 3
gen = np.random.default_rng(3)
blobs = np.array([[10.0, 10.0], [50.0, 20.0], [30.0, 55.0]])

emb = DynamicEmbedding(DynamicConfig(dim=2, delta_max=64 * math.sqrt(2), seed=3, rebuild_floor=32))
km = TreeKMedian(emb.store, k=K)
coords: dict[int, np.ndarray] = {}


def local_search(ids: list[int]) -> float:
    """Best of a few discrete k-median swaps, used as a Euclidean reference."""
    X = np.array([coords[i] for i in ids])
    D = np.sqrt(((X[:, None] - X[None]) ** 2).sum(-1))
    best = math.inf
    for _ in range(5):
        cur = list(gen.choice(len(ids), size=K, replace=False))
        improved = True
        while improved:
            improved = False
            base = D[:, cur].min(1).sum()
            for a in range(K):
                for b in range(len(ids)):
                    trial = cur[:a] + [b] + cur[a + 1:]
                    c = D[:, trial].min(1).sum()
                    if c < base - 1e-9:
                        cur, base, improved = trial, c, True
        best = min(best, base)
    return best


nid = 0
for step in range(1, 241):
    if coords and gen.random() < 0.25:
        victim = int(gen.choice(sorted(coords)))
        emb.delete(victim)
        del coords[victim]
    else:
        x = blobs[gen.integers(3)] + gen.normal(scale=4.0, size=2)
        coords[nid] = x
        emb.insert(Point(nid, tuple(x)))
        nid += 1
    km.sync()
    if step % 60 == 0:
        centers = km.centers()
        ids = sorted(coords)
        euclid = sum(min(dist(coords[p], coords[c]) for c in centers) for p in ids)
        print(f"step {step}: n={len(ids)} centers at "
              + ", ".join(f"({coords[c][0]:.0f},{coords[c][1]:.0f})" for c in centers)
              + f"  tree cost {km.solution_cost():.0f}  euclidean cost {euclid:.0f}"
              + f"  local search {local_search(ids):.0f}")

fresh = TreeKMedian(emb.store, k=K, consumer="check")
print(f"\nmaintained cost equals a from-scratch tree solution: {fresh.solution_cost() == km.solution_cost()}")
