"""Tree-based matching and transport between two point clouds.

Red points sit in a lower band and blue points in an upper band. The matching pairs
each red with a blue; the transport instance moves integer supply from the
red side to the blue side. Both costs are exact on the tree and are checked
against assignment and flow solvers.
"""

from __future__ import annotations

import math

import numpy as np

from dynhst.dynamic import DynamicConfig, DynamicEmbedding
from dynhst.geometry import Point
from dynhst.matching import BLUE, RED, TreeMatching
from dynhst.oracles import hungarian_tree, mincost_transport
from dynhst.transport import TreeTransport

gen = np.random.default_rng(11)
emb = DynamicEmbedding(DynamicConfig(dim=2, delta_max=32 * math.sqrt(2), seed=11))
bm = TreeMatching(emb.store, "bipartite")
tr = TreeTransport(emb.store)

reds, blues = [], []
for i in range(6):
    r, b = 2 * i, 2 * i + 1
    emb.insert(Point(r, tuple(gen.uniform(0, 12, 2) + [4 * i, 0])))
    emb.insert(Point(b, tuple(gen.uniform(0, 12, 2) + [4 * i - 3, 14])))
    bm.bm_insert(r, RED)
    bm.bm_insert(b, BLUE)
    reds.append(r)
    blues.append(b)
    bm.sync()
    print(f"{i + 1} pairs: tree matching cost {bm.matching_cost():4.0f}, "
          f"optimum {hungarian_tree(emb.store, reds, blues):4.0f}")

print("\npartners:", {r: bm.partner(r) for r in reds})

tr.sync()
weights = {}
for r, b in zip(reds, blues):
    w = int(gen.integers(1, 6))
    weights[r], weights[b] = w, -w
    tr.set_weight(r, w)
    tr.set_weight(b, -w)
print(f"\ntransport cost {tr.transport_cost():.0f}, "
      f"min-cost flow {mincost_transport(emb.store, weights):.0f}")

# Shifting one unit of supply changes only the imbalance on two leaf paths.
weights[reds[0]] -= 1
weights[reds[1]] += 1
tr.set_weight(reds[0], weights[reds[0]])
tr.set_weight(reds[1], weights[reds[1]])
print(f"after moving one unit: {tr.transport_cost():.0f}, "
      f"min-cost flow {mincost_transport(emb.store, weights):.0f}")
