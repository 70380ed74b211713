"""Maintain the embedding under insertions and deletions.

Each update emits a short list of tree events: Type1 retires a leaf, and Type2
hangs a point under a new path. A consumer that replays only these events
holds the same tree as the embedding, which is what the applications rely on.
"""

from __future__ import annotations

import math
from collections import Counter

from dynhst.datasets import random_trace
from dynhst.dynamic import DynamicConfig, DynamicEmbedding
from dynhst.embedding import compute_labels
from dynhst.geometry import Rng
from dynhst.hst import HstStore

cfg = DynamicConfig(dim=3, delta_max=32 * math.sqrt(3), gamma=2.0, seed=5, rebuild_floor=32)
emb = DynamicEmbedding(cfg)
emb.store.subscribe("demo")
mirror = HstStore(emb.m)

trace = random_trace(400, 3, 32.0, Rng(5), delete_prob=0.3)
for op in trace[:3]:
    events = emb.insert(op.points()[0]) if op.kind == "I" else emb.delete(op.ids[0])
    print(f"{op.kind} {op.ids[0]}: " + ", ".join(e.format() for e in events))

for op in trace[3:]:
    if op.kind == "I":
        emb.insert(op.points()[0])
    else:
        emb.delete(op.ids[0])

for e in emb.store.drain("demo"):
    mirror.apply(e)

stats = emb.stats
print(f"\n{stats.updates} updates ({stats.inserts} inserts, {stats.deletes} deletes), "
      f"{stats.rebuilds} rebuilds, epoch {emb.epoch}")
print(f"events per update: mean {stats.mean_events:.2f}, histogram {dict(Counter(stats.events_per_update).most_common(6))}")
print(f"label changes by level: {dict(sorted(stats.label_changes.items()))}")

static = compute_labels(emb.epoch_point_set(), emb.schedule, emb.grid, emb.priority_rng)
live = sorted(emb.active)
print(f"\nlabels equal a from-scratch computation: {all(static[p] == emb.label_table()[p] for p in live)}")
print(f"replayed tree equals the live tree: {mirror.label_table() == emb.store.label_table()}")
