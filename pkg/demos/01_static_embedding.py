"""Embed a small point cloud into a 2-HST and look at the tree it induces.

Every point gets one label per level. Two points share the subtree rooted at
level L exactly when their first L labels agree, so the tree distance is read
off the length of the common label prefix.
"""

from __future__ import annotations

import math

from dynhst.embedding import compute_labels, evaluate_distortion, lca_distance
from dynhst.geometry import PointSet, Rng, dist, make_schedule
from dynhst.grid_hash import GridHash

coords = [(0.5, 0.5), (1.6, 1.4), (6.0, 6.2), (7.0, 5.4), (3.0, 7.5), (7.8, 0.4)]
pts = PointSet.from_array(coords)
rng = Rng(2024)
schedule = make_schedule(8 * math.sqrt(2), gamma=2.0, rng=rng)
grid = GridHash.sample(schedule, 2, rng)
table = compute_labels(pts, schedule, grid, rng.child("priority"))

print(f"levels m={schedule.m}, beta={schedule.beta:.3f}")
print("owner of each label, level 1 .. m:")
for p in table.ids():
    print(f"  point {p} at {coords[p]}: {[lab.owner for lab in table[p]]}")

print("\npair      euclid   tree   (levels shared)")
for p in range(len(coords)):
    for q in range(p + 1, len(coords)):
        level = table.level_of_separation(p, q)
        shared = level - 1
        print(f"  {p}-{q}   {dist(coords[p], coords[q]):6.2f}  {table.tree_distance(p, q):5.0f}   ({shared})")
        assert lca_distance(schedule.m, level) == table.tree_distance(p, q)

# Over fresh randomness the tree never shrinks a distance of at least 1 (the
# smallest scale of the hierarchy), and stretches it by a modest factor on average.
rep = evaluate_distortion(pts, 8 * math.sqrt(2), 2.0, trials=200, rng=Rng(7))
print(f"\n200 embeddings: min ratio {rep.min_ratio:.2f}, mean {rep.mean_ratio:.2f}, "
      f"max {rep.max_ratio:.2f}, violations {rep.violations}")
