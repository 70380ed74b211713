"""Compute the labels on a simulated cluster of small machines.

Points are spread over ceil(n/s) machines. Each level needs the minimum
priority among buckets near every point, which the simulation gets from a
sample sort keyed by bucket followed by a few exchange rounds. The result is
compared with the sequential labels, and the round log shows the cost.
"""

from __future__ import annotations

import math

import numpy as np

from dynhst.embedding import compute_labels
from dynhst.geometry import PointSet, Rng, make_schedule
from dynhst.grid_hash import GridHash
from dynhst.mpc import run_embedding_mpc

d = 3
rng = Rng(21)
pts = PointSet.from_array(np.random.default_rng(21).uniform(0, 100, size=(3000, d)))
schedule = make_schedule(100 * math.sqrt(d), 2.0, rng)
grid = GridHash.sample(schedule, d, rng)
sequential = compute_labels(pts, schedule, grid, rng.child("priority"))

print("local space  machines  rounds  bound  max load  total space  identical")
for s in (3000, 512, 128, 32):
    table, log = run_embedding_mpc(pts, schedule, grid, s, rng.child("priority"))
    machines = math.ceil(len(pts) / s)
    bound = 8 * math.log(len(pts)) / math.log(s)
    print(f"{s:11d}  {machines:8d}  {log.rounds:6d}  {bound:5.1f}  {log.max_load:8d}  "
          f"{log.total_space:11d}  {table == sequential}")
    if log.per_primitive and s == 32:
        print("\nrounds by primitive at s=32:", dict(log.per_primitive))
