"""Synthetic inputs: uniform point clouds and random update traces."""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from .geometry import InputError, Point, Rng
from .traces import Op


def uniform_points(n: int, d: int, side: float, rng: Rng, min_sep: float = 0.0,
                   start_id: int = 0) -> list[Point]:
    """n points uniform in [0, side]^d, pairwise farther apart than ``min_sep``."""
    gen = rng.child("uniform").generator()
    if min_sep <= 0:
        X = gen.uniform(0.0, side, size=(n, d))
        return [Point(start_id + i, tuple(x)) for i, x in enumerate(X)]
    kept: list[np.ndarray] = []
    tries = 0
    while len(kept) < n:
        tries += 1
        if tries > 200:
            raise InputError("could not place points with the requested separation")
        cand = gen.uniform(0.0, side, size=(2 * (n - len(kept)) + 8, d))
        for x in cand:
            if kept:
                tree = cKDTree(np.array(kept))
                if tree.query(x)[0] <= min_sep:
                    continue
            kept.append(x)
            if len(kept) == n:
                break
    return [Point(start_id + i, tuple(x)) for i, x in enumerate(kept)]


def random_trace(updates: int, d: int, side: float, rng: Rng, delete_prob: float = 0.0,
                 start_id: int = 0) -> list[Op]:
    """Random inserts (uniform in the box) and deletes of random live points."""
    gen = rng.child("trace").generator()
    live: list[int] = []
    ops: list[Op] = []
    nid = start_id
    for t in range(updates):
        if live and gen.random() < delete_prob:
            pid = live.pop(int(gen.integers(len(live))))
            ops.append(Op("D", t + 1, (pid,)))
        else:
            x = tuple(float(v) for v in gen.uniform(0.0, side, size=d))
            ops.append(Op("I", t + 1, (nid,), (x,)))
            live.append(nid)
            nid += 1
    return ops
