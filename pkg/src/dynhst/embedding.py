"""Static label computation and label-based tree distances."""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Iterable, NamedTuple

import numpy as np
from scipy.spatial import cKDTree

from .geometry import InputError, LevelSchedule, PointSet, Rng, draw_priority, make_schedule
from .grid_hash import GridHash


class Label(NamedTuple):
    """A level label: the minimum (priority, id) found in the ball's buckets."""

    priority: int
    owner: int


def lca_distance(m: int, level: int) -> float:
    """Tree distance of two leaves whose first differing label is at ``level``.

    ``level`` ranges over 1..m+1; m+1 means all labels agree (distance 0).
    """
    return 2.0 * (2 ** (m - level + 1) - 1)


class LabelTable:
    """Per point, the label vector (level 1 first). Defines the implicit HST."""

    def __init__(self, m: int, labels: dict[int, tuple[Label, ...]]):
        self.m = m
        self.labels = labels

    def __len__(self) -> int:
        return len(self.labels)

    def __getitem__(self, pid: int) -> tuple[Label, ...]:
        try:
            return self.labels[pid]
        except KeyError:
            raise InputError(f"unknown point id {pid}") from None

    def __eq__(self, other) -> bool:
        return isinstance(other, LabelTable) and self.m == other.m and self.labels == other.labels

    def ids(self) -> list[int]:
        return sorted(self.labels)

    def level_of_separation(self, p: int, q: int) -> int:
        lp, lq = self[p], self[q]
        for i, (a, b) in enumerate(zip(lp, lq)):
            if a != b:
                return i + 1
        return self.m + 1

    def tree_distance(self, p: int, q: int) -> float:
        return lca_distance(self.m, self.level_of_separation(p, q))

    def diff(self, other: "LabelTable") -> list[int]:
        """Ids whose label vectors differ (or exist in only one table)."""
        ids = set(self.labels) | set(other.labels)
        return sorted(i for i in ids if self.labels.get(i) != other.labels.get(i))


def priority_ranks(ids: np.ndarray, rng: Rng) -> tuple[list[int], np.ndarray]:
    """Priorities for ``ids`` and each point's rank in (priority, id) order."""
    prios = [draw_priority(int(i), rng) for i in ids]
    order = sorted(range(len(ids)), key=lambda k: (prios[k], int(ids[k])))
    rank = np.empty(len(ids), dtype=np.int64)
    rank[order] = np.arange(len(ids))
    return prios, rank


def compute_labels(points: PointSet, schedule: LevelSchedule, grid: GridHash, rng: Rng,
                   method: str = "kdtree", stats: dict | None = None, threads: int = 1) -> LabelTable:
    """Labels of every point at every level.

    ``rng`` is the priority stream. ``method="enumerate"`` walks every point's
    ball buckets with the grid's DFS; ``method="kdtree"`` only inspects
    non-empty cells near each point (same result, far fewer cell visits in
    high dimension). ``stats["pairs"]`` accumulates the (point, cell) pairs
    tested. ``threads > 1`` computes the levels concurrently.
    """
    n = len(points)
    if n == 0:
        return LabelTable(schedule.m, {})
    if points.dim != grid.dim:
        raise InputError("point dimension does not match the grid")
    ids = points.ids
    prios, rank = priority_ranks(ids, rng)
    by_rank = np.empty(n, dtype=np.int64)
    by_rank[rank] = np.arange(n)
    if method not in ("kdtree", "enumerate"):
        raise InputError(f"unknown method {method!r}")
    if threads < 1:
        raise InputError("threads must be >= 1")

    def one(level: int) -> tuple[np.ndarray, int]:
        local: dict = {}
        if method == "kdtree":
            return _level_ranks_kdtree(points.coords, rank, grid, level, local), local.get("pairs", 0)
        return _level_ranks_enumerate(points.coords, rank, grid, level), 0

    levels = range(1, schedule.m + 1)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            done = list(pool.map(one, levels))
    else:
        done = [one(level) for level in levels]
    if stats is not None:
        stats["pairs"] = stats.get("pairs", 0) + sum(c for _, c in done)
    ranks = np.stack([col for col, _ in done], axis=1)
    labels = {}
    for k in range(n):
        vec = []
        for rk in ranks[k]:
            j = by_rank[rk]
            vec.append(Label(prios[j], int(ids[j])))
        labels[int(ids[k])] = tuple(vec)
    return LabelTable(schedule.m, labels)


def _level_ranks_enumerate(coords, rank, grid: GridHash, level: int) -> np.ndarray:
    cells = grid.cells_of(level, coords)
    cell_min: dict = {}
    for c, rk in zip(map(tuple, cells.tolist()), rank.tolist()):
        if rk < cell_min.get(c, math.inf):
            cell_min[c] = rk
    radius = grid.radius(level)
    out = np.empty(len(coords), dtype=np.int64)
    for k, x in enumerate(coords.tolist()):
        found, _ = grid.ball_cells(level, x, radius)
        out[k] = min(cell_min[c] for c in found if c in cell_min)
    return out


def _level_ranks_kdtree(coords, rank, grid: GridHash, level: int, stats: dict | None = None) -> np.ndarray:
    n = len(coords)
    cells = grid.cells_of(level, coords)
    uniq, inv = np.unique(cells, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    cell_min = np.full(len(uniq), np.iinfo(np.int64).max)
    np.minimum.at(cell_min, inv, rank)
    side = grid.side(level)
    radius = grid.radius(level)
    best = cell_min[inv].copy()
    if len(uniq) > 1:
        centers = np.asarray(grid.shift(level)) + (uniq + 0.5) * side
        # any point of a closed cell lies within tau/2 of its centre
        reach = (radius + grid.schedule.tau[level - 1] / 2) * (1 + 1e-9) + 1e-12
        pairs = cKDTree(coords).sparse_distance_matrix(cKDTree(centers), reach, output_type="ndarray")
        pi = pairs["i"].astype(np.int64)
        ci = pairs["j"].astype(np.int64)
        ok = grid.cell_sqdist_many(level, coords[pi], uniq[ci]) <= radius * radius
        np.minimum.at(best, pi[ok], cell_min[ci[ok]])
        if stats is not None:
            stats["pairs"] = stats.get("pairs", 0) + len(pi)
    assert len(best) == n
    return best


def rank_matrix(table: LabelTable, ids: Iterable[int]) -> np.ndarray:
    """Label vectors as integers so pairwise comparisons vectorize."""
    index: dict[Label, int] = {}
    rows = []
    for pid in ids:
        rows.append([index.setdefault(lab, len(index)) for lab in table[pid]])
    return np.array(rows, dtype=np.int64).reshape(-1, table.m)


def pairwise_tree_distances(table: LabelTable, ids, i: np.ndarray, j: np.ndarray) -> np.ndarray:
    m = table.m
    R = rank_matrix(table, ids)
    differ = R[i] != R[j]
    any_diff = differ.any(axis=1)
    first = np.where(any_diff, differ.argmax(axis=1) + 1, m + 1)
    return 2.0 * (np.exp2(m - first + 1) - 1)


@dataclass
class DistortionReport:
    n: int
    d: int
    gamma: float
    seed_count: int
    min_ratio: float
    mean_ratio: float
    max_ratio: float
    violations: int

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def evaluate_distortion(points: PointSet, delta_max: float, gamma: float, trials: int, rng: Rng,
                        max_pairs: int = 200_000, method: str = "kdtree") -> DistortionReport:
    """Expansion statistics over ``trials`` independent embeddings.

    Each trial draws its own beta, grid shifts and priorities. ``violations``
    counts (pair, trial) instances with tree distance below the Euclidean one.
    """
    n = len(points)
    if n < 2:
        raise InputError("need at least two points")
    i, j = np.triu_indices(n, 1)
    if len(i) > max_pairs:
        pick = rng.child("pairs").generator().choice(len(i), size=max_pairs, replace=False)
        i, j = i[pick], j[pick]
    diff = points.coords[i] - points.coords[j]
    euclid = np.sqrt((diff * diff).sum(axis=1))
    keep = euclid > 0
    i, j, euclid = i[keep], j[keep], euclid[keep]
    ids = [int(x) for x in points.ids]
    lo, hi, total, count, violations = math.inf, 0.0, 0.0, 0, 0
    for t in range(trials):
        trial_rng = rng.child(f"trial-{t}")
        schedule = make_schedule(delta_max, gamma, trial_rng)
        grid = GridHash.sample(schedule, points.dim, trial_rng)
        table = compute_labels(points, schedule, grid, trial_rng.child("priority"), method=method)
        tree = pairwise_tree_distances(table, ids, i, j)
        ratio = tree / euclid
        violations += int((tree < euclid).sum())
        lo = min(lo, float(ratio.min()))
        hi = max(hi, float(ratio.max()))
        total += float(ratio.sum())
        count += len(ratio)
    if count == 0:
        lo = 0.0
    return DistortionReport(n=n, d=points.dim, gamma=float(gamma), seed_count=trials,
                            min_ratio=lo, mean_ratio=total / count if count else 0.0, max_ratio=hi,
                            violations=violations)
