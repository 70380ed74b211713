"""Fully dynamic maintenance of the label table and its HST.

Insertions update labels incrementally: a new point joins one bucket per
level, and every registered point whose query ball covers that bucket sees
the new bucket minimum. Deletions only deactivate a leaf; the deleted point
keeps contributing to bucket minima until the next rebuild, which redraws all
randomness and reinserts the active points.

Two interchangeable registries answer "which registered points cover this
bucket" and "which non-empty buckets does this ball meet":

* ``explicit`` enumerates each point's ball buckets with the grid DFS and
  keeps a reverse index bucket -> points (cheap for small d).
* ``neighbor`` keeps the centres of non-empty buckets and the registered
  points in radius-search indexes and tests the candidates exactly. The number
  of ball buckets grows exponentially with d while the number of non-empty
  ones near a point is bounded by the local density, so this is the default.

Both use the same exact cell/ball test as the static labels.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .embedding import Label, LabelTable, compute_labels
from .geometry import InputError, JLMap, LevelSchedule, Point, PointSet, Rng, draw_priority, make_schedule
from .grid_hash import GridHash
from .hst import Event, HstStore, Type1


@dataclass
class DynamicConfig:
    dim: int
    delta_max: float
    gamma: float = 2.0
    seed: int = 0
    jl_dim: int = 0
    rebuild_floor: int = 64
    registry: str = "neighbor"
    validate: bool = False
    compact_on_rebuild: bool = True

    def __post_init__(self):
        if self.dim < 1:
            raise InputError("dim must be >= 1")
        if self.gamma < 1:
            raise InputError("gamma must be >= 1")
        if self.delta_max < 1:
            raise InputError("delta_max must be >= 1")
        if self.jl_dim < 0 or self.rebuild_floor < 1:
            raise InputError("jl_dim must be >= 0 and rebuild_floor >= 1")
        if self.registry not in ("neighbor", "explicit"):
            raise InputError(f"unknown registry {self.registry!r}")

    @property
    def embed_dim(self) -> int:
        return self.jl_dim or self.dim


@dataclass
class RecourseStats:
    updates: int = 0
    inserts: int = 0
    deletes: int = 0
    rebuilds: int = 0
    type1: int = 0
    type2: int = 0
    rebuild_events: int = 0
    label_changes: Counter = field(default_factory=Counter)
    bucket_min_changes: int = 0
    cells_examined: int = 0
    points_visited: int = 0
    events_per_update: list[int] = field(default_factory=list)

    @property
    def events(self) -> int:
        return self.type1 + self.type2

    @property
    def mean_events(self) -> float:
        return self.events / self.updates if self.updates else 0.0

    @property
    def operations(self) -> int:
        return self.cells_examined + self.points_visited

    def histogram(self) -> dict[int, int]:
        return dict(sorted(Counter(self.events_per_update).items()))

    def as_dict(self) -> dict:
        return {
            "updates": self.updates,
            "inserts": self.inserts,
            "deletes": self.deletes,
            "rebuilds": self.rebuilds,
            "type1": self.type1,
            "type2": self.type2,
            "rebuild_events": self.rebuild_events,
            "mean_events_per_update": self.mean_events,
            "label_changes_per_level": {str(k): v for k, v in sorted(self.label_changes.items())},
            "bucket_min_changes": self.bucket_min_changes,
            "operations": self.operations,
            "events_histogram": {str(k): v for k, v in self.histogram().items()},
        }


class _LogIndex:
    """Insert-only radius-search index: a small scan buffer plus k-d trees
    whose sizes shrink geometrically (merged like a binary counter)."""

    BUFFER = 32

    def __init__(self, dim: int, width: int):
        self.dim = dim
        self.width = width
        self._bx: list = []
        self._bp: list = []
        self._chunks: list[tuple[cKDTree, np.ndarray]] = []

    def __len__(self) -> int:
        return len(self._bx) + sum(len(p) for _, p in self._chunks)

    def add(self, x, payload) -> None:
        self._bx.append(x)
        self._bp.append(payload)
        if len(self._bx) >= self.BUFFER:
            self._push(np.array(self._bx, dtype=np.float64), np.array(self._bp, dtype=np.int64))
            self._bx, self._bp = [], []

    def extend(self, X: np.ndarray, P: np.ndarray) -> None:
        if len(X):
            self._push(X, P)

    def _push(self, X: np.ndarray, P: np.ndarray) -> None:
        while self._chunks and len(self._chunks[-1][1]) <= len(X):
            tree, Q = self._chunks.pop()
            X = np.concatenate([tree.data, X])
            P = np.concatenate([Q, P])
        self._chunks.append((cKDTree(X), P.reshape(len(X), self.width)))

    def query(self, x, radius: float) -> tuple[np.ndarray, np.ndarray]:
        """Coordinates and payload rows of all entries within ``radius`` of ``x``."""
        xs, ps = [], []
        if self._bx:
            B = np.array(self._bx, dtype=np.float64)
            diff = B - np.asarray(x)
            hit = (diff * diff).sum(axis=1) <= radius * radius
            if hit.any():
                xs.append(B[hit])
                ps.append(np.array(self._bp, dtype=np.int64).reshape(len(B), self.width)[hit])
        for tree, P in self._chunks:
            idx = tree.query_ball_point(x, radius)
            if idx:
                xs.append(tree.data[idx])
                ps.append(P[idx])
        if not xs:
            return np.zeros((0, self.dim)), np.zeros((0, self.width), dtype=np.int64)
        return np.concatenate(xs), np.concatenate(ps)


class _Level:
    """Bucket minima and registrations for one level of one epoch."""

    def __init__(self, level: int, grid: GridHash, registry: str):
        self.level = level
        self.grid = grid
        self.dim = grid.dim
        self.side = grid.side(level)
        self.radius = grid.radius(level)
        self.r2 = self.radius * self.radius
        self.shift = np.array(grid.shift(level))
        self.registry = registry
        # a closed cell lies within half its diagonal (tau/2) of its centre
        self.reach = (self.radius + grid.schedule.tau[level - 1] / 2) * (1 + 1e-9) + 1e-12
        self.cell_min: dict[tuple, Label] = {}
        self.members: dict[tuple, set[int]] = {}
        self.point_cell: dict[int, tuple] = {}
        self.registered: set[int] = set()
        # neighbor registry
        self.cell_index = _LogIndex(self.dim, self.dim)
        self.point_index = _LogIndex(self.dim, 1)
        # explicit registry
        self.reverse: dict[tuple, set[int]] = {}
        self.point_keys: dict[int, list[tuple]] = {}

    def _center(self, cell) -> np.ndarray:
        return self.shift + (np.asarray(cell, dtype=np.float64) + 0.5) * self.side

    def add_to_bucket(self, pid: int, key: Label, x, index: bool = True) -> tuple[tuple, bool]:
        cell = self.grid.cell_of(self.level, x)
        self.point_cell[pid] = cell
        mem = self.members.get(cell)
        if mem is None:
            self.members[cell] = {pid}
            self.cell_min[cell] = key
            if index and self.registry == "neighbor":
                self.cell_index.add(self._center(cell), cell)
            return cell, True
        mem.add(pid)
        if key < self.cell_min[cell]:
            self.cell_min[cell] = key
            return cell, True
        return cell, False

    def covering(self, cell: tuple, stats: RecourseStats) -> list[int]:
        """Registered points whose query ball meets ``cell``."""
        if self.registry == "explicit":
            found = self.reverse.get(cell, ())
            stats.points_visited += len(found)
            return list(found)
        X, P = self.point_index.query(self._center(cell), self.reach)
        stats.points_visited += len(P)
        if not len(P):
            return []
        cells = np.broadcast_to(np.asarray(cell, dtype=np.int64), (len(P), self.dim))
        ok = self.grid.cell_sqdist_many(self.level, X, cells) <= self.r2
        ok |= (self.grid.cells_of(self.level, X) == cells).all(axis=1)
        reg = self.registered
        return [q for q in P[ok, 0].tolist() if q in reg]

    def register(self, pid: int, x, index: bool = True) -> None:
        self.registered.add(pid)
        if self.registry == "explicit":
            cells, _ = self.grid.ball_cells(self.level, x, self.radius)
            self.point_keys[pid] = cells
            for c in cells:
                self.reverse.setdefault(c, set()).add(pid)
        elif index:
            self.point_index.add(x, (pid,))

    def finish_bulk(self, ids: list[int], X: np.ndarray) -> None:
        """Index points and buckets added with ``index=False`` in one chunk each."""
        if self.registry != "neighbor" or not ids:
            return
        self.point_index.extend(X, np.asarray(ids, dtype=np.int64))
        cells = np.array(list(self.cell_min), dtype=np.int64).reshape(-1, self.dim)
        self.cell_index.extend(self.shift + (cells + 0.5) * self.side, cells)

    def unregister(self, pid: int) -> None:
        self.registered.discard(pid)
        if self.registry == "explicit":
            for c in self.point_keys.pop(pid, ()):
                s = self.reverse[c]
                s.discard(pid)
                if not s:
                    del self.reverse[c]

    def ball_min(self, pid: int, x, stats: RecourseStats) -> Label:
        """Minimum bucket label over non-empty buckets meeting B(x, r)."""
        best = self.cell_min[self.point_cell[pid]]
        if self.registry == "explicit":
            for c in self.point_keys[pid]:
                stats.cells_examined += 1
                lab = self.cell_min.get(c)
                if lab is not None and lab < best:
                    best = lab
            return best
        _, C = self.cell_index.query(x, self.reach)
        stats.cells_examined += len(C)
        if not len(C):
            return best
        xs = np.broadcast_to(np.asarray(x, dtype=np.float64), (len(C), self.dim))
        ok = self.grid.cell_sqdist_many(self.level, xs, C) <= self.r2
        cell_min = self.cell_min
        for c in map(tuple, C[ok].tolist()):
            lab = cell_min[c]
            if lab < best:
                best = lab
        return best


class DynamicEmbedding:
    """Maintains labels, buckets and the HST under insertions and deletions."""

    def __init__(self, config: DynamicConfig):
        self.config = config
        self.root_rng = Rng(config.seed)
        self.jl = JLMap.sample(config.dim, config.jl_dim, self.root_rng) if config.jl_dim else None
        self.m = make_schedule(config.delta_max, config.gamma, beta=0.25).m
        self.store = HstStore(self.m)
        self.stats = RecourseStats()
        self.epoch = -1
        self.original: dict[int, tuple[float, ...]] = {}
        self.coords: dict[int, tuple[float, ...]] = {}
        self.labels: dict[int, list[Label]] = {}
        self.keys: dict[int, Label] = {}
        self.active: set[int] = set()
        self.used_ids: set[int] = set()
        self.epoch_points: list[int] = []
        self.n0 = 0
        self.inserts_since_rebuild = 0
        self._start_epoch()

    # -- epoch randomness -------------------------------------------------------

    def _start_epoch(self) -> None:
        self.epoch += 1
        erng = self.root_rng.child(f"epoch-{self.epoch}")
        self.schedule: LevelSchedule = make_schedule(self.config.delta_max, self.config.gamma, erng)
        self.grid = GridHash.sample(self.schedule, self.config.embed_dim, erng)
        self.priority_rng = erng.child("priority")
        self.levels = [_Level(i, self.grid, self.config.registry) for i in range(1, self.m + 1)]
        self.labels = {}
        self.keys = {}
        self.epoch_points = []

    def manifest(self) -> dict:
        return {
            "seed": self.config.seed,
            "epoch": self.epoch,
            "m": self.m,
            "gamma": self.config.gamma,
            "beta": self.schedule.beta,
            "grid": self.grid.manifest(),
        }

    # -- updates -------------------------------------------------------------------

    def _embed(self, p: Point) -> tuple[float, ...]:
        if p.dim != self.config.dim:
            raise InputError(f"expected {self.config.dim} coordinates, got {p.dim}")
        if any(not math.isfinite(c) for c in p.coords):
            raise InputError("coordinates must be finite")
        if self.config.validate and any(c < 0 or c > self.config.delta_max for c in p.coords):
            raise InputError(f"point {p.id} lies outside [0, delta_max]")
        if self.jl is None:
            return p.coords
        return tuple(float(v) for v in self.jl.apply(p.coords))

    def _emit(self, event: Event, out: list[Event]) -> None:
        self.store.apply(event)
        out.append(event)
        if isinstance(event, Type1):
            self.stats.type1 += 1
        else:
            self.stats.type2 += 1

    def insert(self, p: Point) -> list[Event]:
        if p.id in self.used_ids:
            raise InputError(f"point id {p.id} was already used")
        x = self._embed(p)
        self.used_ids.add(p.id)
        self.original[p.id] = p.coords
        self.coords[p.id] = x
        self.active.add(p.id)
        self.stats.updates += 1
        self.stats.inserts += 1
        events: list[Event] = []
        changed = self._insert_labels(p.id, x)
        self._emit(self.store.prepare_insert(p.id, tuple(self.labels[p.id])), events)
        for q in sorted(changed):
            self._emit(Type1(self.store.leaf_of(q), q), events)
            self._emit(self.store.prepare_insert(q, tuple(self.labels[q])), events)
        self.inserts_since_rebuild += 1
        if self.inserts_since_rebuild >= max(self.n0, self.config.rebuild_floor):
            events.extend(self._rebuild())
        self.stats.events_per_update.append(len(events))
        return events

    def _insert_labels(self, pid: int, x) -> set[int]:
        key = Label(draw_priority(pid, self.priority_rng), pid)
        self.keys[pid] = key
        self.epoch_points.append(pid)
        vec: list[Label] = []
        changed: set[int] = set()
        for lv in self.levels:
            cell, new_min = lv.add_to_bucket(pid, key, x)
            if new_min:
                self.stats.bucket_min_changes += 1
                for q in lv.covering(cell, self.stats):
                    lab = self.labels[q]
                    if key < lab[lv.level - 1]:
                        lab[lv.level - 1] = key
                        changed.add(q)
                        self.stats.label_changes[lv.level] += 1
            lv.register(pid, x)
            vec.append(lv.ball_min(pid, x, self.stats))
        self.labels[pid] = vec
        return changed

    def delete(self, pid: int) -> list[Event]:
        if pid not in self.active:
            raise InputError(f"point {pid} is not active")
        self.active.discard(pid)
        for lv in self.levels:
            lv.unregister(pid)
        self.stats.updates += 1
        self.stats.deletes += 1
        events: list[Event] = []
        self._emit(Type1(self.store.leaf_of(pid), pid), events)
        self.stats.events_per_update.append(len(events))
        return events

    def rebuild(self) -> list[Event]:
        """Redraw beta, shifts and priorities; reinsert all active points."""
        return self._rebuild()

    def _rebuild(self) -> list[Event]:
        if self.config.compact_on_rebuild:
            self.store.compact()
        events: list[Event] = []
        ids = sorted(self.active)
        for q in ids:
            if self.store.has_point(q):
                self._emit(Type1(self.store.leaf_of(q), q), events)
        self._start_epoch()
        self._bulk_build(ids)
        for q in ids:
            self._emit(self.store.prepare_insert(q, tuple(self.labels[q])), events)
        self.n0 = len(ids)
        self.inserts_since_rebuild = 0
        self.stats.rebuilds += 1
        self.stats.rebuild_events += len(events)
        return events

    def bulk_load(self, points: list[Point]) -> list[Event]:
        """Insert many points at once through a rebuild (one Type2 each)."""
        for p in points:
            if p.id in self.used_ids:
                raise InputError(f"point id {p.id} was already used")
        seen = set()
        for p in points:
            if p.id in seen:
                raise InputError(f"duplicate point id {p.id}")
            seen.add(p.id)
        for p in points:
            x = self._embed(p)
            self.used_ids.add(p.id)
            self.original[p.id] = p.coords
            self.coords[p.id] = x
            self.active.add(p.id)
        return self._rebuild()

    def _bulk_build(self, ids: list[int]) -> None:
        if not ids:
            return
        pts = PointSet(ids, [self.coords[q] for q in ids])
        work: dict = {}
        table = compute_labels(pts, self.schedule, self.grid, self.priority_rng, stats=work)
        self.stats.cells_examined += work.get("pairs", 0)
        for q in ids:
            key = Label(draw_priority(q, self.priority_rng), q)
            self.keys[q] = key
            self.epoch_points.append(q)
            x = self.coords[q]
            for lv in self.levels:
                lv.add_to_bucket(q, key, x, index=False)
                lv.register(q, x, index=False)
            self.labels[q] = list(table[q])
        for lv in self.levels:
            lv.finish_bulk(ids, pts.coords)

    # -- queries ---------------------------------------------------------------------

    def __len__(self) -> int:
        return len(self.active)

    def label_table(self) -> LabelTable:
        return LabelTable(self.m, {q: tuple(self.labels[q]) for q in self.active})

    def epoch_point_set(self) -> PointSet:
        """Every point inserted since the last rebuild (deleted ones included)."""
        ids = sorted(self.epoch_points)
        coords = np.array([self.coords[q] for q in ids]).reshape(len(ids), self.config.embed_dim)
        return PointSet(ids, coords)

    def tree_distance(self, p: int, q: int) -> float:
        return self.store.tree_distance(p, q)

    def recourse_stats(self) -> RecourseStats:
        return self.stats

    def reset_stats(self) -> None:
        self.stats = RecourseStats()

    def check_registration(self) -> None:
        """Recompute every active label from bucket minima; raise on mismatch."""
        scratch = RecourseStats()
        for q in self.active:
            for lv in self.levels:
                want = lv.ball_min(q, self.coords[q], scratch)
                if self.labels[q][lv.level - 1] != want:
                    raise AssertionError(f"label of {q} at level {lv.level} is stale")
                if q not in lv.members[lv.point_cell[q]]:
                    raise AssertionError(f"{q} missing from its bucket at level {lv.level}")
