"""Randomly shifted axis-aligned grids, one per level, and ball-bucket enumeration.

At level i the cell side is ``tau_i / sqrt(d)`` so that a cell's diagonal is
exactly tau_i. Cells are half-open for point location (``floor``) and treated
as closed when intersected with a query ball.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .geometry import InputError, LevelSchedule, Point, Rng

CELL_LIMIT = 2 ** 40

Cell = tuple[int, ...]


class BucketKey(NamedTuple):
    level: int
    cell: Cell

    def __str__(self) -> str:
        return f"{self.level}:" + ",".join(str(c) for c in self.cell)


def _coords(p) -> Sequence[float]:
    return p.coords if isinstance(p, Point) else p


@dataclass(frozen=True)
class ConsistencyEstimate:
    mean: float
    stderr: float
    trials: int


class GridHash:
    """One shifted grid per level of ``schedule``; levels are 1-based."""

    def __init__(self, schedule: LevelSchedule, dim: int, shifts: Sequence[Sequence[float]]):
        if len(shifts) != schedule.m:
            raise InputError("need one shift vector per level")
        self.schedule = schedule
        self.dim = dim
        self.sides = tuple(t / math.sqrt(dim) for t in schedule.tau)
        self.shifts = tuple(tuple(float(x) for x in s) for s in shifts)
        for s, side in zip(self.shifts, self.sides):
            if len(s) != dim or not all(0 <= x < side for x in s):
                raise InputError("shift outside [0, side)")
        self._shift_arrays = tuple(np.array(s) for s in self.shifts)

    @classmethod
    def sample(cls, schedule: LevelSchedule, dim: int, rng: Rng) -> "GridHash":
        gen = rng.child("shift").generator()
        shifts = []
        for tau in schedule.tau:
            side = tau / math.sqrt(dim)
            shifts.append(np.minimum(gen.uniform(0.0, side, size=dim), np.nextafter(side, 0)))
        return cls(schedule, dim, shifts)

    def side(self, level: int) -> float:
        return self.sides[level - 1]

    def shift(self, level: int) -> tuple[float, ...]:
        return self.shifts[level - 1]

    def radius(self, level: int) -> float:
        return self.schedule.r[level - 1]

    # -- point location -------------------------------------------------

    def cell_of(self, level: int, coords: Sequence[float]) -> Cell:
        side = self.sides[level - 1]
        shift = self.shifts[level - 1]
        if len(coords) != self.dim:
            raise InputError(f"expected {self.dim} coordinates, got {len(coords)}")
        cell = tuple(math.floor((x - s) / side) for x, s in zip(coords, shift))
        for c in cell:
            if not -CELL_LIMIT < c < CELL_LIMIT:
                raise InputError("coordinate too large for the grid at this level")
        return cell

    def bucket_of(self, level: int, p) -> BucketKey:
        if not 1 <= level <= self.schedule.m:
            raise InputError(f"level {level} outside [1, {self.schedule.m}]")
        return BucketKey(level, self.cell_of(level, _coords(p)))

    def cells_of(self, level: int, coords: np.ndarray) -> np.ndarray:
        """Vectorized ``cell_of`` for an (n, d) array."""
        side = self.sides[level - 1]
        cells = np.floor((coords - self._shift_arrays[level - 1]) / side).astype(np.int64)
        if cells.size and np.abs(cells).max() >= CELL_LIMIT:
            raise InputError("coordinate too large for the grid at this level")
        return cells

    # -- cell / ball geometry ---------------------------------------------

    def cell_sqdist(self, level: int, coords: Sequence[float], cell: Cell) -> float:
        """Squared distance from a point to the closed cell (per-axis clamping)."""
        side = self.sides[level - 1]
        acc = 0.0
        for x, s, c in zip(coords, self.shifts[level - 1], cell):
            lo = s + c * side
            hi = lo + side
            if x < lo:
                t = lo - x
                acc += t * t
            elif x > hi:
                t = x - hi
                acc += t * t
        return acc

    def cell_sqdist_many(self, level: int, coords: np.ndarray, cells: np.ndarray) -> np.ndarray:
        """Row-wise ``cell_sqdist``; sums axes in the same order as the scalar path."""
        side = self.sides[level - 1]
        shift = self._shift_arrays[level - 1]
        acc = np.zeros(len(coords))
        for j in range(self.dim):
            lo = shift[j] + cells[:, j] * side
            hi = lo + side
            x = coords[:, j]
            t = np.where(x < lo, lo - x, np.where(x > hi, x - hi, 0.0))
            acc = acc + t * t
        return acc

    def enumerate_ball_buckets(self, level: int, center, radius: float,
                               with_visits: bool = False):
        """All buckets at ``level`` whose closed cell meets the closed ball.

        Depth-first search over axis-neighbours starting at the centre's own
        cell, pruning cells that miss the ball. Returns a set of BucketKey, or
        ``(keys, visited_count)`` when ``with_visits`` is set.
        """
        cells, visits = self.ball_cells(level, _coords(center), radius)
        keys = {BucketKey(level, c) for c in cells}
        return (keys, visits) if with_visits else keys

    def ball_cells(self, level: int, coords: Sequence[float], radius: float) -> tuple[list[Cell], int]:
        if radius < 0:
            raise InputError("radius must be >= 0")
        r2 = radius * radius
        start = self.cell_of(level, coords)
        seen = {start}
        out = [start]
        stack = [start]
        while stack:
            cell = stack.pop()
            for j in range(self.dim):
                for step in (-1, 1):
                    nb = cell[:j] + (cell[j] + step,) + cell[j + 1:]
                    if nb in seen:
                        continue
                    seen.add(nb)
                    if self.cell_sqdist(level, coords, nb) <= r2:
                        out.append(nb)
                        stack.append(nb)
        return out, len(seen)

    # -- reporting ----------------------------------------------------------

    def measure_consistency(self, level: int, gamma: float, trials: int, rng: Rng) -> ConsistencyEstimate:
        """Monte Carlo mean of |phi(S)| for balls S of diameter tau_level/gamma.

        ``gamma = inf`` degenerates to singleton sets.
        """
        if trials < 1:
            raise InputError("trials must be >= 1")
        tau = self.schedule.tau[level - 1]
        radius = 0.0 if math.isinf(gamma) else tau / (2 * gamma)
        side = self.sides[level - 1]
        gen = rng.child("consistency").generator()
        counts = np.empty(trials)
        for t in range(trials):
            center = gen.uniform(0.0, 4 * side, size=self.dim)
            cells, _ = self.ball_cells(level, center, radius)
            counts[t] = len(cells)
        stderr = float(counts.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
        return ConsistencyEstimate(float(counts.mean()), stderr, trials)

    def manifest(self) -> dict:
        return {"dim": self.dim, "sides": list(self.sides), "shifts": [list(s) for s in self.shifts]}
