"""Points, Euclidean distance, random projection and the level schedule."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

PRIORITY_BITS = 64


class InputError(ValueError):
    """Malformed or contract-violating input."""


def _stream_id(name: str | int) -> int:
    if isinstance(name, int):
        return name & 0xFFFFFFFFFFFFFFFF
    digest = hashlib.blake2b(name.encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


@dataclass(frozen=True)
class Rng:
    """A (seed, stream) pair; identical pairs reproduce identical draws."""

    seed: int
    stream: int = 0

    def child(self, name: str | int) -> "Rng":
        mixed = hashlib.blake2b(
            self.stream.to_bytes(8, "little") + _stream_id(name).to_bytes(8, "little"),
            digest_size=8,
        ).digest()
        return Rng(self.seed, int.from_bytes(mixed, "little"))

    def generator(self) -> np.random.Generator:
        return np.random.default_rng([self.seed & 0xFFFFFFFFFFFFFFFF, self.stream])

    def _key(self) -> bytes:
        return (self.seed & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little") + self.stream.to_bytes(8, "little")


@dataclass(frozen=True)
class Point:
    id: int
    coords: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(float(c) for c in self.coords))

    @property
    def dim(self) -> int:
        return len(self.coords)


@dataclass
class PointSet:
    """Identified points stored as an id vector and an (n, d) coordinate array."""

    ids: np.ndarray
    coords: np.ndarray

    def __post_init__(self):
        self.ids = np.asarray(self.ids, dtype=np.int64).reshape(-1)
        self.coords = np.asarray(self.coords, dtype=np.float64)
        if self.coords.ndim != 2:
            self.coords = self.coords.reshape(len(self.ids), -1)
        if len(self.ids) != len(self.coords):
            raise InputError("ids and coords have different lengths")
        if len(np.unique(self.ids)) != len(self.ids):
            raise InputError("duplicate point ids")

    @classmethod
    def from_array(cls, coords, start_id: int = 0) -> "PointSet":
        coords = np.asarray(coords, dtype=np.float64)
        if coords.ndim == 1:
            coords = coords.reshape(-1, 1)
        return cls(np.arange(start_id, start_id + len(coords)), coords)

    @classmethod
    def from_points(cls, points: Sequence[Point]) -> "PointSet":
        if not points:
            return cls(np.zeros(0, dtype=np.int64), np.zeros((0, 0)))
        dims = {p.dim for p in points}
        if len(dims) != 1:
            raise InputError("points have mixed dimensions")
        return cls([p.id for p in points], [p.coords for p in points])

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    def points(self) -> list[Point]:
        return [Point(int(i), tuple(c)) for i, c in zip(self.ids, self.coords)]


def dist(a: Point | Sequence[float], b: Point | Sequence[float]) -> float:
    """Euclidean distance between two points of equal dimension."""
    xa = a.coords if isinstance(a, Point) else tuple(a)
    xb = b.coords if isinstance(b, Point) else tuple(b)
    if len(xa) != len(xb):
        raise InputError(f"dimension mismatch: {len(xa)} vs {len(xb)}")
    return math.sqrt(sum((u - v) * (u - v) for u, v in zip(xa, xb)))


@dataclass(frozen=True)
class JLMap:
    """Data-oblivious Gaussian projection R^d -> R^k scaled by 1/sqrt(k)."""

    matrix: np.ndarray = field(repr=False)

    @classmethod
    def sample(cls, source_dim: int, target_dim: int, rng: Rng) -> "JLMap":
        if target_dim < 1:
            raise InputError("target_dim must be >= 1")
        g = rng.child("jl").generator().standard_normal((source_dim, target_dim))
        return cls(g / math.sqrt(target_dim))

    @property
    def target_dim(self) -> int:
        return self.matrix.shape[1]

    def apply(self, coords) -> np.ndarray:
        return np.asarray(coords, dtype=np.float64) @ self.matrix


def jl_project(points: Sequence[Point], target_dim: int, rng: Rng) -> list[Point]:
    if target_dim < 1:
        raise InputError("target_dim must be >= 1")
    if not points:
        return []
    jl = JLMap.sample(points[0].dim, target_dim, rng)
    out = jl.apply(np.array([p.coords for p in points]))
    return [Point(p.id, tuple(row)) for p, row in zip(points, out)]


@dataclass(frozen=True)
class LevelSchedule:
    """Per-level scales for levels 1..m (stored 0-based: ``w[i-1]`` is w_i).

    w_i = 2^(m-i) halves per level, tau_i = w_i/2 bounds bucket diameters and
    r_i = beta*w_i/gamma is the query-ball radius.
    """

    m: int
    gamma: float
    beta: float
    w: tuple[float, ...]
    tau: tuple[float, ...]
    r: tuple[float, ...]

    @property
    def delta(self) -> float:
        return float(2 ** (self.m - 1))

    @classmethod
    def build(cls, m: int, gamma: float, beta: float) -> "LevelSchedule":
        w = tuple(float(2 ** (m - i)) for i in range(1, m + 1))
        return cls(
            m=m,
            gamma=float(gamma),
            beta=float(beta),
            w=w,
            tau=tuple(x / 2 for x in w),
            r=tuple(beta / gamma * x for x in w),
        )


def level_count(delta_max: float) -> int:
    if delta_max < 1:
        raise InputError("delta_max must be >= 1")
    return math.ceil(math.log2(delta_max)) + 1


def make_schedule(delta_max: float, gamma: float, rng: Rng | None = None,
                  beta: float | None = None) -> LevelSchedule:
    """Derive m from the diameter bound and draw one beta in [1/4, 1/2].

    ``beta`` may be pinned explicitly (used by tests and replay); otherwise it
    is drawn from ``rng``.
    """
    if gamma < 1:
        raise InputError("gamma must be >= 1")
    m = level_count(delta_max)
    if beta is None:
        if rng is None:
            raise InputError("either rng or beta is required")
        beta = float(rng.child("beta").generator().uniform(0.25, 0.5))
    elif not 0.25 <= beta <= 0.5:
        raise InputError("beta must lie in [1/4, 1/2]")
    return LevelSchedule.build(m, gamma, beta)


def draw_priority(pid: int, rng: Rng) -> int:
    """Uniform 64-bit priority, a keyed hash of (seed, stream, id).

    Priorities are compared as ``(priority, id)`` so ties cannot occur.
    """
    h = hashlib.blake2b(int(pid).to_bytes(8, "little", signed=True), digest_size=8,
                        key=rng._key())
    return int.from_bytes(h.digest(), "little")


def priority_key(pid: int, rng: Rng) -> tuple[int, int]:
    return (draw_priority(pid, rng), int(pid))


def diameter_bound(points: Iterable[Sequence[float]] | np.ndarray) -> float:
    """Cheap upper bound on the diameter: the bounding-box diagonal."""
    arr = np.asarray(points, dtype=np.float64)
    if arr.size == 0:
        return 0.0
    span = arr.max(axis=0) - arr.min(axis=0)
    return float(np.sqrt((span * span).sum()))
