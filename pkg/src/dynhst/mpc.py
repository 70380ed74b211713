"""A deterministic simulator of synchronous massively parallel computation.

Machines are stepped in id order. Every round each machine's outgoing and
incoming traffic is checked against a per-round cap in 64-bit words; a record
costs one word per scalar it contains. The static labels are computed with
broadcast, sample sort and a reply round, and come out identical to the
sequential computation because both use the same keyed priorities and the
same cell/ball test.
"""

from __future__ import annotations

import bisect
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Sequence

from .embedding import Label, LabelTable
from .geometry import InputError, LevelSchedule, PointSet, Rng, draw_priority
from .grid_hash import GridHash

MIN_LOCAL_SPACE = 16


class CapacityError(RuntimeError):
    """A machine exceeded its per-round communication or storage cap."""


def words(record: Any) -> int:
    if isinstance(record, (tuple, list)):
        return sum(words(r) for r in record)
    return 1


@dataclass
class RoundLog:
    rounds: int = 0
    max_load: int = 0
    total_space: int = 0
    per_primitive: dict[str, int] = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


class MpcSimulator:
    def __init__(self, machines: int, cap_words: int):
        if machines < 1 or cap_words < 1:
            raise InputError("need at least one machine and a positive cap")
        self.machines = machines
        self.cap = cap_words
        self.log = RoundLog()

    def fanout(self, record_words: int) -> int:
        return max(2, self.cap // max(1, record_words))

    def observe(self, stores: Sequence[Sequence[Any]]) -> None:
        """Account storage held by each machine; storage is capped like traffic."""
        loads = [words(s) for s in stores]
        top = max(loads, default=0)
        if top > self.cap:
            raise CapacityError(f"machine stores {top} words, cap is {self.cap}")
        self.log.max_load = max(self.log.max_load, top)
        self.log.total_space = max(self.log.total_space, sum(loads))

    def exchange(self, outboxes: Sequence[Sequence[tuple[int, Any]]], primitive: str) -> list[list[Any]]:
        """One synchronous round: ``outboxes[j]`` lists (destination, record).

        A single machine talks only to itself, which costs no round.
        """
        inboxes: list[list[Any]] = [[] for _ in range(self.machines)]
        inwords = [0] * self.machines
        for src, box in enumerate(outboxes):
            out = 0
            for dst, rec in box:
                w = words(rec)
                out += w
                inwords[dst] += w
                inboxes[dst].append(rec)
            if out > self.cap:
                raise CapacityError(f"machine {src} sends {out} words in one round, cap is {self.cap}")
        for dst, w in enumerate(inwords):
            if w > self.cap:
                raise CapacityError(f"machine {dst} receives {w} words in one round, cap is {self.cap}")
        if self.machines == 1:
            return inboxes
        self.log.rounds += 1
        self.log.per_primitive[primitive] = self.log.per_primitive.get(primitive, 0) + 1
        return inboxes

    # -- primitives ----------------------------------------------------------------

    def broadcast(self, value: Any, root: int = 0, primitive: str = "broadcast") -> list[Any]:
        """Spread ``value`` from ``root`` along a tree of fan-out bounded by the cap."""
        have = [None] * self.machines
        have[root] = value
        order = [root] + [j for j in range(self.machines) if j != root]
        f = self.fanout(words(value))
        reached = 1
        while reached < self.machines:
            outboxes: list[list] = [[] for _ in range(self.machines)]
            new = min(self.machines, reached * (f + 1))
            for k in range(reached, new):
                outboxes[order[(k - reached) % reached]].append((order[k], value))
            for dst, box in enumerate(self.exchange(outboxes, primitive)):
                if box:
                    have[dst] = box[0]
            reached = new
        return have

    def aggregate(self, values: Sequence[Any], combine: Callable[[Any, Any], Any] = min,
                  primitive: str = "aggregate") -> Any:
        """Fold one value per machine into machine 0 along a converge-cast tree."""
        vals = list(values)
        if len(vals) != self.machines:
            raise InputError("need one value per machine")
        alive = list(range(self.machines))
        f = self.fanout(words(vals[0]))
        while len(alive) > 1:
            groups = [alive[i:i + f + 1] for i in range(0, len(alive), f + 1)]
            outboxes: list[list] = [[] for _ in range(self.machines)]
            for g in groups:
                for j in g[1:]:
                    outboxes[j].append((g[0], vals[j]))
            for dst, box in enumerate(self.exchange(outboxes, primitive)):
                for v in box:
                    vals[dst] = combine(vals[dst], v)
            alive = [g[0] for g in groups]
        return vals[0]

    def sort(self, stores: list[list[Any]], key: Callable[[Any], Any], primitive: str = "sort") -> list[list[Any]]:
        """Sample sort: equal keys end on one machine, machines hold ascending key ranges.

        Records sharing a key are ordered by the records themselves.
        """
        order = lambda r: (key(r), r)  # noqa: E731
        local = [sorted(s, key=order) for s in stores]
        if self.machines == 1:
            return local
        M = self.machines
        per = max(1, min(M - 1, self.cap // (M * 8)))
        samples = []
        for j, s in enumerate(local):
            picks = [key(s[(i * len(s)) // (per + 1)]) for i in range(1, per + 1)] if s else []
            samples.append([(0, p) for p in picks])
        gathered = sorted(rec for box in self.exchange(samples, primitive) for rec in box)
        step = len(gathered) / M
        splitters = [gathered[min(len(gathered) - 1, int(step * i))] for i in range(1, M)] if gathered else []
        splitters = self.broadcast(tuple(splitters), primitive=primitive)
        outboxes = []
        for j, s in enumerate(local):
            spl = splitters[j]
            outboxes.append([(bisect.bisect_left(spl, key(r)), r) for r in s])
        result = [sorted(box, key=order) for box in self.exchange(outboxes, primitive)]
        self.observe(result)
        return result


# -- static labels in the simulator ------------------------------------------------------


def capacity_for(n_local: int, schedule: LevelSchedule, grid: GridHash, slack: float = 4) -> int:
    """Per-round word budget: O(s) point records, times the per-point key fan-out."""
    d = grid.dim
    box = max((math.floor(2 * grid.radius(i) / grid.side(i)) + 2) ** d for i in range(1, schedule.m + 1))
    return max(1, int(slack * n_local * (d + 3) * schedule.m * box))


def run_embedding_mpc(points: PointSet, schedule: LevelSchedule, grid: GridHash, s: int, rng: Rng,
                      slack: float = 4, min_local_space: int = MIN_LOCAL_SPACE) -> tuple[LabelTable, RoundLog]:
    """Labels of all points on ceil(n/s) simulated machines holding s points each."""
    if s < min_local_space:
        raise InputError(f"local space {s} is below the floor {min_local_space}")
    n = len(points)
    if n == 0:
        return LabelTable(schedule.m, {}), RoundLog()
    M = math.ceil(n / s)
    sim = MpcSimulator(M, capacity_for(s, schedule, grid, slack))
    ids = [int(i) for i in points.ids]
    home = [list(range(j * s, min(n, (j + 1) * s))) for j in range(M)]
    sim.observe([[tuple(points.coords[k]) + (ids[k],) for k in h] for h in home])

    # every machine learns beta (and hence r_i) from machine 0
    sim.broadcast((schedule.beta,), primitive="broadcast")

    # local work: bucket minima and de-duplicated ball-bucket queries
    stores: list[list] = []
    wanted: list[dict] = []
    for j, h in enumerate(home):
        mins: dict[tuple, tuple] = {}
        asks: dict[tuple, list] = {}
        for k in h:
            x = points.coords[k].tolist()
            key = (draw_priority(ids[k], rng), ids[k])
            for level in range(1, schedule.m + 1):
                b = (level,) + grid.cell_of(level, x)
                if b not in mins or key < mins[b]:
                    mins[b] = key
                cells, _ = grid.ball_cells(level, x, grid.radius(level))
                for c in cells:
                    asks.setdefault((level,) + c, []).append(k)
        wanted.append(asks)
        recs = [(b, 0, v[0], v[1]) for b, v in mins.items()]
        recs += [(q, 1, j, 0) for q in asks]
        stores.append(recs)
    sim.observe(stores)

    ordered = sim.sort(stores, key=lambda r: r[0], primitive="sort")

    # owners of each key answer every query for it
    outboxes = []
    for recs in ordered:
        box = []
        best: dict[tuple, tuple] = {}
        for b, kind, a, c in recs:
            if kind == 0:
                if b not in best or (a, c) < best[b]:
                    best[b] = (a, c)
            elif b in best:
                box.append((a, (b, best[b][0], best[b][1])))
        outboxes.append(box)
    replies = sim.exchange(outboxes, "reply")

    labels: dict[int, list] = {}
    for j, box in enumerate(replies):
        got = {b: (a, c) for b, a, c in box}
        for k in home[j]:
            labels[ids[k]] = [None] * schedule.m
        for q, ks in wanted[j].items():
            val = got.get(q)
            if val is None:
                continue
            level = q[0]
            for k in ks:
                cur = labels[ids[k]][level - 1]
                if cur is None or val < cur:
                    labels[ids[k]][level - 1] = val
    table = LabelTable(schedule.m, {p: tuple(Label(*v) for v in vec) for p, vec in labels.items()})
    return table, sim.log
