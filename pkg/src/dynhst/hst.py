"""Explicit 2-HST over label prefixes, mutated only through update events.

Node 0 is a level-0 root. A node at level i (1..m) is identified among its
siblings by its level-i label; leaves sit at level m and hold the set of
points whose full label vector leads there. The edge whose child is at level
i weighs ``w_i = 2^(m-i)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Union

from .embedding import Label, LabelTable, lca_distance
from .geometry import InputError


class PreconditionError(RuntimeError):
    """An event does not fit the current tree."""


@dataclass(frozen=True)
class Type1:
    """Deactivate ``point`` at ``leaf``."""

    leaf: int
    point: int

    def format(self) -> str:
        return f"T1 {self.leaf} {self.point}"


@dataclass(frozen=True)
class Type2:
    """Attach ``point`` under the path spelled by ``labels``.

    ``attach_depth`` is the level of the deepest node of that path that existed
    before the event (0 = only the root). ``leaf`` is filled in by the store
    that applied it.
    """

    point: int
    labels: tuple[Label, ...]
    attach_depth: int
    leaf: int = field(default=-1, compare=False)

    def format(self) -> str:
        owners = " ".join(str(lab.owner) for lab in self.labels)
        return f"T2 {self.point} {self.attach_depth} {owners}"


Event = Union[Type1, Type2]


class HstStore:
    def __init__(self, m: int):
        if m < 1:
            raise InputError("m must be >= 1")
        self.m = m
        self._level: dict[int, int] = {0: 0}
        self._parent: dict[int, int] = {0: -1}
        self._label: dict[int, Label | None] = {0: None}
        self._children: dict[int, dict[Label, int]] = {0: {}}
        self._active: dict[int, int] = {0: 0}
        self._points: dict[int, set[int]] = {}
        self._leaf_of: dict[int, int] = {}
        self._next_id = 1
        self._queues: dict[str, list[Event]] = {}
        self.applied = 0

    # -- structure queries -------------------------------------------------

    @property
    def root(self) -> int:
        return 0

    def __contains__(self, node: int) -> bool:
        return node in self._level

    def node_count(self) -> int:
        return len(self._level)

    def level(self, node: int) -> int:
        return self._level[node]

    def parent(self, node: int) -> int:
        return self._parent[node]

    def label(self, node: int) -> Label | None:
        return self._label[node]

    def children(self, node: int) -> list[int]:
        return list(self._children.get(node, {}).values())

    def active_count(self, node: int) -> int:
        return self._active[node]

    def is_leaf(self, node: int) -> bool:
        return self._level[node] == self.m

    def leaf_points(self, leaf: int) -> set[int]:
        return self._points.get(leaf, set())

    def leaf_of(self, point: int) -> int:
        try:
            return self._leaf_of[point]
        except KeyError:
            raise InputError(f"point {point} is not active") from None

    def has_point(self, point: int) -> bool:
        return point in self._leaf_of

    def active_points(self) -> list[int]:
        return sorted(self._leaf_of)

    def path(self, node: int) -> list[int]:
        """``node`` and its ancestors up to and including the root."""
        out = []
        while node != -1:
            out.append(node)
            node = self._parent[node]
        return out

    def find(self, labels: Iterable[Label]) -> tuple[int, int]:
        """Deepest existing node along ``labels`` and its level."""
        node, depth = 0, 0
        for lab in labels:
            nxt = self._children.get(node, {}).get(lab)
            if nxt is None:
                break
            node, depth = nxt, depth + 1
        return node, depth

    def labels_of(self, point: int) -> tuple[Label, ...]:
        return tuple(self._label[v] for v in reversed(self.path(self.leaf_of(point))[:-1]))

    def lca(self, a: int, b: int) -> int:
        while a != b:
            a, b = self._parent[a], self._parent[b]
        return a

    def tree_distance(self, p: int, q: int) -> float:
        lp, lq = self.leaf_of(p), self.leaf_of(q)
        return lca_distance(self.m, self._level[self.lca(lp, lq)] + 1)

    def label_table(self) -> LabelTable:
        return LabelTable(self.m, {p: self.labels_of(p) for p in self._leaf_of})

    # -- events --------------------------------------------------------------

    def prepare_insert(self, point: int, labels: tuple[Label, ...]) -> Type2:
        _, depth = self.find(labels)
        return Type2(point, tuple(labels), depth)

    def apply(self, event: Event) -> list[int]:
        """Apply one event; returns the node ids whose state changed."""
        if isinstance(event, Type1):
            changed = self._deactivate(event)
        elif isinstance(event, Type2):
            changed, event = self._attach(event)
        else:
            raise InputError(f"not an event: {event!r}")
        self.applied += 1
        for q in self._queues.values():
            q.append(event)
        return changed

    def _deactivate(self, e: Type1) -> list[int]:
        if self._leaf_of.get(e.point) != e.leaf:
            raise PreconditionError(f"point {e.point} is not active at leaf {e.leaf}")
        self._points[e.leaf].discard(e.point)
        del self._leaf_of[e.point]
        changed = self.path(e.leaf)
        for v in changed:
            self._active[v] -= 1
        return changed

    def _attach(self, e: Type2) -> tuple[list[int], Type2]:
        if len(e.labels) != self.m:
            raise PreconditionError(f"expected {self.m} labels, got {len(e.labels)}")
        if e.point in self._leaf_of:
            raise PreconditionError(f"point {e.point} is already active")
        node, depth = self.find(e.labels)
        if depth < e.attach_depth:
            raise PreconditionError(
                f"label prefix of length {e.attach_depth} does not exist (deepest match {depth})")
        for i in range(depth, self.m):
            child = self._next_id
            self._next_id += 1
            lab = e.labels[i]
            self._level[child] = i + 1
            self._parent[child] = node
            self._label[child] = lab
            self._children[child] = {}
            self._active[child] = 0
            self._children[node][lab] = child
            node = child
        self._points.setdefault(node, set()).add(e.point)
        self._leaf_of[e.point] = node
        changed = self.path(node)
        for v in changed:
            self._active[v] += 1
        if e.leaf != node:
            e = Type2(e.point, e.labels, e.attach_depth, node)
        return changed, e

    # -- consumers -------------------------------------------------------------

    def subscribe(self, consumer: str) -> None:
        if consumer in self._queues:
            raise InputError(f"consumer {consumer!r} already subscribed")
        self._queues[consumer] = []

    def drain(self, consumer: str) -> list[Event]:
        try:
            q = self._queues[consumer]
        except KeyError:
            raise InputError(f"unknown consumer {consumer!r}") from None
        self._queues[consumer] = []
        return q

    def compact(self) -> int:
        """Drop nodes without active points; only while no consumer lags behind.

        Returns the number of removed nodes (0 when skipped).
        """
        if any(self._queues.values()):
            return 0
        dead = [v for v, c in self._active.items() if c == 0 and v != 0]
        for v in dead:
            par = self._parent[v]
            if par in self._children and self._children[par].get(self._label[v]) == v:
                del self._children[par][self._label[v]]
        for v in dead:
            for table in (self._level, self._parent, self._label, self._children, self._active):
                del table[v]
            self._points.pop(v, None)
        return len(dead)

    def dump(self) -> list[str]:
        """One line per node: ``node-id level parent label-owner active``."""
        lines = []
        for v in sorted(self._level):
            lab = self._label[v]
            owner = -1 if lab is None else lab.owner
            lines.append(f"{v} {self._level[v]} {self._parent[v]} {owner} {int(self._active[v] > 0)}")
        return lines
