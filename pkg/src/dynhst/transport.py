"""Exact geometric transport cost on the maintained HST.

With signed integer weights (supplies positive, demands negative) the optimal
transport cost on a 2-HST is the sum over non-root nodes of
|net weight below v| times the weight of v's parent edge. Only the cost is
maintained, never a transport plan.
"""

from __future__ import annotations

from .geometry import InputError
from .hst import HstStore, Type1

WEIGHT_LIMIT = 2 ** 63


class TransportError(InputError):
    pass


class TreeTransport:
    def __init__(self, store: HstStore, consumer: str = "transport"):
        self.store = store
        self.m = store.m
        self.consumer = consumer
        self.weight: dict[int, int] = {}
        self.placed: dict[int, int] = {}
        self.imb: dict[int, int] = {}
        self.total = 0
        self.cost = 0
        self.work = 0
        store.subscribe(consumer)

    def _edge(self, v: int) -> int:
        level = self.store.level(v)
        return 0 if level == 0 else 2 ** (self.m - level)

    def _shift(self, leaf: int, delta: int) -> None:
        for v in self.store.path(leaf):
            self.work += 1
            old = self.imb.get(v, 0)
            new = old + delta
            self.imb[v] = new
            self.cost += (abs(new) - abs(old)) * self._edge(v)

    def set_weight(self, p: int, w: int) -> None:
        """Set the signed weight of point p (0 removes it)."""
        w = int(w)
        if abs(w) >= WEIGHT_LIMIT:
            raise InputError("weight out of 64-bit range")
        old = self.weight.get(p, 0)
        if p in self.placed:
            self._shift(self.placed[p], w - old)
        elif self.store.has_point(p) and w:
            self.placed[p] = self.store.leaf_of(p)
            self._shift(self.placed[p], w)
        self.total += w - old
        if w:
            self.weight[p] = w
        else:
            self.weight.pop(p, None)
            self.placed.pop(p, None)

    def sync(self) -> None:
        for e in self.store.drain(self.consumer):
            w = self.weight.get(e.point, 0)
            if not w:
                continue
            if isinstance(e, Type1):
                if e.point in self.placed:
                    self._shift(self.placed.pop(e.point), -w)
            elif e.point not in self.placed:
                self.placed[e.point] = e.leaf
                self._shift(e.leaf, w)

    def transport_cost(self) -> int:
        if self.total != 0:
            raise TransportError(f"weights sum to {self.total}, not zero")
        return self.cost

    def recompute_cost(self) -> int:
        imb: dict[int, int] = {}
        for p, leaf in self.placed.items():
            for v in self.store.path(leaf):
                imb[v] = imb.get(v, 0) + self.weight[p]
        return sum(abs(x) * self._edge(v) for v, x in imb.items())
