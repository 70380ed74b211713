"""Exact k-median on the maintained HST.

Each node v at level l keeps P(v) (active points below), pes(v) = P(v) 2^(m-l),
the benefit benf(v) of the best leaf below it, and that leaf's point
(kcenter). Benefits satisfy benf(v) = pes(v) + max over children benf(c), with
benf(leaf) = P(leaf). The node closest to the root whose kcenter is a leaf u
is maxbenf(u); ranking leaves by benf(maxbenf(u)) and taking the first k gives
an optimal tree k-median.
"""

from __future__ import annotations

from sortedcontainers import SortedList

from .geometry import InputError
from .hst import HstStore, Type1, Type2

_NONE = 1 << 62  # kcenter placeholder for empty subtrees; sorts after real ids


class TreeKMedian:
    def __init__(self, store: HstStore, k: int = 1, consumer: str = "kmedian"):
        if k < 1:
            raise InputError("k must be >= 1")
        self.store = store
        self.m = store.m
        self.k = k
        self.consumer = consumer
        self.benf: dict[int, int] = {}
        self.kcenter: dict[int, int] = {}
        self._heap: dict[int, SortedList] = {}
        self._entry: dict[int, tuple] = {}
        self.candidates = SortedList()
        self._cand_key: dict[int, tuple] = {}
        self._solution: dict[int, int] = {}
        self._below: dict[int, SortedList] = {}
        # leaf of each point as seen through the events processed so far; the
        # store itself may already be ahead while events are still queued
        self._at: dict[int, int] = {}
        self.work = 0
        store.subscribe(consumer)
        for p in store.active_points():
            self._at[p] = store.leaf_of(p)
        for p in store.active_points():
            self._refresh_path(store.leaf_of(p))
        self._sync_solution()

    # -- event handling ------------------------------------------------------

    def sync(self) -> None:
        for e in self.store.drain(self.consumer):
            if isinstance(e, Type1):
                self.on_type1(e)
            else:
                self.on_type2(e)

    def on_type1(self, e: Type1) -> None:
        self._at.pop(e.point, None)
        self._drop_candidate(e.point)
        self._refresh_path(e.leaf)
        self._sync_solution()

    def on_type2(self, e: Type2) -> None:
        self._at[e.point] = e.leaf
        self._refresh_path(e.leaf)
        self._sync_solution()

    def _node_key(self, v: int) -> tuple:
        # max benefit first, then smaller point id
        return (-self.benf[v], self.kcenter[v], v)

    def _refresh_path(self, leaf: int) -> None:
        st = self.store
        touched = set()
        pts = st.leaf_points(leaf)
        touched.add(self.kcenter.get(leaf, _NONE))
        self.benf[leaf] = len(pts)
        self.kcenter[leaf] = min(pts) if pts else _NONE
        touched.add(self.kcenter[leaf])
        child = leaf
        v = st.parent(leaf)
        while v != -1:
            self.work += 1
            heap = self._heap.setdefault(v, SortedList())
            old = self._entry.get(child)
            if old is not None:
                heap.remove(old)
            new = self._node_key(child)
            heap.add(new)
            self._entry[child] = new
            touched.add(self.kcenter.get(v, _NONE))
            top = heap[0]
            pes = st.active_count(v) * 2 ** (self.m - st.level(v))
            self.benf[v] = pes - top[0]
            self.kcenter[v] = top[1] if st.active_count(v) else _NONE
            touched.add(self.kcenter[v])
            child, v = v, st.parent(v)
        touched.discard(_NONE)
        for u in touched:
            self._refresh_candidate(u)

    def _maxbenf(self, u: int) -> int:
        st = self.store
        v = self._at[u]
        while True:
            par = st.parent(v)
            if par == -1 or self.kcenter.get(par) != u:
                return v
            v = par

    def _drop_candidate(self, u: int) -> None:
        key = self._cand_key.pop(u, None)
        if key is not None:
            self.candidates.remove(key)

    def _refresh_candidate(self, u: int) -> None:
        self._drop_candidate(u)
        leaf = self._at.get(u)
        if leaf is None or self.kcenter.get(leaf) != u:
            return
        key = (-self.benf[self._maxbenf(u)], u)
        self._cand_key[u] = key
        self.candidates.add(key)

    # -- solution ---------------------------------------------------------------

    def _sync_solution(self) -> None:
        want = {u for _, u in self.candidates[: self.k]}
        for u in [c for c, leaf in self._solution.items() if c not in want or self._at.get(c) != leaf]:
            for v in self.store.path(self._solution.pop(u)):
                self._below[v].remove(u)
        for u in want:
            if u not in self._solution:
                leaf = self._at[u]
                self._solution[u] = leaf
                for v in self.store.path(leaf):
                    self._below.setdefault(v, SortedList()).add(u)

    def centers(self, k: int | None = None) -> list[int]:
        k = self.k if k is None else k
        if k < 1:
            raise InputError("k must be >= 1")
        return [u for _, u in self.candidates[:k]]

    def query_center(self, p: int) -> int:
        """Center of the configured solution sharing the deepest ancestor with p."""
        if not self._solution:
            raise InputError("no centers are open")
        for v in self.store.path(self.store.leaf_of(p)):
            below = self._below.get(v)
            if below:
                return below[0]
        raise AssertionError("solution centers not found under the root")

    def solution_cost(self, k: int | None = None) -> float:
        if not self.store.active_points():
            return 0.0
        if k is None or k == self.k:
            return sum(self.store.tree_distance(p, self.query_center(p))
                       for p in self.store.active_points())
        cs = self.centers(k)
        return sum(min(self.store.tree_distance(p, c) for c in cs) for p in self.store.active_points())
