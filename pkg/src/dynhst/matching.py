"""Exact min-cost matchings on the maintained HST.

Every node v keeps the set ``up[v]`` of points that reach v unmatched and are
passed on to v's parent. A point arriving at v is matched against a
compatible point waiting in ``up[v]`` (opposite colour for bipartite, anyone
for general matching) or joins ``up[v]``. A point leaving v either just
leaves ``up[v]`` or breaks its pair at v, in which case its partner is
rematched from ``up[v]`` or becomes a newcomer at the parent. Pairs formed at
v cost the tree distance of two leaves meeting at v. Ties pick the smallest
point id.
"""

from __future__ import annotations

from .embedding import lca_distance
from .geometry import InputError
from .hst import HstStore, Type1

RED, BLUE = "A", "B"


class TreeMatching:
    def __init__(self, store: HstStore, mode: str = "bipartite", consumer: str | None = None):
        if mode not in ("bipartite", "general"):
            raise InputError(f"unknown matching mode {mode!r}")
        self.store = store
        self.m = store.m
        self.mode = mode
        self.consumer = consumer or f"matching-{mode}"
        self.color: dict[int, str] = {}
        self.placed: dict[int, int] = {}
        self.up: dict[int, set[int]] = {}
        self.mate: dict[int, int] = {}
        self.match_node: dict[int, int] = {}
        self.cost = 0.0
        self.work = 0
        store.subscribe(self.consumer)

    # -- instance updates -------------------------------------------------------

    def bm_insert(self, p: int, color: str) -> None:
        if self.mode != "bipartite":
            raise InputError("bm_insert needs bipartite mode")
        if color not in (RED, BLUE):
            raise InputError(f"colour must be {RED!r} or {BLUE!r}")
        self._add(p, color)

    def bm_delete(self, p: int) -> None:
        if self.mode != "bipartite":
            raise InputError("bm_delete needs bipartite mode")
        self._remove(p)

    def gm_insert(self, p: int) -> None:
        if self.mode != "general":
            raise InputError("gm_insert needs general mode")
        self._add(p, "")

    def gm_delete(self, p: int) -> None:
        if self.mode != "general":
            raise InputError("gm_delete needs general mode")
        self._remove(p)

    def _add(self, p: int, color: str) -> None:
        if p in self.color:
            raise InputError(f"point {p} is already in the matching instance")
        self.color[p] = color
        if self.store.has_point(p):
            self._place(p, self.store.leaf_of(p))

    def _remove(self, p: int) -> None:
        if p not in self.color:
            raise InputError(f"point {p} is not in the matching instance")
        if p in self.placed:
            self._unplace(p)
        del self.color[p]

    # -- tree events ------------------------------------------------------------

    def sync(self) -> None:
        for e in self.store.drain(self.consumer):
            if isinstance(e, Type1):
                if e.point in self.placed:
                    self._unplace(e.point)
            elif e.point in self.color and e.point not in self.placed:
                self._place(e.point, e.leaf)

    def _place(self, p: int, leaf: int) -> None:
        self.placed[p] = leaf
        self._arrive(p, leaf)

    def _unplace(self, p: int) -> None:
        self._leave(p, self.placed.pop(p))

    # -- pass-up walks -------------------------------------------------------------

    def _compatible(self, a: int, b: int) -> bool:
        return self.mode == "general" or self.color[a] != self.color[b]

    def _pair(self, a: int, b: int, v: int) -> None:
        self.mate[a], self.mate[b] = b, a
        self.match_node[a] = self.match_node[b] = v
        self.cost += lca_distance(self.m, self.store.level(v) + 1)

    def _unpair(self, a: int) -> int:
        b = self.mate.pop(a)
        del self.mate[b]
        v = self.match_node.pop(a)
        del self.match_node[b]
        self.cost -= lca_distance(self.m, self.store.level(v) + 1)
        return b

    def _arrive(self, x: int, v: int) -> None:
        """x reaches leaf v unmatched."""
        self._walk(v, x, None)

    def _leave(self, x: int, v: int) -> None:
        """x disappears from leaf v."""
        self._walk(v, None, x)

    def _walk(self, v: int, arriving: int | None, leaving: int | None) -> None:
        # Exactly one of arriving / leaving is set at each node. New pairs are
        # recorded first and formed after the walk: a point taken from a
        # waiting set may still be paired higher up, and that pair has to be
        # broken by the walk before the point gets its new partner.
        pending: list[tuple[int, int, int]] = []
        while v != -1 and (arriving is not None or leaving is not None):
            self.work += 1
            waiting = self.up.setdefault(v, set())
            if arriving is not None:
                s = self._take(waiting, arriving)
                if s is None:
                    waiting.add(arriving)
                else:
                    pending.append((arriving, s, v))
                    arriving, leaving = None, s
            elif leaving in waiting:
                waiting.discard(leaving)
            else:
                if self.match_node.get(leaving) != v:
                    raise AssertionError(f"point {leaving} is neither waiting nor matched at node {v}")
                y = self._unpair(leaving)
                s = self._take(waiting, y)
                if s is None:
                    waiting.add(y)
                    arriving, leaving = y, None
                else:
                    pending.append((y, s, v))
                    leaving = s
            v = self.store.parent(v)
        for a, b, node in pending:
            self._pair(a, b, node)

    def _take(self, waiting: set[int], x: int) -> int | None:
        """Remove and return the smallest waiting point that can pair with x."""
        match = [s for s in waiting if self._compatible(x, s)]
        if not match:
            return None
        s = min(match)
        waiting.discard(s)
        return s

    # -- queries ----------------------------------------------------------------------

    def matching_cost(self) -> float:
        return self.cost

    def partner(self, p: int) -> int | None:
        return self.mate.get(p)

    def unmatched(self) -> list[int]:
        return sorted(p for p in self.placed if p not in self.mate)

    def recompute_cost(self) -> float:
        pairs = {(min(a, b), max(a, b)) for a, b in self.mate.items()}
        return sum(self.store.tree_distance(a, b) for a, b in pairs)

    def check_invariants(self) -> None:
        """Scan every node: the waiting set is exactly the unmatched surplus below it."""
        below: dict[int, list[int]] = {}
        for p, leaf in self.placed.items():
            for v in self.store.path(leaf):
                below.setdefault(v, []).append(p)
        for v in set(below) | {v for v, s in self.up.items() if s}:
            pts = below.get(v, [])
            waiting = self.up.get(v, set())
            if not waiting <= set(pts):
                raise AssertionError(f"node {v} passes up points outside its subtree")
            inside = set(pts)
            internal = {p for p in pts if p in self.mate and self.mate[p] in inside}
            if internal | waiting != inside or internal & waiting:
                raise AssertionError(f"node {v}: matched-inside and waiting sets do not partition")
            if self.mode == "bipartite":
                reds = sum(1 for p in pts if self.color[p] == RED)
                if len(waiting) != abs(2 * reds - len(pts)):
                    raise AssertionError(f"node {v}: surplus size is not |A(v) - B(v)|")
                if len({self.color[p] for p in waiting}) > 1:
                    raise AssertionError(f"node {v}: surplus is not monochromatic")
            elif len(waiting) != len(pts) % 2:
                raise AssertionError(f"node {v}: waiting set size is not the parity of P(v)")
        for a, b in self.mate.items():
            if self.mate.get(b) != a:
                raise AssertionError("mate map is not an involution")
            if self.mode == "bipartite" and self.color[a] == self.color[b]:
                raise AssertionError("bipartite pair with equal colours")
