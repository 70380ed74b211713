"""Line-oriented point and update traces.

Grammar (one operation per line, ``#`` starts a comment line)::

    I  <id> <x1> ... <xd>                      insert a point
    D  <id>                                    delete a point
    IP <idA> <xA1..xAd> <idB> <xB1..xBd>       insert a red/blue pair
    DP <idA> <idB>                             delete a pair
    W  <id> <weight>                           set a signed integer weight
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, TextIO

from .geometry import InputError, Point


class TraceError(InputError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class Op:
    kind: str
    line: int
    ids: tuple[int, ...]
    coords: tuple[tuple[float, ...], ...] = ()
    weight: int = 0

    def points(self) -> list[Point]:
        return [Point(i, c) for i, c in zip(self.ids, self.coords)]


def _int(tok: str, line: int, what: str) -> int:
    try:
        return int(tok)
    except ValueError:
        raise TraceError(line, f"bad {what} {tok!r}") from None


def _coords(toks: list[str], line: int) -> tuple[float, ...]:
    try:
        return tuple(float(t) for t in toks)
    except ValueError:
        raise TraceError(line, "bad coordinate") from None


def parse_line(text: str, line: int, dim: int | None = None) -> Op | None:
    toks = text.split()
    if not toks or toks[0].startswith("#"):
        return None
    kind, rest = toks[0], toks[1:]
    if kind == "I":
        if len(rest) < 2:
            raise TraceError(line, "insert needs an id and coordinates")
        c = _coords(rest[1:], line)
        if dim is not None and len(c) != dim:
            raise TraceError(line, f"expected {dim} coordinates, got {len(c)}")
        return Op("I", line, (_int(rest[0], line, "id"),), (c,))
    if kind == "D":
        if len(rest) != 1:
            raise TraceError(line, "delete needs exactly one id")
        return Op("D", line, (_int(rest[0], line, "id"),))
    if kind == "IP":
        if len(rest) < 4 or len(rest) % 2:
            raise TraceError(line, "pair insert needs two ids with equal-length coordinates")
        d = len(rest) // 2 - 1
        if dim is not None and d != dim:
            raise TraceError(line, f"expected {dim} coordinates per point, got {d}")
        a, b = rest[: d + 1], rest[d + 1:]
        return Op("IP", line, (_int(a[0], line, "id"), _int(b[0], line, "id")),
                  (_coords(a[1:], line), _coords(b[1:], line)))
    if kind == "DP":
        if len(rest) != 2:
            raise TraceError(line, "pair delete needs exactly two ids")
        return Op("DP", line, (_int(rest[0], line, "id"), _int(rest[1], line, "id")))
    if kind == "W":
        if len(rest) != 2:
            raise TraceError(line, "weight needs an id and an integer")
        return Op("W", line, (_int(rest[0], line, "id"),), weight=_int(rest[1], line, "weight"))
    raise TraceError(line, f"unknown operation {kind!r}")


def parse_trace(lines: Iterable[str], dim: int | None = None) -> Iterator[Op]:
    for no, text in enumerate(lines, start=1):
        op = parse_line(text, no, dim)
        if op is not None:
            yield op


def read_points(stream: TextIO, dim: int | None = None) -> list[Point]:
    """Points of a file made of ``I`` lines (other operations are rejected)."""
    pts = []
    seen = set()
    for op in parse_trace(stream, dim):
        if op.kind != "I":
            raise TraceError(op.line, "point files may only contain insert lines")
        if op.ids[0] in seen:
            raise TraceError(op.line, f"duplicate id {op.ids[0]}")
        seen.add(op.ids[0])
        pts.extend(op.points())
    if pts and len({p.dim for p in pts}) != 1:
        raise InputError("points have mixed dimensions")
    return pts


def format_insert(p: Point) -> str:
    return "I " + " ".join([str(p.id)] + [repr(float(c)) for c in p.coords])


def write_points(points: Iterable[Point], stream: TextIO) -> None:
    for p in points:
        stream.write(format_insert(p) + "\n")
