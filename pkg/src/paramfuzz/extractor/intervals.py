"""Finite unions of closed integer intervals."""

from __future__ import annotations

from typing import Iterable, Iterator


class IntervalSet:
    __slots__ = ("spans",)

    def __init__(self, spans: Iterable[tuple[int, int]] = ()) -> None:
        self.spans: tuple[tuple[int, int], ...] = _normalize(spans)

    @classmethod
    def range(cls, lo: int, hi: int) -> "IntervalSet":
        return cls([(lo, hi)]) if lo <= hi else cls()

    @classmethod
    def points(cls, values: Iterable[int]) -> "IntervalSet":
        return cls((v, v) for v in values)

    def __bool__(self) -> bool:
        return bool(self.spans)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, IntervalSet) and self.spans == other.spans

    def __hash__(self) -> int:
        return hash(self.spans)

    def __repr__(self) -> str:
        return "IntervalSet(" + ", ".join(f"[{a},{b}]" for a, b in self.spans) + ")"

    def __contains__(self, v: int) -> bool:
        for a, b in self.spans:
            if a <= v <= b:
                return True
            if v < a:
                return False
        return False

    def __or__(self, other: "IntervalSet") -> "IntervalSet":
        return IntervalSet(self.spans + other.spans)

    def __and__(self, other: "IntervalSet") -> "IntervalSet":
        out = []
        i = j = 0
        a, b = self.spans, other.spans
        while i < len(a) and j < len(b):
            lo = max(a[i][0], b[j][0])
            hi = min(a[i][1], b[j][1])
            if lo <= hi:
                out.append((lo, hi))
            if a[i][1] < b[j][1]:
                i += 1
            else:
                j += 1
        return IntervalSet(out)

    def __sub__(self, other: "IntervalSet") -> "IntervalSet":
        return self & other.complement_within(self.hull())

    def hull(self) -> "IntervalSet":
        if not self.spans:
            return IntervalSet()
        return IntervalSet.range(self.spans[0][0], self.spans[-1][1])

    def complement_within(self, universe: "IntervalSet") -> "IntervalSet":
        if not universe:
            return IntervalSet()
        lo, hi = universe.spans[0][0], universe.spans[-1][1]
        gaps = []
        cur = lo
        for a, b in self.spans:
            if b < lo or a > hi:
                continue
            if a > cur:
                gaps.append((cur, a - 1))
            cur = max(cur, b + 1)
        if cur <= hi:
            gaps.append((cur, hi))
        return IntervalSet(gaps) & universe

    @property
    def lo(self) -> int:
        return self.spans[0][0]

    @property
    def hi(self) -> int:
        return self.spans[-1][1]

    @property
    def contiguous(self) -> bool:
        return len(self.spans) == 1

    def size(self) -> int:
        return sum(b - a + 1 for a, b in self.spans)

    def __iter__(self) -> Iterator[int]:
        for a, b in self.spans:
            yield from range(a, b + 1)

    def nth(self, k: int) -> int:
        """The k-th smallest member (0-based)."""
        for a, b in self.spans:
            n = b - a + 1
            if k < n:
                return a + k
            k -= n
        raise IndexError(k)


def _normalize(spans: Iterable[tuple[int, int]]) -> tuple[tuple[int, int], ...]:
    items = sorted((a, b) for a, b in spans if a <= b)
    out: list[list[int]] = []
    for a, b in items:
        if out and a <= out[-1][1] + 1:
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])
    return tuple((a, b) for a, b in out)
