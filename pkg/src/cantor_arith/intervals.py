"""Exact algebra on finite unions of closed intervals.

Endpoints are ``Fraction`` throughout.  Large Minkowski products are the hot
path of the whole library, so merging is done on integers scaled by a common
denominator (numpy when every value fits in int64, plain Python ints when it
does not); the result is converted back to fractions, so nothing is rounded.
"""

from __future__ import annotations

import bisect
from fractions import Fraction
from typing import Iterable, Iterator, NamedTuple, Sequence

import numpy as np

from .errors import EmptyOperandError, PreconditionError
from .rational import Q, RationalLike, common_denominator, rat_str

_INT64_SAFE = 2**62
_VECTOR_THRESHOLD = 256


class Interval(NamedTuple):
    lo: Fraction
    hi: Fraction

    @classmethod
    def of(cls, lo: RationalLike, hi: RationalLike) -> "Interval":
        lo, hi = Q(lo), Q(hi)
        if lo > hi:
            raise PreconditionError(f"interval endpoints out of order: [{lo}, {hi}]")
        return cls(lo, hi)

    @property
    def length(self) -> Fraction:
        return self.hi - self.lo

    def contains(self, x: Fraction) -> bool:
        return self.lo <= x <= self.hi

    def contains_interval(self, other: "Interval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def __str__(self) -> str:
        return f"[{rat_str(self.lo)}, {rat_str(self.hi)}]"


class IntervalSet:
    """Sorted, pairwise separated closed intervals.

    The constructor trusts its input; use :func:`normalize` for raw lists.
    """

    __slots__ = ("intervals", "_los")

    def __init__(self, intervals: Sequence[Interval] = ()):
        self.intervals: tuple[Interval, ...] = tuple(intervals)
        self._los: list[Fraction] | None = None

    @property
    def hull(self) -> Interval:
        if not self.intervals:
            raise EmptyOperandError("empty interval set has no hull")
        return Interval(self.intervals[0].lo, self.intervals[-1].hi)

    def __iter__(self) -> Iterator[Interval]:
        return iter(self.intervals)

    def __len__(self) -> int:
        return len(self.intervals)

    def __bool__(self) -> bool:
        return bool(self.intervals)

    def __getitem__(self, i):
        return self.intervals[i]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, IntervalSet):
            return NotImplemented
        return self.intervals == other.intervals

    def __hash__(self) -> int:
        return hash(self.intervals)

    def __repr__(self) -> str:
        body = ", ".join(str(iv) for iv in self.intervals[:6])
        more = f", ... ({len(self.intervals)} total)" if len(self.intervals) > 6 else ""
        return f"IntervalSet({{{body}{more}}})"

    def _index_of(self, x: Fraction) -> int:
        if self._los is None:
            self._los = [iv.lo for iv in self.intervals]
        return bisect.bisect_right(self._los, x) - 1

    def __contains__(self, x: object) -> bool:
        x = Q(x)  # type: ignore[arg-type]
        i = self._index_of(x)
        return i >= 0 and x <= self.intervals[i].hi

    def component_of(self, x: Fraction) -> Interval | None:
        i = self._index_of(Q(x))
        if i >= 0 and x <= self.intervals[i].hi:
            return self.intervals[i]
        return None

    def contains_interval(self, iv: Interval) -> bool:
        comp = self.component_of(iv.lo)
        return comp is not None and iv.hi <= comp.hi

    @property
    def total_length(self) -> Fraction:
        return sum((iv.hi - iv.lo for iv in self.intervals), Fraction(0))

    def endpoints(self) -> list[Fraction]:
        out: list[Fraction] = []
        for iv in self.intervals:
            out.append(iv.lo)
            out.append(iv.hi)
        return out

    def to_json(self) -> list[list[str]]:
        return [[rat_str(iv.lo), rat_str(iv.hi)] for iv in self.intervals]

    @classmethod
    def from_json(cls, data: Iterable[Sequence[RationalLike]]) -> "IntervalSet":
        return normalize([Interval.of(lo, hi) for lo, hi in data])


# ---------------------------------------------------------------------------
# merging


def _merge_sorted_pairs(pairs: list[tuple]) -> list[tuple]:
    out: list[list] = []
    for lo, hi in pairs:
        if out and lo <= out[-1][1]:
            if hi > out[-1][1]:
                out[-1][1] = hi
        else:
            out.append([lo, hi])
    return [(lo, hi) for lo, hi in out]


def _merge_int_arrays(lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    order = np.argsort(lo, kind="stable")
    lo = lo[order]
    hi = hi[order]
    run = np.maximum.accumulate(hi)
    starts = np.empty(lo.shape[0], dtype=bool)
    starts[0] = True
    starts[1:] = lo[1:] > run[:-1]
    first = np.flatnonzero(starts)
    last = np.append(first[1:] - 1, lo.shape[0] - 1)
    return lo[first], run[last]


def _merge_scaled(lo_int: list[int], hi_int: list[int], den: int) -> IntervalSet:
    if not lo_int:
        return IntervalSet()
    bound = max(max(map(abs, lo_int)), max(map(abs, hi_int)))
    if bound < _INT64_SAFE:
        mlo, mhi = _merge_int_arrays(np.asarray(lo_int, dtype=np.int64), np.asarray(hi_int, dtype=np.int64))
        merged = zip(mlo.tolist(), mhi.tolist())
    else:
        merged = _merge_sorted_pairs(sorted(zip(lo_int, hi_int)))
    return IntervalSet([Interval(Fraction(a, den), Fraction(b, den)) for a, b in merged])


def normalize(raw: Iterable[Interval | Sequence[RationalLike]]) -> IntervalSet:
    """Sort and merge overlapping or touching closed intervals."""
    items: list[Interval] = []
    for iv in raw:
        if not isinstance(iv, Interval):
            iv = Interval.of(*iv)
        elif iv.lo > iv.hi:
            raise PreconditionError(f"interval endpoints out of order: {iv}")
        items.append(iv)
    if len(items) <= _VECTOR_THRESHOLD:
        merged = _merge_sorted_pairs(sorted((iv.lo, iv.hi) for iv in items))
        return IntervalSet([Interval(lo, hi) for lo, hi in merged])
    den = common_denominator(x for iv in items for x in iv)
    lo_int = [iv.lo.numerator * (den // iv.lo.denominator) for iv in items]
    hi_int = [iv.hi.numerator * (den // iv.hi.denominator) for iv in items]
    return _merge_scaled(lo_int, hi_int, den)


def union(*sets: IntervalSet) -> IntervalSet:
    return normalize(iv for s in sets for iv in s)


# ---------------------------------------------------------------------------
# Minkowski arithmetic


def _scaled(A: IntervalSet, den: int) -> tuple[list[int], list[int]]:
    lo = [iv.lo.numerator * (den // iv.lo.denominator) for iv in A]
    hi = [iv.hi.numerator * (den // iv.hi.denominator) for iv in A]
    return lo, hi


def _minkowski(A: IntervalSet, B: IntervalSet, sign: int) -> IntervalSet:
    if not A or not B:
        raise EmptyOperandError("empty operand")
    if len(A) * len(B) <= _VECTOR_THRESHOLD:
        if sign < 0:
            raw = [Interval(a.lo - b.hi, a.hi - b.lo) for a in A for b in B]
        else:
            raw = [Interval(a.lo + b.lo, a.hi + b.hi) for a in A for b in B]
        return normalize(raw)
    den = common_denominator(A.endpoints() + B.endpoints())
    alo, ahi = _scaled(A, den)
    blo, bhi = _scaled(B, den)
    bound = max(map(abs, alo + ahi + blo + bhi))
    if 2 * bound < _INT64_SAFE:
        alo_a, ahi_a = np.asarray(alo, dtype=np.int64), np.asarray(ahi, dtype=np.int64)
        blo_a, bhi_a = np.asarray(blo, dtype=np.int64), np.asarray(bhi, dtype=np.int64)
        if sign < 0:
            lo = (alo_a[:, None] - bhi_a[None, :]).ravel()
            hi = (ahi_a[:, None] - blo_a[None, :]).ravel()
        else:
            lo = (alo_a[:, None] + blo_a[None, :]).ravel()
            hi = (ahi_a[:, None] + bhi_a[None, :]).ravel()
        mlo, mhi = _merge_int_arrays(lo, hi)
        return IntervalSet(
            [Interval(Fraction(x, den), Fraction(y, den)) for x, y in zip(mlo.tolist(), mhi.tolist())]
        )
    if sign < 0:
        pairs = [(x - v, y - u) for x, y in zip(alo, ahi) for u, v in zip(blo, bhi)]
    else:
        pairs = [(x + u, y + v) for x, y in zip(alo, ahi) for u, v in zip(blo, bhi)]
    merged = _merge_sorted_pairs(sorted(pairs))
    return IntervalSet([Interval(Fraction(x, den), Fraction(y, den)) for x, y in merged])


def minkowski_diff(A: IntervalSet, B: IntervalSet) -> IntervalSet:
    """``{x - y : x in A, y in B}``."""
    return _minkowski(A, B, -1)


def minkowski_sum(A: IntervalSet, B: IntervalSet) -> IntervalSet:
    return _minkowski(A, B, +1)


def gaps(A: IntervalSet) -> list[Interval]:
    """Bounded complementary intervals, as ``(c, d)`` records with closed endpoints."""
    ivs = A.intervals
    return [Interval(ivs[i].hi, ivs[i + 1].lo) for i in range(len(ivs) - 1)]


def affine_image(A: IntervalSet, scale: RationalLike, shift: RationalLike) -> IntervalSet:
    scale, shift = Q(scale), Q(shift)
    if scale == 0:
        raise PreconditionError("affine_image needs a non-zero scale")
    if scale > 0:
        return IntervalSet([Interval(scale * iv.lo + shift, scale * iv.hi + shift) for iv in A])
    return IntervalSet([Interval(scale * iv.hi + shift, scale * iv.lo + shift) for iv in reversed(A.intervals)])


def subtract(A: IntervalSet, B: IntervalSet) -> list[Interval]:
    """Closures of the pieces of ``A`` not covered by ``B``.

    Degenerate pieces are kept: a single uncovered point is still a mismatch.
    """
    out: list[Interval] = []
    bs = B.intervals
    j = 0
    for iv in A:
        while j < len(bs) and bs[j].hi < iv.lo:
            j += 1
        cur = iv.lo
        k = j
        while k < len(bs) and bs[k].lo <= iv.hi:
            if bs[k].lo > cur:
                out.append(Interval(cur, bs[k].lo))
            cur = max(cur, bs[k].hi)
            k += 1
        if cur < iv.hi or (cur == iv.hi and cur not in B):
            out.append(Interval(cur, iv.hi))
    return out


def symmetric_difference(A: IntervalSet, B: IntervalSet) -> list[Interval]:
    return sorted(subtract(A, B) + subtract(B, A))
