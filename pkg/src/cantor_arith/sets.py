"""Affine Cantor sets: general IFS form, the two-map family, coverings.

An :class:`AffineIFS` is a list of increasing maps ``x -> r*x + t`` acting on
the hull ``[0, a]``.  A :class:`TwoMapCantorSet` is the special two-branch
family parameterised by the expansion factors ``(p0, p1)`` and hull length
``a``; it converts to an IFS with ratios ``(1/p0, 1/p1)``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Any, Iterable, Sequence, Union

from .errors import BudgetExceeded, ConfigError, GapConditionError, PreconditionError, VerificationError
from .intervals import Interval, IntervalSet, minkowski_diff, normalize
from .rational import Q, RationalLike, rat_str

DEFAULT_BUDGET = 2**22


def default_budget() -> int:
    env = os.environ.get("CANTOR_ARITH_BUDGET")
    if env:
        try:
            value = int(env)
        except ValueError as exc:
            raise ConfigError(f"CANTOR_ARITH_BUDGET is not an integer: {env!r}") from exc
        if value <= 0:
            raise ConfigError("CANTOR_ARITH_BUDGET must be positive")
        return value
    return DEFAULT_BUDGET


# ---------------------------------------------------------------------------
# general IFS


@dataclass(frozen=True)
class Map:
    r: Fraction
    t: Fraction

    def __call__(self, x: Fraction) -> Fraction:
        return self.r * x + self.t

    @property
    def fixed_point(self) -> Fraction:
        return self.t / (1 - self.r)


@dataclass(frozen=True)
class AffineIFS:
    a: Fraction
    maps: tuple[Map, ...]

    @classmethod
    def of(cls, a: RationalLike, maps: Iterable[tuple[RationalLike, RationalLike]]) -> "AffineIFS":
        ms = tuple(sorted((Map(Q(r), Q(t)) for r, t in maps), key=lambda m: m.t))
        return cls(Q(a), ms)

    @property
    def ratios(self) -> list[Fraction]:
        return [m.r for m in self.maps]

    @property
    def shifts(self) -> list[Fraction]:
        return [m.t for m in self.maps]

    @property
    def hull(self) -> Interval:
        return Interval(Fraction(0), self.a)

    def to_ifs(self) -> "AffineIFS":
        return self

    def word_map(self, word: Sequence[int]) -> tuple[Fraction, Fraction]:
        """``(scale, shift)`` of ``f_{w0} o f_{w1} o ... o f_{wk-1}``."""
        scale, shift = Fraction(1), Fraction(0)
        for i in word:
            m = self.maps[i]
            shift = shift + scale * m.t
            scale = scale * m.r
        return scale, shift

    def cylinder(self, word: Sequence[int]) -> Interval:
        scale, shift = self.word_map(word)
        return Interval(shift, shift + scale * self.a)

    def reflect(self) -> "AffineIFS":
        """The IFS generating ``a - K``."""
        return AffineIFS.of(self.a, [(m.r, self.a - m.t - m.r * self.a) for m in self.maps])

    def to_json(self) -> dict[str, Any]:
        return {
            "type": "ifs",
            "a": rat_str(self.a),
            "maps": [{"r": rat_str(m.r), "t": rat_str(m.t)} for m in self.maps],
        }


@dataclass(frozen=True)
class Violation:
    kind: str  # "ratio", "hull", "overlap", "count"
    message: str
    index: int | None = None

    def __str__(self) -> str:
        return self.message


def validate(ifs: AffineIFS, min_maps: int = 2) -> Violation | None:
    """Return the first violated IFS condition, or ``None`` if the IFS is fine."""
    if ifs.a <= 0:
        return Violation("hull", f"hull length must be positive, got {ifs.a}")
    if len(ifs.maps) < min_maps:
        return Violation("count", f"need at least {min_maps} maps, got {len(ifs.maps)}")
    for i, m in enumerate(ifs.maps):
        if not 0 < m.r < 1:
            return Violation("ratio", f"ratio {m.r} of map {i} is not in (0, 1)", i)
    for i, m in enumerate(ifs.maps):
        lo, hi = m.t, m.t + m.r * ifs.a
        if lo < 0 or hi > ifs.a:
            return Violation("hull", f"image exits hull: [{lo}, {hi}] not inside [0, {ifs.a}]", i)
    for i in range(len(ifs.maps) - 1):
        left, right = ifs.maps[i], ifs.maps[i + 1]
        if left.t + left.r * ifs.a >= right.t:
            return Violation("overlap", f"images touch/overlap: maps {i} and {i + 1}", i)
    return None


def require_valid(ifs: AffineIFS, min_maps: int = 2) -> None:
    v = validate(ifs, min_maps)
    if v is not None:
        raise PreconditionError(str(v))


# ---------------------------------------------------------------------------
# coverings


@dataclass
class Covering:
    """Cylinder intervals of an IFS.

    ``cells`` holds ``(lo, scale)``; the cylinder is ``[lo, lo + scale*a]``.
    ``words`` is parallel to ``cells`` when annotations were requested.
    """

    a: Fraction
    cells: list[tuple[Fraction, Fraction]]
    words: list[tuple[int, ...]] | None = None

    def __len__(self) -> int:
        return len(self.cells)

    @property
    def intervals(self) -> list[Interval]:
        a = self.a
        return [Interval(lo, lo + sc * a) for lo, sc in self.cells]

    @cached_property
    def set(self) -> IntervalSet:
        return normalize(self.intervals)


def _check_budget(n: int, budget: int | None) -> None:
    limit = default_budget() if budget is None else budget
    if n > limit:
        raise BudgetExceeded(n, limit)


def level_covering(
    ifs: Any, k: int, budget: int | None = None, annotate: bool = True
) -> Covering:
    """All ``M**k`` cylinders of generation ``k``."""
    ifs = ifs.to_ifs()
    if k < 0:
        raise PreconditionError("level must be nonnegative")
    _check_budget(len(ifs.maps) ** k, budget)
    cells = [(Fraction(0), Fraction(1))]
    words: list[tuple[int, ...]] | None = [()] if annotate else None
    for _ in range(k):
        nxt = []
        nwords = [] if annotate else None
        for idx, (lo, sc) in enumerate(cells):
            for i, m in enumerate(ifs.maps):
                nxt.append((lo + sc * m.t, sc * m.r))
                if nwords is not None:
                    nwords.append(words[idx] + (i,))  # type: ignore[index]
        cells, words = nxt, nwords
    return Covering(ifs.a, cells, words)


def level_set(ifs: Any, k: int, budget: int | None = None) -> IntervalSet:
    return level_covering(ifs, k, budget, annotate=False).set


def refine_to_scale(
    ifs: Any, delta: RationalLike, budget: int | None = None, annotate: bool = False
) -> Covering:
    """Expand each cylinder until its length is at most ``delta``."""
    ifs = ifs.to_ifs()
    delta = Q(delta)
    if delta <= 0:
        raise PreconditionError("delta must be positive")
    limit = default_budget() if budget is None else budget
    a = ifs.a
    out: list[tuple[Fraction, Fraction]] = []
    out_words: list[tuple[int, ...]] = []
    # stack entries (lo, scale, word); pushed in reverse so output is left to right
    stack: list[tuple[Fraction, Fraction, tuple[int, ...]]] = [(Fraction(0), Fraction(1), ())]
    maps = ifs.maps
    while stack:
        lo, sc, w = stack.pop()
        if sc * a <= delta:
            out.append((lo, sc))
            if annotate:
                out_words.append(w)
            if len(out) > limit:
                raise BudgetExceeded(len(out), limit)
            continue
        for i in range(len(maps) - 1, -1, -1):
            m = maps[i]
            stack.append((lo + sc * m.t, sc * m.r, w + (i,) if annotate else ()))
        if len(stack) + len(out) > limit:
            raise BudgetExceeded(len(stack) + len(out), limit)
    return Covering(a, out, out_words if annotate else None)


# ---------------------------------------------------------------------------
# the two-map family


@dataclass(frozen=True)
class TwoMapCantorSet:
    p0: Fraction
    p1: Fraction
    a: Fraction

    @property
    def e0(self) -> Fraction:
        return Fraction(0)

    @property
    def e1(self) -> Fraction:
        return self.a - self.p1 * self.a

    @property
    def e(self) -> tuple[Fraction, Fraction]:
        return (self.e0, self.e1)

    @property
    def p(self) -> tuple[Fraction, Fraction]:
        return (self.p0, self.p1)

    @property
    def I0(self) -> Interval:
        return Interval(Fraction(0), self.a / self.p0)

    @property
    def I1(self) -> Interval:
        return Interval(self.a - self.a / self.p1, self.a)

    @property
    def G(self) -> Fraction:
        return self.a - self.a / self.p0 - self.a / self.p1

    def to_ifs(self) -> AffineIFS:
        return AffineIFS(self.a, (Map(1 / self.p0, Fraction(0)), Map(1 / self.p1, self.a - self.a / self.p1)))

    def to_json(self) -> dict[str, Any]:
        return {"type": "two_map", "p0": rat_str(self.p0), "p1": rat_str(self.p1), "a": rat_str(self.a)}

    def __str__(self) -> str:
        return f"({rat_str(self.p0)},{rat_str(self.p1)},{rat_str(self.a)})"


def two_map(p0: RationalLike, p1: RationalLike, a: RationalLike = 1) -> TwoMapCantorSet:
    p0, p1, a = Q(p0), Q(p1), Q(a)
    if p0 <= 1 or p1 <= 1:
        raise PreconditionError(f"expansion factors must exceed 1, got {p0}, {p1}")
    if a <= 0:
        raise PreconditionError(f"hull length must be positive, got {a}")
    K = TwoMapCantorSet(p0, p1, a)
    if K.G <= 0:
        raise GapConditionError(f"gap condition violated: G = {K.G}")
    return K


def thickness(K: TwoMapCantorSet) -> tuple[Fraction, Fraction]:
    """``(tau_L, tau_R)``: first-level interval lengths over the central gap."""
    G = K.G
    return (K.a / K.p0) / G, (K.a / K.p1) / G


def reflect(K: TwoMapCantorSet) -> TwoMapCantorSet:
    """``a - K``; the two branches trade places."""
    return TwoMapCantorSet(K.p1, K.p0, K.a)


@dataclass(frozen=True)
class CantorPair:
    K: TwoMapCantorSet
    Kp: TwoMapCantorSet

    @property
    def a(self) -> Fraction:
        return self.K.a

    @property
    def b(self) -> Fraction:
        return self.Kp.a

    @property
    def q(self) -> tuple[Fraction, Fraction]:
        return self.Kp.p

    @property
    def f(self) -> tuple[Fraction, Fraction]:
        return self.Kp.e

    @property
    def s0(self) -> Fraction:
        return self.K.a / self.Kp.G

    @property
    def s1(self) -> Fraction:
        return self.K.G / self.Kp.a

    def swapped(self) -> "CantorPair":
        return CantorPair(self.Kp, self.K)

    def to_json(self) -> dict[str, Any]:
        return {"K": self.K.to_json(), "Kp": self.Kp.to_json()}

    def __str__(self) -> str:
        return f"{self.K}x{self.Kp}"


def pair(K: Any, Kp: Any) -> CantorPair:
    if not isinstance(K, TwoMapCantorSet):
        K = two_map(*K)
    if not isinstance(Kp, TwoMapCantorSet):
        Kp = two_map(*Kp)
    return CantorPair(K, Kp)


@dataclass(frozen=True)
class AffineMap:
    alpha: Fraction = Fraction(1)
    beta: Fraction = Fraction(0)

    def __call__(self, x: Fraction) -> Fraction:
        return self.alpha * x + self.beta

    def __str__(self) -> str:
        return f"x -> {rat_str(self.alpha)}*x + {rat_str(self.beta)}"


def _true_hull(ifs: AffineIFS) -> Interval:
    return Interval(ifs.maps[0].fixed_point, ifs.maps[-1].fixed_point)


def _cover_on(ifs: AffineIFS, hull: Interval, k: int) -> IntervalSet:
    cells = [(hull.lo, hull.hi)]
    for _ in range(k):
        cells = [(m(lo), m(hi)) for lo, hi in cells for m in ifs.maps]
    return normalize([Interval(lo, hi) for lo, hi in cells])


def normalize_pair(A: AffineIFS, B: AffineIFS, verify_depth: int = 4) -> tuple[CantorPair, AffineMap]:
    """Bring two 2-map IFSs into the two-map family.

    Returns ``(pair, phi)`` with ``attractor(A) - attractor(B) = phi(K - K')``.
    """
    sets = []
    for name, X in (("first", A), ("second", B)):
        if len(X.maps) != 2:
            raise PreconditionError(f"{name} IFS must have exactly two maps")
        if any(m.r <= 0 for m in X.maps):
            raise PreconditionError(f"{name} IFS maps must be increasing")
        require_valid(X)
        hull = _true_hull(X)
        sets.append((hull, two_map(1 / X.maps[0].r, 1 / X.maps[1].r, hull.hi - hull.lo)))
    (hA, K), (hB, Kp) = sets
    phi = AffineMap(Fraction(1), hA.lo - hB.lo)
    P = CantorPair(K, Kp)
    if verify_depth > 0:
        lhs = minkowski_diff(_cover_on(A, hA, verify_depth), _cover_on(B, hB, verify_depth))
        base = minkowski_diff(level_set(K, verify_depth), level_set(Kp, verify_depth))
        rhs = IntervalSet([Interval(phi(iv.lo), phi(iv.hi)) for iv in base])
        if lhs != rhs:
            raise VerificationError("normalized pair does not reproduce the difference covering")
    return P, phi


# ---------------------------------------------------------------------------
# JSON set specs

SetLike = Union[TwoMapCantorSet, AffineIFS]


def set_from_json(spec: Any) -> SetLike:
    if not isinstance(spec, dict):
        raise ConfigError("set spec must be an object")
    kind = spec.get("type")
    try:
        if kind == "two_map":
            extra = set(spec) - {"type", "p0", "p1", "a"}
            if extra:
                raise ConfigError(f"unknown keys in two_map spec: {sorted(extra)}")
            return two_map(spec["p0"], spec["p1"], spec.get("a", "1"))
        if kind == "ifs":
            extra = set(spec) - {"type", "a", "maps"}
            if extra:
                raise ConfigError(f"unknown keys in ifs spec: {sorted(extra)}")
            maps = []
            for m in spec["maps"]:
                if set(m) - {"r", "t"}:
                    raise ConfigError(f"unknown keys in map spec: {sorted(set(m) - {'r', 't'})}")
                maps.append((m["r"], m["t"]))
            ifs = AffineIFS.of(spec.get("a", "1"), maps)
            v = validate(ifs, min_maps=1)
            if v is not None:
                raise ConfigError(f"invalid IFS: {v}")
            return ifs
    except KeyError as exc:
        raise ConfigError(f"missing key {exc.args[0]!r} in set spec") from exc
    except (ValueError, ZeroDivisionError, TypeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad set spec: {exc}") from exc
    raise ConfigError(f"unknown set type {kind!r}")


def as_two_map(X: SetLike) -> TwoMapCantorSet:
    """Convert a 2-map IFS whose hull is ``[0, a]`` exactly; otherwise normalise."""
    if isinstance(X, TwoMapCantorSet):
        return X
    if len(X.maps) != 2:
        raise PreconditionError("operation needs a two-map set")
    hull = _true_hull(X)
    if hull.lo != 0:
        raise PreconditionError("IFS attractor does not start at 0; use normalize_pair")
    return two_map(1 / X.maps[0].r, 1 / X.maps[1].r, hull.hi)
