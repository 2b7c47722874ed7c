"""Renormalization dynamics in the ``(s, t)`` plane.

For a pair ``(K, K')`` the point ``(s, t)`` is a difference pair exactly when
``t`` lies in ``K - s*K'``.  Since ``K`` is the union of its two first-level
pieces, ``(s, t)`` is a difference pair iff one of ``T_0(s,t)``, ``T_1(s,t)`` is,
and likewise for the primed operators.  That gives:

* a point outside the strip ``-b*s <= t <= a`` is never a difference pair;
* NO for a point follows when *both* children of one operator family are NO;
* YES follows from any YES child, from an exact revisit of an ancestor
  (periodic orbit), from landing on a trivially realised value of ``t``, or
  from reaching the full-interval region of a pair that has it.

Operator words are written over ``A, B, a, b`` for ``T_0, T_1, T'_0, T'_1``.
A NO certificate is a tree in the grammar ``node := "." | "A" node "B" node |
"a" node "b" node`` where ``.`` is a leaf that has left the strip.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Callable, Sequence, Union

from .dimension import GammaDecomposition, ext_gcd, gamma_decomposition
from .errors import PreconditionError, UnsupportedCase, VerificationError
from .intervals import Interval, normalize
from .rational import Q, RationalLike, rat_str
from .sets import CantorPair, TwoMapCantorSet

LETTERS = "ABab"


# ---------------------------------------------------------------------------
# plane objects


@dataclass(frozen=True)
class PlanePoint:
    s: Fraction
    t: Fraction

    @classmethod
    def of(cls, s: RationalLike, t: RationalLike) -> "PlanePoint":
        s, t = Q(s), Q(t)
        if s <= 0:
            raise PreconditionError("s must be positive")
        return cls(s, t)

    def to_json(self) -> list[str]:
        return [rat_str(self.s), rat_str(self.t)]


@dataclass(frozen=True)
class PlaneBox:
    s_lo: Fraction
    s_hi: Fraction
    t_lo: Fraction
    t_hi: Fraction

    @classmethod
    def of(cls, s_range: Sequence[RationalLike], t_range: Sequence[RationalLike]) -> "PlaneBox":
        s_lo, s_hi = Q(s_range[0]), Q(s_range[1])
        t_lo, t_hi = Q(t_range[0]), Q(t_range[1])
        if not 0 < s_lo <= s_hi or t_lo > t_hi:
            raise PreconditionError("box needs 0 < s_lo <= s_hi and t_lo <= t_hi")
        return cls(s_lo, s_hi, t_lo, t_hi)

    @classmethod
    def around(cls, s: RationalLike, t: RationalLike, eps: RationalLike) -> "PlaneBox":
        s, t, eps = Q(s), Q(t), Q(eps)
        return cls.of((s - eps, s + eps), (t - eps, t + eps))

    @property
    def s_range(self) -> Interval:
        return Interval(self.s_lo, self.s_hi)

    @property
    def t_range(self) -> Interval:
        return Interval(self.t_lo, self.t_hi)

    def contains_box(self, other: "PlaneBox") -> bool:
        return (
            self.s_lo <= other.s_lo
            and other.s_hi <= self.s_hi
            and self.t_lo <= other.t_lo
            and other.t_hi <= self.t_hi
        )

    def to_json(self) -> dict[str, list[str]]:
        return {"s": [rat_str(self.s_lo), rat_str(self.s_hi)], "t": [rat_str(self.t_lo), rat_str(self.t_hi)]}


# ---------------------------------------------------------------------------
# context and operators


@dataclass(frozen=True)
class Lemma1Result:
    holds: bool
    lhs: Fraction  # max(p0*q1, p1*q0)
    rhs: Fraction  # s0/s1
    R: PlaneBox  # s-range [s1, s0]; t bounded by -b*s <= t <= a

    def in_region(self, pair: CantorPair, p: PlanePoint) -> bool:
        return self.R.s_lo <= p.s <= self.R.s_hi and -pair.b * p.s <= p.t <= pair.a


def lemma1_check(pair: CantorPair) -> Lemma1Result:
    p0, p1 = pair.K.p
    q0, q1 = pair.q
    lhs = max(p0 * q1, p1 * q0)
    rhs = pair.s0 / pair.s1
    R = PlaneBox(pair.s1, pair.s0, -pair.b * pair.s0, pair.a)
    return Lemma1Result(lhs <= rhs, lhs, rhs, R)


@dataclass
class DiffPairContext:
    pair: CantorPair
    depth_cap: int = 64
    node_budget: int = 200_000
    sigma_lo: Fraction = field(init=False)
    sigma_hi: Fraction = field(init=False)
    lemma1: Lemma1Result = field(init=False)

    def __post_init__(self) -> None:
        P = self.pair
        self.sigma_lo = P.s1 / max(P.K.p)
        self.sigma_hi = P.s0 * max(P.q)
        self.lemma1 = lemma1_check(P)

    def families(self, s_lo: Fraction, s_hi: Fraction) -> list[str]:
        if s_lo > self.sigma_hi:
            return ["ab"]
        if s_hi < self.sigma_lo:
            return ["AB"]
        return ["AB", "ab"]


def make_context(pair: CantorPair, depth_cap: int = 64, node_budget: int = 200_000) -> DiffPairContext:
    return DiffPairContext(pair, depth_cap, node_budget)


def _pair_of(ctx: DiffPairContext | CantorPair) -> CantorPair:
    return ctx.pair if isinstance(ctx, DiffPairContext) else ctx


def apply_T(ctx: DiffPairContext | CantorPair, i: int, p: PlanePoint) -> PlanePoint:
    K = _pair_of(ctx).K
    pi, ei = K.p[i], K.e[i]
    return PlanePoint(pi * p.s, pi * p.t + ei)


def apply_Tprime(ctx: DiffPairContext | CantorPair, j: int, p: PlanePoint) -> PlanePoint:
    Kp = _pair_of(ctx).Kp
    qj, fj = Kp.p[j], Kp.e[j]
    return PlanePoint(p.s / qj, p.t - fj * p.s / qj)


def apply_T_inv(ctx: DiffPairContext | CantorPair, i: int, p: PlanePoint) -> PlanePoint:
    K = _pair_of(ctx).K
    pi, ei = K.p[i], K.e[i]
    return PlanePoint(p.s / pi, (p.t - ei) / pi)


def apply_Tprime_inv(ctx: DiffPairContext | CantorPair, j: int, p: PlanePoint) -> PlanePoint:
    Kp = _pair_of(ctx).Kp
    qj, fj = Kp.p[j], Kp.e[j]
    return PlanePoint(qj * p.s, p.t + fj * p.s)


def apply_letter(ctx: DiffPairContext | CantorPair, letter: str, p: PlanePoint) -> PlanePoint:
    if letter == "A":
        return apply_T(ctx, 0, p)
    if letter == "B":
        return apply_T(ctx, 1, p)
    if letter == "a":
        return apply_Tprime(ctx, 0, p)
    if letter == "b":
        return apply_Tprime(ctx, 1, p)
    raise ValueError(f"unknown operator letter {letter!r}")


def apply_word(ctx: DiffPairContext | CantorPair, word: str, p: PlanePoint) -> PlanePoint:
    for c in word:
        p = apply_letter(ctx, c, p)
    return p


def apply_letter_box(ctx: DiffPairContext | CantorPair, letter: str, B: PlaneBox) -> PlaneBox:
    """Exact image for ``T_i``; bounding box of the sheared image for ``T'_j``."""
    P = _pair_of(ctx)
    if letter in "AB":
        i = "AB".index(letter)
        pi, ei = P.K.p[i], P.K.e[i]
        return PlaneBox(pi * B.s_lo, pi * B.s_hi, pi * B.t_lo + ei, pi * B.t_hi + ei)
    if letter in "ab":
        j = "ab".index(letter)
        qj, fj = P.Kp.p[j], P.Kp.e[j]
        c = -fj / qj  # >= 0, so the extreme corners are (s_lo, t_lo) and (s_hi, t_hi)
        return PlaneBox(B.s_lo / qj, B.s_hi / qj, B.t_lo + c * B.s_lo, B.t_hi + c * B.s_hi)
    raise ValueError(f"unknown operator letter {letter!r}")


def in_strip(pair: CantorPair, p: PlanePoint) -> bool:
    return -pair.b * p.s <= p.t <= pair.a


def box_escapes(pair: CantorPair, B: PlaneBox) -> bool:
    """Every point of the box is outside the strip ``-b*s <= t <= a``."""
    return B.t_lo > pair.a or B.t_hi < -pair.b * B.s_hi


def endpoint_values(pair: CantorPair, s: Fraction) -> tuple[Fraction, ...]:
    """Values of ``t`` realised by hull endpoints: ``{a, 0} - s*{0, b}``."""
    a, b = pair.a, pair.b
    return (a, Fraction(0), a - b * s, -b * s)


# ---------------------------------------------------------------------------
# certificates


class Verdict(str, Enum):
    YES = "yes"
    NO = "no"
    UNKNOWN = "unknown"


@dataclass
class Certificate:
    verdict: Verdict
    point: PlanePoint | None = None
    box: PlaneBox | None = None
    word: str = ""
    terminal: str = ""  # region | periodic | endpoint | escape | depth-exhausted | budget-exhausted
    cycle_start: int | None = None
    tree: str | None = None
    nodes: int = 0
    depth_cap: int = 0

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {"verdict": self.verdict.value, "terminal": self.terminal}
        if self.point is not None:
            out["point"] = self.point.to_json()
        if self.box is not None:
            out["box"] = self.box.to_json()
        if self.verdict is Verdict.YES:
            out["word"] = self.word
            if self.cycle_start is not None:
                out["cycle_start"] = self.cycle_start
        if self.tree is not None:
            out["tree"] = self.tree
        out["nodes"] = self.nodes
        out["depth_cap"] = self.depth_cap
        return out

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "Certificate":
        point = PlanePoint.of(*data["point"]) if "point" in data else None
        box = PlaneBox.of(data["box"]["s"], data["box"]["t"]) if "box" in data else None
        return cls(
            Verdict(data["verdict"]),
            point,
            box,
            data.get("word", ""),
            data.get("terminal", ""),
            data.get("cycle_start"),
            data.get("tree"),
            data.get("nodes", 0),
            data.get("depth_cap", 0),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


# internal search results
@dataclass
class _Yes:
    word: str
    terminal: str
    cycle_start: int | None = None


@dataclass
class _Pending:
    target: int  # path depth of the ancestor that was revisited
    word: str


@dataclass
class _No:
    tree: str


@dataclass
class _Unknown:
    reason: str


_Result = Union[_Yes, _Pending, _No, _Unknown]


class _PointSearch:
    def __init__(self, ctx: DiffPairContext):
        self.ctx = ctx
        self.pair = ctx.pair
        self.memo: dict[tuple[Fraction, Fraction], Any] = {}
        self.path: dict[tuple[Fraction, Fraction], int] = {}
        self.nodes = 0
        self.budget_hit = False

    def visit(self, p: PlanePoint, depth: int) -> _Result:
        pair, ctx = self.pair, self.ctx
        if not in_strip(pair, p):
            return _No(".")
        if p.t in endpoint_values(pair, p.s):
            return _Yes("", "endpoint")
        if ctx.lemma1.holds and ctx.lemma1.in_region(pair, p):
            return _Yes("", "region")
        key = (p.s, p.t)
        if key in self.path:
            return _Pending(self.path[key], "")
        hit = self.memo.get(key)
        remaining = ctx.depth_cap - depth
        if hit is not None:
            if isinstance(hit, tuple):  # unknown, with the depth it was explored to
                if hit[1] >= remaining:
                    return _Unknown(hit[0])
            else:
                return hit
        if remaining <= 0:
            return _Unknown("depth-exhausted")
        if self.nodes >= ctx.node_budget:
            self.budget_hit = True
            return _Unknown("budget-exhausted")
        self.nodes += 1
        self.path[key] = depth
        result: _Result | None = None
        reason = "depth-exhausted"
        for fam in ctx.families(p.s, p.s):
            subs: list[_Result] = []
            for letter in fam:
                r = self.visit(apply_letter(ctx, letter, p), depth + 1)
                if isinstance(r, _Yes):
                    cs = None if r.cycle_start is None else r.cycle_start + 1
                    result = _Yes(letter + r.word, r.terminal, cs)
                    break
                if isinstance(r, _Pending):
                    if r.target == depth:
                        result = _Yes(letter + r.word, "periodic", 0)
                    else:
                        result = _Pending(r.target, letter + r.word)
                    break
                subs.append(r)
            if result is not None:
                break
            if all(isinstance(r, _No) for r in subs):
                result = _No(fam[0] + subs[0].tree + fam[1] + subs[1].tree)  # type: ignore[union-attr]
                break
            for r in subs:
                if isinstance(r, _Unknown) and r.reason == "budget-exhausted":
                    reason = r.reason
        del self.path[key]
        if result is None:
            self.memo[key] = (reason, remaining)
            return _Unknown(reason)
        if isinstance(result, (_Yes, _No)):
            self.memo[key] = result
        return result


def difference_pair_search(ctx: DiffPairContext, p: PlanePoint) -> Certificate:
    """Decide ``t in K - s*K'`` by exploring operator orbits of ``(s, t)``."""
    if p.s <= 0:
        raise PreconditionError("s must be positive")
    search = _PointSearch(ctx)
    r = search.visit(p, 0)
    common = dict(point=p, nodes=search.nodes, depth_cap=ctx.depth_cap)
    if isinstance(r, _Yes):
        return Certificate(Verdict.YES, word=r.word, terminal=r.terminal, cycle_start=r.cycle_start, **common)
    if isinstance(r, _No):
        return Certificate(Verdict.NO, terminal="escape", tree=r.tree, **common)
    if isinstance(r, _Pending):  # pragma: no cover - the root is always the outermost ancestor
        raise VerificationError("unresolved cycle at the root")
    return Certificate(Verdict.UNKNOWN, terminal=r.reason, **common)


# ---------------------------------------------------------------------------
# box search


class _BoxSearch:
    def __init__(self, ctx: DiffPairContext, depth_cap: int):
        self.ctx = ctx
        self.pair = ctx.pair
        self.depth_cap = depth_cap
        self.memo: dict[tuple[Fraction, ...], Any] = {}
        self.nodes = 0
        self.deepest = 0
        self.deepest_box: PlaneBox | None = None

    def visit(self, B: PlaneBox, depth: int) -> _No | _Unknown:
        if box_escapes(self.pair, B):
            return _No(".")
        key = (B.s_lo, B.s_hi, B.t_lo, B.t_hi)
        remaining = self.depth_cap - depth
        hit = self.memo.get(key)
        if hit is not None:
            if isinstance(hit, _No):
                return hit
            if hit[1] >= remaining:
                return _Unknown(hit[0])
        if remaining <= 0:
            if depth > self.deepest:
                self.deepest, self.deepest_box = depth, B
            return _Unknown("depth-exhausted")
        if self.nodes >= self.ctx.node_budget:
            return _Unknown("budget-exhausted")
        self.nodes += 1
        if depth > self.deepest:
            self.deepest, self.deepest_box = depth, B
        reason = "depth-exhausted"
        for fam in self.ctx.families(B.s_lo, B.s_hi):
            r0 = self.visit(apply_letter_box(self.ctx, fam[0], B), depth + 1)
            if not isinstance(r0, _No):
                if r0.reason == "budget-exhausted":
                    reason = r0.reason
                continue
            r1 = self.visit(apply_letter_box(self.ctx, fam[1], B), depth + 1)
            if isinstance(r1, _No):
                res = _No(fam[0] + r0.tree + fam[1] + r1.tree)
                self.memo[key] = res
                return res
            if r1.reason == "budget-exhausted":
                reason = r1.reason
        self.memo[key] = (reason, remaining)
        return _Unknown(reason)


def box_search_no(ctx: DiffPairContext, B: PlaneBox, depth_cap: int | None = None) -> Certificate:
    """Certify that no point of ``B`` is a difference pair, or return Unknown."""
    cap = ctx.depth_cap if depth_cap is None else depth_cap
    search = _BoxSearch(ctx, cap)
    r = search.visit(B, 0)
    if isinstance(r, _No):
        return Certificate(Verdict.NO, box=B, terminal="escape", tree=r.tree, nodes=search.nodes, depth_cap=cap)
    cert = Certificate(Verdict.UNKNOWN, box=B, terminal=r.reason, nodes=search.nodes, depth_cap=cap)
    return cert


# ---------------------------------------------------------------------------
# replay


def _replay_tree(
    tree: str, pos: int, obj: Any, step: Callable[[str, Any], Any], escaped: Callable[[Any], bool]
) -> int:
    """Check the subtree starting at ``pos``; return the index just past it."""
    if pos >= len(tree):
        raise VerificationError("truncated certificate tree")
    c = tree[pos]
    if c == ".":
        if not escaped(obj):
            raise VerificationError(f"leaf at position {pos} has not left the strip")
        return pos + 1
    if c not in "Aa":
        raise VerificationError(f"unexpected symbol {c!r} at position {pos}")
    partner = "B" if c == "A" else "b"
    pos = _replay_tree(tree, pos + 1, step(c, obj), step, escaped)
    if pos >= len(tree) or tree[pos] != partner:
        raise VerificationError(f"expected {partner!r} at position {pos}")
    return _replay_tree(tree, pos + 1, step(partner, obj), step, escaped)


def verify_no_tree(pair: CantorPair, tree: str, target: PlanePoint | PlaneBox) -> None:
    if isinstance(target, PlaneBox):
        end = _replay_tree(
            tree, 0, target, lambda c, B: apply_letter_box(pair, c, B), lambda B: box_escapes(pair, B)
        )
    else:
        end = _replay_tree(
            tree, 0, target, lambda c, p: apply_letter(pair, c, p), lambda p: not in_strip(pair, p)
        )
    if end != len(tree):
        raise VerificationError("trailing symbols in certificate tree")


def verify_certificate(pair: CantorPair, cert: Certificate) -> bool:
    """Independent replay through the public operators; raises on failure."""
    if cert.verdict is Verdict.UNKNOWN:
        return True
    if cert.verdict is Verdict.NO:
        target = cert.box if cert.box is not None else cert.point
        if target is None or cert.tree is None:
            raise VerificationError("NO certificate without target or tree")
        verify_no_tree(pair, cert.tree, target)
        return True
    if cert.point is None:
        raise VerificationError("YES certificate without a point")
    if any(c not in LETTERS for c in cert.word):
        raise VerificationError("bad operator word")
    pts = [cert.point]
    for c in cert.word:
        pts.append(apply_letter(pair, c, pts[-1]))
    if not all(in_strip(pair, p) for p in pts):
        raise VerificationError("YES orbit leaves the strip")
    end = pts[-1]
    if cert.terminal == "region":
        L1 = lemma1_check(pair)
        if not (L1.holds and L1.in_region(pair, end)):
            raise VerificationError("orbit does not end in the full-interval region")
    elif cert.terminal == "endpoint":
        if end.t not in endpoint_values(pair, end.s):
            raise VerificationError("orbit does not end on an endpoint value")
    elif cert.terminal == "periodic":
        cs = cert.cycle_start
        if cs is None or not 0 <= cs < len(cert.word) or pts[cs] != end:
            raise VerificationError("orbit is not periodic")
    else:
        raise VerificationError(f"unknown YES terminal {cert.terminal!r}")
    return True


# ---------------------------------------------------------------------------
# full interval region


@dataclass(frozen=True)
class FullIntervalVerdict:
    kind: str  # "full" or "finite_union"
    s: Fraction
    interval: Interval | None  # the whole set when kind == "full"
    component_lower_bound: Fraction | None
    steps: int


def full_interval_check(pair: CantorPair, s: RationalLike) -> FullIntervalVerdict:
    s = Q(s)
    if s <= 0:
        raise PreconditionError("s must be positive")
    L1 = lemma1_check(pair)
    if not L1.holds:
        raise PreconditionError(
            f"full-interval hypothesis fails: max(p0*q1, p1*q0) = {rat_str(L1.lhs)} > s0/s1 = {rat_str(L1.rhs)}"
        )
    a, b, s0, s1 = pair.a, pair.b, pair.s0, pair.s1
    if s1 <= s <= s0:
        return FullIntervalVerdict("full", s, Interval(-b * s, a), a + b * s, 0)
    if s < s1:
        p_min, p_max = min(pair.K.p), max(pair.K.p)
        m, x = 0, s
        while x < s1:
            x *= p_min
            m += 1
        return FullIntervalVerdict("finite_union", s, None, (a + b * s1) / p_max**m, m)
    q_min = min(pair.q)
    m, x = 0, s
    while x > s0:
        x /= q_min
        m += 1
    return FullIntervalVerdict("finite_union", s, None, a + b * s1, m)


# ---------------------------------------------------------------------------
# gap accumulation at the right endpoint


@dataclass(frozen=True)
class Lemma2Base:
    gamma: Fraction  # > 1
    m: int  # p1 = gamma**m
    n: int  # q0 = gamma**n


def lemma2_base(pair: CantorPair, bound: int = 10**6) -> Lemma2Base:
    dec = gamma_decomposition([1 / pair.K.p1], [1 / pair.Kp.p0], bound)
    if not isinstance(dec, GammaDecomposition):
        raise UnsupportedCase("log p1 / log q0 is not certified rational")
    return Lemma2Base(1 / dec.gamma, dec.m[0], dec.n[0])


@dataclass(frozen=True)
class GapCertificate:
    k: int
    i: int  # number of inverse T_1 steps
    j: int  # number of inverse T'_0 steps
    box: PlaneBox
    gap: Interval  # t-interval free of K - mu*K' for every mu in the box s-range
    certificate: Certificate


@dataclass
class GapAccumulation:
    mu: Fraction
    k0: int
    i0: int
    j0: int
    covers_all_mu: bool
    base_box: PlaneBox
    base_certificate: Certificate
    certificates: list[GapCertificate]


def _lemma2_preconditions(pair: CantorPair, lam: Fraction, x: Fraction, eps: Fraction) -> None:
    a, b = pair.a, pair.b
    q1 = pair.Kp.p1
    p1 = pair.K.p1
    left = a + eps + ((b - b * q1) / q1) * (lam - eps)
    if not x > left:
        raise PreconditionError(
            f"window violated: x = {rat_str(x)} must exceed a + eps + (b - b*q1)/q1*(lam - eps) = {rat_str(left)}"
        )
    if not x > a - a / p1:
        raise PreconditionError(f"window violated: x = {rat_str(x)} must exceed a - a/p1 = {rat_str(a - a / p1)}")
    if not x < a:
        raise PreconditionError(f"window violated: x = {rat_str(x)} must be below a = {rat_str(a)}")
    if not eps < lam:
        raise PreconditionError("eps must be smaller than lambda")


def gap_accumulation_certificates(
    pair: CantorPair,
    base: Lemma2Base,
    lam: RationalLike,
    x: RationalLike,
    eps: RationalLike,
    mu: RationalLike,
    count: int,
    strict_gamma: bool = True,
    ctx: DiffPairContext | None = None,
    verify: bool = True,
) -> GapAccumulation:
    """Gaps of ``K - mu*K'`` accumulating at ``a`` from one non-difference box.

    The box is ``[lam-eps, lam+eps] x [x-eps, x+eps]``.  With ``strict_gamma``
    the ratio window ``gamma < (lam+eps)/(lam-eps)`` is required, so that the
    conclusion reaches every ``mu > 0``.  Without it only ``mu`` inside the
    box s-range is served and ``covers_all_mu`` is False.
    """
    lam, x, eps, mu = Q(lam), Q(x), Q(eps), Q(mu)
    if count < 0:
        raise PreconditionError("count must be nonnegative")
    if mu <= 0:
        raise PreconditionError("mu must be positive")
    _lemma2_preconditions(pair, lam, x, eps)
    g, m, n = base.gamma, base.m, base.n
    if pair.K.p1 != g**m or pair.Kp.p0 != g**n or math.gcd(m, n) != 1:
        raise PreconditionError("base does not satisfy p1 = gamma**m, q0 = gamma**n, gcd(m, n) = 1")
    window_ok = g < (lam + eps) / (lam - eps)
    if strict_gamma and not window_ok:
        raise PreconditionError(
            f"gamma window violated: gamma = {rat_str(g)} >= (lam+eps)/(lam-eps) = {rat_str((lam + eps) / (lam - eps))}"
        )
    ctx = ctx or make_context(pair)
    box = PlaneBox.around(lam, x, eps)
    base_cert = box_search_no(ctx, box)
    if base_cert.verdict is not Verdict.NO:
        raise PreconditionError("base box is not certified free of difference pairs")
    lo, hi = lam - eps, lam + eps
    if window_ok:
        # union of gamma**k * [lo, hi], k = 0..m+n, is the single interval [lo, p1*q0*hi]
        for k in range(m + n):
            if g ** (k + 1) * lo > g**k * hi:
                raise VerificationError("scaled windows fail to overlap")
        k0 = 0
        while mu > g**k0 * hi:
            k0 += 1
        while mu < g**k0 * lo:
            k0 -= 1
    else:
        if not lo <= mu <= hi:
            raise PreconditionError("mu lies outside the box and the gamma window does not hold")
        k0 = 0
    # n*j - m*i = k0 with i, j >= 0
    _, u, v = ext_gcd(n, m)  # n*u + m*v = 1
    j0, i0 = u * k0, -v * k0
    shift = max(-(i0 // n), -(j0 // m))  # smallest shift making both nonnegative
    i0, j0 = i0 + shift * n, j0 + shift * m
    if n * j0 - m * i0 != k0 or i0 < 0 or j0 < 0:  # pragma: no cover - arithmetic guard
        raise VerificationError("exponent solve failed")
    a = pair.a
    p1 = pair.K.p1
    certs = []
    s_lo, s_hi = g**k0 * lo, g**k0 * hi
    for k in range(1, count + 1):
        i, j = i0 + n * k, j0 + m * k
        f = p1 ** (-i)
        t_lo, t_hi = a + f * (x - eps - a), a + f * (x + eps - a)
        U = PlaneBox(s_lo, s_hi, t_lo, t_hi)
        if verify:
            cert = box_search_no(ctx, U, depth_cap=ctx.depth_cap + 2 * (i + j))
            if cert.verdict is not Verdict.NO:
                raise VerificationError(f"gap certificate {k} failed re-certification")
        else:
            cert = Certificate(Verdict.UNKNOWN, box=U, terminal="not-checked")
        certs.append(GapCertificate(k, i, j, U, Interval(t_lo, t_hi), cert))
    return GapAccumulation(mu, k0, i0, j0, window_ok and strict_gamma, box, base_cert, certs)


def shrink_to_no_box(
    ctx: DiffPairContext, s: RationalLike, x: RationalLike, eps: RationalLike, max_halvings: int = 20
) -> tuple[Fraction, Certificate]:
    """Halve ``eps`` until ``B_eps(s) x B_eps(x)`` is certified free of difference pairs."""
    s, x, eps = Q(s), Q(x), Q(eps)
    for _ in range(max_halvings + 1):
        if eps < s:
            cert = box_search_no(ctx, PlaneBox.around(s, x, eps))
            if cert.verdict is Verdict.NO:
                return eps, cert
        eps /= 2
    raise PreconditionError("no certified box found around the given point")


# ---------------------------------------------------------------------------
# evidence about intervals ending at a


class EvidenceStatus(str, Enum):
    YES = "YesCertified"
    NO = "NoCertified"
    UNKNOWN = "Unknown"


@dataclass
class EndpointEvidence:
    status: EvidenceStatus
    details: dict[str, Any]


def _local_gaps_near_a(pair: CantorPair, lam: Fraction, delta: Fraction, depth: int, budget: int) -> list[Interval]:
    """Gaps of a depth-``depth`` covering of ``K - lam*K'`` inside ``(a - delta, a)``.

    Only cylinder pairs whose projection reaches the window are expanded.
    """
    K, Kp = pair.K.to_ifs(), pair.Kp.to_ifs()
    a, b = pair.a, pair.b
    lo_w = a - delta
    frontier = [(Fraction(0), Fraction(1), Fraction(0), Fraction(1))]  # (I.lo, I.scale, J.lo, J.scale)
    for _ in range(depth):
        nxt = []
        for ilo, isc, jlo, jsc in frontier:
            for mi in K.maps:
                nilo, nisc = ilo + isc * mi.t, isc * mi.r
                for mj in Kp.maps:
                    njlo, njsc = jlo + jsc * mj.t, jsc * mj.r
                    P_lo = nilo - lam * (njlo + njsc * b)
                    P_hi = nilo + nisc * a - lam * njlo
                    if P_hi >= lo_w and P_lo <= a:
                        nxt.append((nilo, nisc, njlo, njsc))
        frontier = nxt
        if len(frontier) > budget:
            return []
    pieces = [
        Interval(ilo - lam * (jlo + jsc * b), ilo + isc * a - lam * jlo) for ilo, isc, jlo, jsc in frontier
    ]
    S = normalize(pieces)
    out = []
    for left, right in zip(S.intervals, S.intervals[1:]):
        if left.hi >= lo_w and right.lo <= a:
            out.append(Interval(max(left.hi, lo_w), right.lo))
    return out


def endpoint_interval_evidence(
    pair: CantorPair,
    lam: RationalLike,
    deltas: Sequence[RationalLike] | None = None,
    ctx: DiffPairContext | None = None,
    max_depth: int = 10,
    budget: int = 20000,
) -> EndpointEvidence:
    """Does ``K - lam*K'`` contain an interval ``[a - delta, a]``?"""
    lam = Q(lam)
    if lam <= 0:
        raise PreconditionError("lambda must be positive")
    a, b = pair.a, pair.b
    ctx = ctx or make_context(pair)
    ds = [Q(d) for d in deltas] if deltas is not None else [a / 4**k for k in range(1, 5)]
    L1 = ctx.lemma1
    if L1.holds:
        for d in ds:
            B = PlaneBox(lam, lam, a - d, a)
            word = ""
            for _ in range(ctx.depth_cap):
                if L1.R.s_lo <= B.s_lo and B.s_hi <= L1.R.s_hi:
                    break
                letter = "B" if B.s_hi < L1.R.s_lo else "a"
                B = apply_letter_box(ctx, letter, B)
                word += letter
            if L1.R.s_lo <= B.s_lo <= L1.R.s_hi and B.t_hi <= a and B.t_lo >= -b * B.s_lo:
                return EndpointEvidence(
                    EvidenceStatus.YES, {"delta": rat_str(d), "word": word, "image": B.to_json()}
                )
    boxes = []
    deepest: dict[str, Any] = {}
    for d in ds:
        found = None
        for depth in range(2, max_depth + 1):
            gaps = _local_gaps_near_a(pair, lam, d, depth, budget)
            for gp in sorted(gaps, key=lambda g: -(g.hi - g.lo)):
                w = (gp.hi - gp.lo) / 8
                if w <= 0:
                    continue
                B = PlaneBox(lam, lam, gp.lo + w, gp.hi - w)
                cert = box_search_no(ctx, B)
                if cert.verdict is Verdict.NO:
                    found = (B, cert)
                    break
            if found:
                break
            deepest = {"delta": rat_str(d), "depth": depth}
        if found is None:
            return EndpointEvidence(EvidenceStatus.UNKNOWN, {"failed_delta": rat_str(d), **deepest})
        boxes.append({"delta": rat_str(d), "box": found[0].to_json(), "tree_size": len(found[1].tree or "")})
    return EndpointEvidence(EvidenceStatus.NO, {"boxes": boxes})
