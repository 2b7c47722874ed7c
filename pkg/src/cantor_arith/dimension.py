"""Dimension and measure machinery for differences of affine Cantor sets.

Everything combinatorial (exponent windows, cylinders, witnesses) is exact;
floating point only appears in the Moran solver, log-log fits and content sums.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Any, Iterator, Sequence

import numpy as np

from .errors import BudgetExceeded, CantorArithError, PreconditionError, UnsupportedCase, VerificationError
from .intervals import Interval, IntervalSet, affine_image, minkowski_diff, normalize, symmetric_difference
from .rational import Q, RationalLike, log_fraction, rat_str
from .sets import AffineIFS, default_budget, level_set, refine_to_scale


def _ifs(X: Any) -> AffineIFS:
    return X.to_ifs()


# ---------------------------------------------------------------------------
# Moran equation


def moran_dimension(ratios: Sequence[RationalLike], tol: float = 1e-14, max_iter: int = 200) -> float:
    """Root ``d`` of ``sum(r**d) = 1`` on ``[0, 1]`` by bisection."""
    rs = [Q(r) for r in ratios]
    if not rs:
        raise PreconditionError("need at least one ratio")
    if any(not 0 < r < 1 for r in rs):
        raise PreconditionError("ratios must lie in (0, 1)")
    if sum(rs) > 1:
        raise PreconditionError("not a Cantor IFS: ratios sum to more than 1")
    logs = [log_fraction(r) for r in rs]

    def excess(d: float) -> float:
        return math.fsum(math.exp(d * lr) for lr in logs) - 1.0

    if len(rs) == 1:
        return 0.0
    lo, hi = 0.0, 1.0
    if excess(hi) >= 0:
        return 1.0
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if excess(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol:
            break
    return 0.5 * (lo + hi)


def hd_sum(K: Any, Kp: Any) -> float:
    return moran_dimension(_ifs(K).ratios) + moran_dimension(_ifs(Kp).ratios)


# ---------------------------------------------------------------------------
# common base for the ratios


@dataclass(frozen=True)
class GammaDecomposition:
    gamma: Fraction
    m: tuple[int, ...]
    n: tuple[int, ...]

    @property
    def lcm_m(self) -> int:
        return reduce(math.lcm, self.m, 1)

    @property
    def lcm_n(self) -> int:
        return reduce(math.lcm, self.n, 1)

    @property
    def mn(self) -> int:
        return self.lcm_m * self.lcm_n

    @property
    def m_star(self) -> int:
        return max(self.m)

    @property
    def n_star(self) -> int:
        return max(self.n)


@dataclass(frozen=True)
class IrrationalPairWitness:
    i: int  # 1-based index into the first ratio list
    j: int  # 1-based index into the second ratio list


@dataclass(frozen=True)
class Undecided:
    reason: str


def factorize(n: int, bound: int = 10**6) -> dict[int, int] | None:
    """Prime factorisation by trial division; ``None`` if a prime exceeds ``bound``."""
    out: dict[int, int] = {}
    p = 2
    while p * p <= n:
        if p > bound:
            return None
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 1 if p == 2 else 2
    if n > 1:
        if n > bound:
            return None
        out[n] = out.get(n, 0) + 1
    return out


def _exponent_vector(r: Fraction, bound: int) -> dict[int, int] | None:
    num = factorize(r.numerator, bound)
    den = factorize(r.denominator, bound)
    if num is None or den is None:
        return None
    vec = dict(num)
    for p, e in den.items():
        vec[p] = vec.get(p, 0) - e
    return {p: e for p, e in vec.items() if e}


def _multiple_of(v: dict[int, int], u: dict[int, int]) -> int | None:
    """Integer ``c`` with ``v = c*u``, or ``None``."""
    if set(v) != set(u):
        return None
    c = None
    for p, e in u.items():
        if v[p] % e:
            return None
        q = v[p] // e
        if c is None:
            c = q
        elif c != q:
            return None
    return c


def gamma_decomposition(
    ratios_k: Sequence[RationalLike], ratios_kp: Sequence[RationalLike], bound: int = 10**6
) -> GammaDecomposition | IrrationalPairWitness | Undecided:
    rk = [Q(r) for r in ratios_k]
    rkp = [Q(r) for r in ratios_kp]
    if any(not 0 < r < 1 for r in rk + rkp):
        raise PreconditionError("ratios must lie in (0, 1)")
    vk, vkp = [], []
    for r in rk + rkp:
        v = _exponent_vector(r, bound)
        if v is None:
            return Undecided(f"{rat_str(r)} has a prime factor above {bound}")
        (vk if len(vk) < len(rk) else vkp).append(v)
    base = vk[0]
    g = reduce(math.gcd, base.values())
    u = {p: e // g for p, e in base.items()}
    # orient u so that gamma < 1; every ratio is then a positive power of it
    if math.prod(Fraction(p) ** e for p, e in u.items()) > 1:
        u = {p: -e for p, e in u.items()}
    m, n = [], []
    for v in vk:
        c = _multiple_of(v, u)
        if c is None:
            break
        m.append(c)
    for v in vkp:
        c = _multiple_of(v, u)
        if c is None:
            break
        n.append(c)
    if len(m) == len(vk) and len(n) == len(vkp):
        d = reduce(math.gcd, m + n)
        gamma = math.prod((Fraction(p) ** (e * d) for p, e in u.items()), start=Fraction(1))
        return GammaDecomposition(gamma, tuple(c // d for c in m), tuple(c // d for c in n))
    for i, a in enumerate(vk):
        for j, b in enumerate(vkp):
            ua = {p: e // reduce(math.gcd, a.values()) for p, e in a.items()}
            if _multiple_of(b, ua) is None:
                return IrrationalPairWitness(i + 1, j + 1)
    # ratios inside one list are independent but every cross pair is dependent:
    # impossible for nonzero vectors, kept as a guard
    raise VerificationError("inconsistent factorisation")  # pragma: no cover


# ---------------------------------------------------------------------------
# nonnegative Diophantine solution


@dataclass(frozen=True)
class DioSolution:
    mbar: tuple[int, ...]
    nbar: tuple[int, ...]

    def check(self, m: Sequence[int], n: Sequence[int]) -> bool:
        ok = all(x >= 0 for x in self.mbar + self.nbar)
        return ok and sum(a * b for a, b in zip(self.mbar, m)) - sum(a * b for a, b in zip(self.nbar, n)) == 1


def ext_gcd(a: int, b: int) -> tuple[int, int, int]:
    """``(g, x, y)`` with ``a*x + b*y = g``."""
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return a, x0, y0


def nonneg_diophantine(m: Sequence[int], n: Sequence[int]) -> DioSolution:
    """Nonnegative ``mbar, nbar`` with ``sum(mbar*m) - sum(nbar*n) = 1``."""
    m, n = [int(x) for x in m], [int(x) for x in n]
    if not m or not n or any(x <= 0 for x in m + n):
        raise PreconditionError("exponents must be positive integers")
    vals = m + n
    g, coeffs = vals[0], [1]
    for v in vals[1:]:
        g, x, y = ext_gcd(g, v)
        coeffs = [c * x for c in coeffs] + [y]
    if g != 1:
        raise PreconditionError("no solution: exponents share a common factor")
    mt = coeffs[: len(m)]
    nt = [-c for c in coeffs[len(m):]]
    for i in range(len(m)):
        if mt[i] < 0:
            x = -(mt[i] // n[0])  # ceil(-mt/n1)
            k = x * n[0] + mt[i]
            mt[i] = k
            nt[0] += x * m[i]
    for j in range(len(n)):
        if nt[j] < 0:
            y = -(nt[j] // m[0])
            l = y * m[0] + nt[j]
            nt[j] = l
            mt[0] += y * n[j]
    sol = DioSolution(tuple(mt), tuple(nt))
    if not sol.check(m, n):  # pragma: no cover - arithmetic guard
        raise VerificationError("Diophantine adjustment broke the identity")
    return sol


# ---------------------------------------------------------------------------
# E_k: matched-scale cylinder pairs


@dataclass(frozen=True)
class EkEntry:
    k: int
    word_i: tuple[int, ...]
    word_j: tuple[int, ...]
    counts_i: tuple[int, ...]
    counts_j: tuple[int, ...]
    I: Interval
    J: Interval

    @property
    def projection(self) -> Interval:
        return Interval(self.I.lo - self.J.hi, self.I.hi - self.J.lo)

    def contains(self, other: "EkEntry") -> bool:
        return self.I.contains_interval(other.I) and self.J.contains_interval(other.J)


@dataclass
class EkResult:
    k: int
    entries: list[EkEntry]
    diagnostic: str = ""

    def __iter__(self):
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)


def _count_vectors(exps: Sequence[int], lo: int, hi: int) -> Iterator[tuple[int, ...]]:
    """Nonnegative ``c`` with ``lo <= sum(c*exps) <= hi`` (bounded knapsack)."""
    M = len(exps)

    def rec(i: int, remaining_hi: int, prefix: list[int]) -> Iterator[tuple[int, ...]]:
        if i == M - 1:
            e = exps[i]
            used = hi - remaining_hi
            cmin = max(0, -(-(lo - used) // e))
            cmax = remaining_hi // e
            for c in range(cmin, cmax + 1):
                yield tuple(prefix + [c])
            return
        for c in range(remaining_hi // exps[i] + 1):
            prefix.append(c)
            yield from rec(i + 1, remaining_hi - c * exps[i], prefix)
            prefix.pop()

    if hi < 0 or hi < lo:
        return
    yield from rec(0, hi, [])


def _multiset_words(counts: Sequence[int]) -> Iterator[tuple[int, ...]]:
    """Distinct words with the given letter counts, in lexicographic order."""
    counts = list(counts)
    total = sum(counts)
    word: list[int] = []

    def rec() -> Iterator[tuple[int, ...]]:
        if len(word) == total:
            yield tuple(word)
            return
        for i, c in enumerate(counts):
            if c:
                counts[i] -= 1
                word.append(i)
                yield from rec()
                word.pop()
                counts[i] += 1

    yield from rec()


def _multinomial(counts: Sequence[int]) -> int:
    out, run = 1, 0
    for c in counts:
        run += c
        out *= math.comb(run, c)
    return out


def _window_words(exps: Sequence[int], lo: int, hi: int) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    out = []
    for counts in _count_vectors(exps, lo, hi):
        for w in _multiset_words(counts):
            out.append((w, counts))
    out.sort()
    return out


def _count_window(exps: Sequence[int], lo: int, hi: int) -> int:
    return sum(_multinomial(c) for c in _count_vectors(exps, lo, hi))


def ek_enumeration(K: Any, Kp: Any, dec: GammaDecomposition, k: int, budget: int | None = None) -> EkResult:
    """All cylinder pairs ``I x J`` whose scales fall in the k-th matched window."""
    if k < 0:
        raise PreconditionError("k must be nonnegative")
    A, B = _ifs(K), _ifs(Kp)
    if len(dec.m) != len(A.maps) or len(dec.n) != len(B.maps):
        raise PreconditionError("decomposition does not match the number of maps")
    kmn = k * dec.mn
    # kmn - m* < S_I <= kmn ;  kmn <= S_J < kmn + n*
    lo_i, hi_i = kmn - dec.m_star + 1, kmn
    lo_j, hi_j = kmn, kmn + dec.n_star - 1
    limit = default_budget() if budget is None else budget
    n_pairs = _count_window(dec.m, lo_i, hi_i) * _count_window(dec.n, lo_j, hi_j)
    if n_pairs > limit:
        raise BudgetExceeded(n_pairs, limit, "E_k enumeration")
    wi = _window_words(dec.m, lo_i, hi_i)
    wj = _window_words(dec.n, lo_j, hi_j)
    if not wi or not wj:
        return EkResult(k, [], f"empty exponent window at k={k}")
    Js = [(w, c, B.cylinder(w)) for w, c in wj]
    entries = []
    for w, c in wi:
        I = A.cylinder(w)
        for w2, c2, J in Js:
            entries.append(EkEntry(k, w, w2, c, c2, I, J))
    return EkResult(k, entries)


def exponent_sum(exps: Sequence[int], counts: Sequence[int]) -> int:
    return sum(e * c for e, c in zip(exps, counts))


# ---------------------------------------------------------------------------
# scaling witness


class WitnessNotFound(PreconditionError):
    def __init__(self, deepest: int):
        self.deepest = deepest
        super().__init__(f"no matched cylinder pair found up to k={deepest}")


@dataclass(frozen=True)
class ScalingWitness:
    k: int  # the pair used lies in E_{k+1}
    l: int
    scale: Fraction
    shift: Fraction
    A: Fraction
    R: Fraction
    t: Fraction
    entry: EkEntry
    word_i: tuple[int, ...]  # extended words defining the base box C
    word_j: tuple[int, ...]
    box: tuple[Interval, Interval]
    dio: DioSolution

    def __call__(self, x: RationalLike) -> Fraction:
        return self.scale * Q(x) + self.shift

    @property
    def expansion_ok(self) -> bool:
        return self.scale > self.A * self.R

    def to_json(self) -> dict[str, Any]:
        C_I, C_J = self.box
        return {
            "k": self.k,
            "l": self.l,
            "t": rat_str(self.t),
            "R": rat_str(self.R),
            "F": {"scale": rat_str(self.scale), "shift": rat_str(self.shift)},
            "A": rat_str(self.A),
            "word_I": "".join(map(str, self.entry.word_i)),
            "word_J": "".join(map(str, self.entry.word_j)),
            "C": [[rat_str(C_I.lo), rat_str(C_I.hi)], [rat_str(C_J.lo), rat_str(C_J.hi)]],
            "mbar": list(self.dio.mbar),
            "nbar": list(self.dio.nbar),
            "checks": {"scale_gt_A_R": self.expansion_ok, "l_lt_mstar_nstar": True},
        }


def expansion_constant(K: Any, Kp: Any, dec: GammaDecomposition, dio: DioSolution) -> Fraction:
    a, b = _ifs(K).a, _ifs(Kp).a
    e = dec.mn + dec.m_star + (dec.m_star + dec.n_star) * exponent_sum(dec.m, dio.mbar)
    return dec.gamma**e / (a + b)


def scaling_witness(
    K: Any,
    Kp: Any,
    dec: GammaDecomposition,
    t: RationalLike,
    R: RationalLike,
    max_k: int = 8,
    budget: int | None = None,
) -> ScalingWitness:
    A_ifs, B_ifs = _ifs(K), _ifs(Kp)
    t, R = Q(t), Q(R)
    a, b = A_ifs.a, B_ifs.a
    if not 0 < R < a + b:
        raise PreconditionError(f"R must lie in (0, {rat_str(a + b)})")
    dio = nonneg_diophantine(dec.m, dec.n)
    for kp in range(1, max_k + 1):
        found = None
        for e in ek_enumeration(A_ifs, B_ifs, dec, kp, budget):
            P = e.projection
            if P.lo <= t <= P.hi and t - R < P.lo and P.hi < t + R:
                found = e
                break
        if found is None:
            continue
        e = found
        l = exponent_sum(dec.n, e.counts_j) - exponent_sum(dec.m, e.counts_i)
        if not 0 <= l < dec.m_star + dec.n_star:
            raise VerificationError(f"scale offset l={l} outside [0, m*+n*)")
        ext_i = e.word_i + tuple(i for i, c in enumerate(dio.mbar) for _ in range(l * c))
        ext_j = e.word_j + tuple(j for j, c in enumerate(dio.nbar) for _ in range(l * c))
        sc_i, c_i = A_ifs.word_map(ext_i)
        sc_j, c_j = B_ifs.word_map(ext_j)
        if sc_i != sc_j:
            raise VerificationError("extended cylinders are not similar copies")
        A = expansion_constant(A_ifs, B_ifs, dec, dio)
        w = ScalingWitness(
            k=kp - 1,
            l=l,
            scale=sc_i,
            shift=c_i - c_j,
            A=A,
            R=R,
            t=t,
            entry=e,
            word_i=ext_i,
            word_j=ext_j,
            box=(Interval(c_i, c_i + sc_i * a), Interval(c_j, c_j + sc_j * b)),
            dio=dio,
        )
        if not w.expansion_ok:
            raise VerificationError("expansion bound scale > A*R failed")
        return w
    raise WitnessNotFound(max_k)


# ---------------------------------------------------------------------------
# box counting and content


def box_count(cover: IntervalSet, delta: RationalLike) -> int:
    """Half-open grid cells ``[i*delta, (i+1)*delta)`` meeting the set."""
    delta = Q(delta)
    if delta <= 0:
        raise PreconditionError("delta must be positive")
    total = 0
    last = None
    for iv in cover:
        i0 = math.floor(iv.lo / delta)
        i1 = math.floor(iv.hi / delta)
        if last is not None and i0 <= last:
            i0 = last + 1
        if i1 >= i0:
            total += i1 - i0 + 1
        last = i1 if last is None else max(last, i1)
    return total


def hausdorff_content(cover: IntervalSet, s: float) -> float:
    """``sum |I|**s`` over the intervals of ``cover``, summed in log space."""
    if not 0 <= s <= 1:
        raise PreconditionError("exponent must lie in [0, 1]")
    terms = []
    for iv in cover:
        L = iv.hi - iv.lo
        if L == 0:
            terms.append(1.0 if s == 0 else 0.0)
        else:
            terms.append(math.exp(s * log_fraction(L)))
    return math.fsum(terms)


def _scale_base(A: AffineIFS, B: AffineIFS, lam: Fraction) -> tuple[Fraction, Fraction]:
    return max(A.a, lam * B.a), max(A.ratios + B.ratios)


@dataclass
class ScaleRow:
    depth: int
    delta: Fraction
    count: int
    n_intervals: int
    n_pairs: int
    residual: float = 0.0


@dataclass
class BoxDimensionEstimate:
    slope: float
    intercept: float
    rows: list[ScaleRow]


def box_dimension_estimate(
    K: Any, Kp: Any, lam: RationalLike, depths: Sequence[int], budget: int | None = None
) -> BoxDimensionEstimate:
    """Least-squares slope of ``log N(delta)`` against ``log(1/delta)``."""
    depths = sorted(set(int(d) for d in depths))
    if len(depths) < 3:
        raise PreconditionError(">=3 depths required")
    A, B = _ifs(K), _ifs(Kp)
    lam = Q(lam)
    top, rho = _scale_base(A, B, lam)
    rows = []
    for d in depths:
        delta = top * rho**d
        CA = refine_to_scale(A, delta, budget)
        CB = refine_to_scale(B, delta / lam, budget)
        cover = minkowski_diff(CA.set, affine_image(CB.set, lam, 0))
        rows.append(ScaleRow(d, delta, box_count(cover, delta), len(cover), len(CA) * len(CB)))
    x = np.array([-log_fraction(r.delta) for r in rows])
    y = np.array([math.log(r.count) for r in rows])
    slope, intercept = np.polyfit(x, y, 1)
    for r, xi, yi in zip(rows, x, y):
        r.residual = float(yi - (slope * xi + intercept))
    return BoxDimensionEstimate(float(slope), float(intercept), rows)


@dataclass
class ContentTrend:
    s: float
    rows: list[tuple[int, Fraction, float]]  # (depth, delta, content)
    k0: int | None
    flag: bool


def content_trend(
    K: Any,
    Kp: Any,
    lam: RationalLike,
    s: float,
    depths: Sequence[int] = range(4, 11),
    k0_max: int = 8,
    rel_tol: float = 1e-12,
    budget: int | None = None,
) -> ContentTrend:
    """Content of scale-matched coverings over depths; flags eventual non-increase.

    ``rel_tol`` only absorbs float rounding between mathematically equal sums.
    """
    A, B = _ifs(K), _ifs(Kp)
    lam = Q(lam)
    top, rho = _scale_base(A, B, lam)
    rows = []
    for d in depths:
        delta = top * rho**d
        cover = minkowski_diff(
            refine_to_scale(A, delta, budget).set, affine_image(refine_to_scale(B, delta / lam, budget).set, lam, 0)
        )
        rows.append((d, delta, hausdorff_content(cover, s)))
    k0 = None
    for idx in range(len(rows)):
        vals = [c for _, _, c in rows[idx:]]
        if all(vals[i + 1] <= vals[i] * (1 + rel_tol) for i in range(len(vals) - 1)):
            k0 = rows[idx][0]
            break
    return ContentTrend(s, rows, k0, k0 is not None and k0 <= k0_max)


# ---------------------------------------------------------------------------
# decomposition identity and dense family


@dataclass
class IdentityReport:
    passed: bool
    lhs: IntervalSet
    rhs: IntervalSet
    mismatches: list[Interval] = field(default_factory=list)


def decomposition_identity_check(
    K1: Any,
    K2: Any,
    lam: RationalLike,
    depth: int,
    shifts: Sequence[RationalLike] | None = None,
    budget: int | None = None,
) -> IdentityReport:
    """Compare ``K1 - lam*K2`` with the union of its first-level pieces, at covering level."""
    A, B = _ifs(K1), _ifs(K2)
    lam = Q(lam)
    if lam <= 0:
        raise PreconditionError("lambda must be positive")
    if depth < 1:
        raise PreconditionError("depth must be at least 1")
    ts = [m.t for m in A.maps] if shifts is None else [Q(x) for x in shifts]
    K1d, K1prev = level_set(A, depth, budget), level_set(A, depth - 1, budget)
    K2d = level_set(B, depth, budget)
    lhs = minkowski_diff(K1d, affine_image(K2d, lam, 0))
    pieces = []
    for m, t in zip(A.maps, ts):
        inner = minkowski_diff(K1prev, affine_image(K2d, lam / m.r, 0))
        pieces.extend(affine_image(inner, m.r, t))
    rhs = normalize(pieces)
    mism = symmetric_difference(lhs, rhs)
    return IdentityReport(not mism and lhs == rhs, lhs, rhs, mism)


def dense_lambda_family(
    ratios_k: Sequence[RationalLike], ratios_kp: Sequence[RationalLike], m0_max: int, n0_max: int
) -> list[Fraction]:
    """Sorted distinct ``r'_j**n0 / r_i**m0`` for ``1 <= m0 <= m0_max``, ``1 <= n0 <= n0_max``."""
    if m0_max < 1 or n0_max < 1:
        raise PreconditionError("exponent bounds must be at least 1")
    out = {
        Q(rp) ** n0 / Q(r) ** m0
        for r in ratios_k
        for rp in ratios_kp
        for m0 in range(1, m0_max + 1)
        for n0 in range(1, n0_max + 1)
    }
    return sorted(out)


def require_decomposition(K: Any, Kp: Any, bound: int = 10**6) -> GammaDecomposition:
    dec = gamma_decomposition(_ifs(K).ratios, _ifs(Kp).ratios, bound)
    if isinstance(dec, GammaDecomposition):
        return dec
    if isinstance(dec, IrrationalPairWitness):
        raise UnsupportedCase(f"log-ratio of maps {dec.i} and {dec.j} is irrational; no common base")
    raise UnsupportedCase(f"common base undecided: {dec.reason}")
