from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cantor_arith.errors import BudgetExceeded, ConfigError, GapConditionError, PreconditionError
from cantor_arith.intervals import Interval, minkowski_diff, normalize
from cantor_arith.sets import (
    AffineIFS,
    CantorPair,
    default_budget,
    level_covering,
    level_set,
    normalize_pair,
    pair,
    reflect,
    refine_to_scale,
    set_from_json,
    thickness,
    two_map,
    validate,
)

from conftest import cylinders, naive_merge

MT = AffineIFS.of(1, [(F(1, 3), 0), (F(1, 3), F(2, 3))])


def as_pairs(X):
    return [(iv.lo, iv.hi) for iv in X]


@st.composite
def two_maps(draw):
    """Random valid (p0, p1, a) with G > 0."""
    p0 = draw(st.fractions(F(21, 10), 6, max_denominator=16))
    lo = p0 / (p0 - 1)  # 1/p0 + 1/p1 < 1  <=>  p1 > p0/(p0-1)
    p1 = lo + draw(st.fractions(F(1, 16), 4, max_denominator=16))
    a = draw(st.fractions(F(1, 4), 3, max_denominator=8))
    return two_map(p0, p1, a)


class TestValidate:
    def test_middle_thirds_ok(self):
        assert validate(MT) is None

    def test_touching(self):
        v = validate(AffineIFS.of(1, [(F(1, 2), 0), (F(1, 2), F(1, 2))]))
        assert v is not None and "images touch/overlap" in str(v)

    def test_exits_hull(self):
        v = validate(AffineIFS.of(1, [(F(1, 3), 0), (F(1, 3), F(3, 4))]))
        assert v is not None and "image exits hull" in str(v)


class TestCoverings:
    def test_levels(self):
        assert as_pairs(level_set(MT, 1)) == [(0, F(1, 3)), (F(2, 3), 1)]
        assert as_pairs(level_set(MT, 2)) == [(0, F(1, 9)), (F(2, 9), F(1, 3)), (F(2, 3), F(7, 9)), (F(8, 9), 1)]
        X = AffineIFS.of(1, [(F(1, 2), 0), (F(1, 4), F(3, 4))])
        assert as_pairs(level_set(X, 1)) == [(0, F(1, 2)), (F(3, 4), 1)]

    def test_words(self):
        cov = level_covering(MT, 2)
        assert cov.words == [(0, 0), (0, 1), (1, 0), (1, 1)]
        for w, iv in zip(cov.words, cov.intervals):
            assert MT.cylinder(w) == iv

    def test_refine(self):
        assert refine_to_scale(MT, F(1, 3)).set == level_set(MT, 1)
        assert refine_to_scale(MT, F(1, 4)).set == level_set(MT, 2)
        X = AffineIFS.of(1, [(F(1, 2), 0), (F(1, 4), F(3, 4))])
        assert as_pairs(refine_to_scale(X, F(3, 8)).set) == [(0, F(1, 4)), (F(3, 8), F(1, 2)), (F(3, 4), 1)]

    def test_budget(self):
        with pytest.raises(BudgetExceeded) as exc:
            level_set(MT, 10, budget=100)
        assert exc.value.required == 1024

    def test_budget_env(self, monkeypatch):
        monkeypatch.setenv("CANTOR_ARITH_BUDGET", "8")
        assert default_budget() == 8
        with pytest.raises(BudgetExceeded):
            level_set(MT, 4)
        monkeypatch.setenv("CANTOR_ARITH_BUDGET", "lots")
        with pytest.raises(ConfigError):
            default_budget()

    @given(two_maps(), st.integers(0, 5))
    def test_recursive_oracle(self, K, k):
        ifs = K.to_ifs()
        ref = naive_merge(cylinders(ifs.ratios, ifs.shifts, ifs.a, k))
        assert as_pairs(level_set(K, k)) == ref

    @given(two_maps(), st.integers(0, 6))
    def test_nesting_and_endpoints(self, K, k):
        outer, inner = level_set(K, k), level_set(K, k + 1)
        for iv in inner:
            assert outer.contains_interval(iv)
        assert 0 in inner and K.a in inner


class TestTwoMap:
    def test_middle_thirds(self):
        K = two_map(3, 3, 1)
        assert K.I0 == Interval(0, F(1, 3)) and K.I1 == Interval(F(2, 3), 1)
        assert K.G == F(1, 3) and K.e1 == -2

    def test_fifths(self):
        K = two_map(5, 5, 1)
        assert K.I0 == Interval(0, F(1, 5)) and K.I1 == Interval(F(4, 5), 1) and K.G == F(3, 5)

    def test_gap_condition(self):
        with pytest.raises(GapConditionError, match="gap condition violated"):
            two_map(2, 2, 1)
        with pytest.raises(PreconditionError):
            two_map(1, 3, 1)

    def test_thickness(self):
        assert thickness(two_map(3, 3, 1)) == (1, 1)
        assert thickness(two_map(5, 5, 1)) == (F(1, 3), F(1, 3))
        assert thickness(two_map(2, 4, 1)) == (2, 1)

    def test_reflect(self):
        assert reflect(two_map(3, 3, 1)) == two_map(3, 3, 1)
        assert reflect(two_map(2, 4, 1)) == two_map(4, 2, 1)

    @given(two_maps())
    def test_reflect_properties(self, K):
        R = reflect(K)
        assert R.G == K.G
        tl, tr = thickness(K)
        assert thickness(R) == (tr, tl)
        # the attractor itself is mirrored
        assert level_set(R, 3) == normalize([(K.a - iv.hi, K.a - iv.lo) for iv in level_set(K, 3)])

    @given(two_maps(), two_maps())
    def test_thickness_region_equivalence(self, K, Kp):
        P = CantorPair(K, Kp)
        tl, tr = thickness(K)
        tlp, trp = thickness(Kp)
        lhs = tr * tlp >= 1 and tl * trp >= 1
        rhs = max(K.p0 * Kp.p1, K.p1 * Kp.p0) <= P.s0 / P.s1
        assert lhs == rhs


class TestNormalizePair:
    def test_identity(self):
        P, phi = normalize_pair(MT, MT)
        assert P == pair((3, 3, 1), (3, 3, 1))
        assert (phi.alpha, phi.beta) == (1, 0)

    def test_translated(self):
        A = AffineIFS.of(5, [(F(1, 3), F(4, 3)), (F(1, 3), F(10, 3))])
        P, phi = normalize_pair(A, MT)
        assert P.K == two_map(3, 3, 3) and P.Kp == two_map(3, 3, 1)
        assert phi(0) == 2

    def test_mixed(self):
        B = AffineIFS.of(1, [(F(1, 5), 0), (F(1, 5), F(4, 5))])
        P, phi = normalize_pair(MT, B)
        assert P == pair((3, 3, 1), (5, 5, 1)) and phi(F(7, 3)) == F(7, 3)

    @pytest.mark.parametrize("k", [1, 3, 6])
    def test_covering_equality(self, k):
        A = AffineIFS.of(5, [(F(1, 3), F(4, 3)), (F(1, 4), F(15, 4))])
        B = AffineIFS.of(2, [(F(1, 3), F(1, 3)), (F(1, 3), F(4, 3))])
        P, phi = normalize_pair(A, B, verify_depth=0)
        # covers built from each IFS on its own attractor hull
        def cov(X, lo, hi):
            cells = [(lo, hi)]
            for _ in range(k):
                cells = [(m(x), m(y)) for x, y in cells for m in X.maps]
            return normalize(cells)

        lhs = minkowski_diff(cov(A, F(2), F(5)), cov(B, F(1, 2), F(2)))
        base = minkowski_diff(level_set(P.K, k), level_set(P.Kp, k))
        assert as_pairs(lhs) == [(phi(iv.lo), phi(iv.hi)) for iv in base]

    def test_rejects_three_maps(self):
        X = AffineIFS.of(1, [(F(1, 5), 0), (F(1, 5), F(2, 5)), (F(1, 5), F(4, 5))])
        with pytest.raises(PreconditionError):
            normalize_pair(X, MT)

    def test_rejects_decreasing(self):
        X = AffineIFS.of(1, [(F(-1, 3), F(1, 3)), (F(1, 3), F(2, 3))])
        with pytest.raises(PreconditionError):
            normalize_pair(X, MT)


class TestJson:
    def test_two_map(self):
        assert set_from_json({"type": "two_map", "p0": "3", "p1": "3", "a": "1"}) == two_map(3, 3, 1)

    def test_ifs(self):
        X = set_from_json({"type": "ifs", "a": "1", "maps": [{"r": "1/3", "t": "0"}, {"r": "1/3", "t": "2/3"}]})
        assert X == MT

    @pytest.mark.parametrize(
        "spec",
        [
            {"type": "two_map", "p0": "3", "p1": "3", "zz": 1},
            {"type": "blob"},
            {"type": "two_map", "p0": "3"},
            {"type": "two_map", "p0": "x", "p1": "3"},
            [],
        ],
    )
    def test_rejects(self, spec):
        with pytest.raises((ConfigError, PreconditionError)):
            set_from_json(spec)

    def test_roundtrip(self):
        K = two_map("7/2", 4, "3/2")
        assert set_from_json(K.to_json()) == K
        assert set_from_json(MT.to_json()) == MT
