import sys
from fractions import Fraction

import pytest
from hypothesis import settings

from cantor_arith.sets import pair, two_map

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


def naive_merge(pairs):
    """Reference merge used by oracles: repeated pass until nothing touches."""
    items = sorted((Fraction(lo), Fraction(hi)) for lo, hi in pairs)
    out = []
    for lo, hi in items:
        if out and lo <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], hi))
        else:
            out.append((lo, hi))
    return out


def cylinders(ratios, shifts, a, k):
    """Recursive generation-k cylinders of an IFS on [0, a]."""
    if k == 0:
        return [(Fraction(0), Fraction(a))]
    out = []
    for lo, hi in cylinders(ratios, shifts, a, k - 1):
        L = hi - lo
        for r, t in zip(ratios, shifts):
            # map f_w o f_i: child of [lo, hi] is lo + (L/a) * [t, t + r*a]
            out.append((lo + L / a * t, lo + L / a * (t + r * a)))
    return out


@pytest.fixture
def middle_thirds():
    return pair((3, 3, 1), (3, 3, 1))


@pytest.fixture
def fifths():
    return pair((5, 5, 1), (5, 5, 1))


@pytest.fixture
def K24():
    return two_map(2, 4, 1)


def local_member(K, Kp, lam, t, depth):
    """Is t in the depth-d covering of K - lam*K'? Expands only pairs whose projection holds t."""
    A, B = K.to_ifs(), Kp.to_ifs()
    front = [(Fraction(0), Fraction(1), Fraction(0), Fraction(1))]
    for _ in range(depth):
        nxt = []
        for ilo, isc, jlo, jsc in front:
            for mi in A.maps:
                a_lo, a_sc = ilo + isc * mi.t, isc * mi.r
                for mj in B.maps:
                    b_lo, b_sc = jlo + jsc * mj.t, jsc * mj.r
                    if a_lo - lam * (b_lo + b_sc * B.a) <= t <= a_lo + a_sc * A.a - lam * b_lo:
                        nxt.append((a_lo, a_sc, b_lo, b_sc))
        front = nxt
        if not front:
            return False
    return True


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.report_lines():
        terminalreporter.write_line(line)
