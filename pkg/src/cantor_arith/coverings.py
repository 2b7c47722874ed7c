"""Outer approximations of ``K - lam*K'`` and ``K + lam*K'``."""

from __future__ import annotations

from fractions import Fraction
from typing import Any

from .intervals import IntervalSet, affine_image, minkowski_diff, minkowski_sum
from .rational import Q, RationalLike
from .sets import level_set, refine_to_scale


def difference_covering(
    K: Any, Kp: Any, lam: RationalLike = 1, depth: int = 8, budget: int | None = None
) -> IntervalSet:
    """Generation-``depth`` cylinders of both sets, differenced."""
    lam = Q(lam)
    A = level_set(K, depth, budget)
    B = affine_image(level_set(Kp, depth, budget), lam, 0)
    return minkowski_diff(A, B)


def difference_covering_at_scale(
    K: Any, Kp: Any, lam: RationalLike, delta: RationalLike, budget: int | None = None
) -> IntervalSet:
    """Scale-matched covering: every cylinder of ``K`` and of ``lam*K'`` is at most ``delta`` long."""
    lam, delta = Q(lam), Q(delta)
    A = refine_to_scale(K, delta, budget).set
    B = affine_image(refine_to_scale(Kp, delta / lam, budget).set, lam, 0)
    return minkowski_diff(A, B)


def sum_covering(
    K: Any, Kp: Any, lam: RationalLike = 1, depth: int = 8, budget: int | None = None
) -> IntervalSet:
    """``K + lam*K'`` computed as ``K - lam*(b - K') + lam*b``."""
    lam = Q(lam)
    ifs = Kp.to_ifs()
    reflected = difference_covering(K, ifs.reflect(), lam, depth, budget)
    return affine_image(reflected, 1, lam * ifs.a)


def direct_sum_covering(
    K: Any, Kp: Any, lam: RationalLike = 1, depth: int = 8, budget: int | None = None
) -> IntervalSet:
    lam = Q(lam)
    return minkowski_sum(level_set(K, depth, budget), affine_image(level_set(Kp, depth, budget), lam, Fraction(0)))
