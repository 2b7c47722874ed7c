"""Exact rational scalars.

``fractions.Fraction`` already keeps numerator and denominator in lowest terms
with a positive denominator, so it is used directly as the scalar type.  This
module only adds parsing and the canonical ``"num/den"`` text form used in
every file format.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Union

RationalLike = Union[Fraction, int, str, float]

_MINUS_SIGNS = ("−", "–")


def Q(value: RationalLike) -> Fraction:
    """Coerce ``value`` to an exact ``Fraction``.

    Strings may be ``"3"``, ``"-2/3"``, ``"2.5"`` or use a unicode minus.
    Floats are read through their shortest decimal repr, so ``0.1`` becomes
    ``1/10`` rather than the binary expansion.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite value {value!r}")
        return Fraction(repr(value))
    if isinstance(value, str):
        text = value.strip()
        for sign in _MINUS_SIGNS:
            text = text.replace(sign, "-")
        if not text:
            raise ValueError("empty rational string")
        return Fraction(text)
    raise TypeError(f"cannot interpret {type(value).__name__} as a rational")


def rat_str(x: Fraction | int) -> str:
    """Canonical text form: ``"3"``, ``"-2/3"``."""
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def common_denominator(values: Iterable[Fraction]) -> int:
    den = 1
    for v in values:
        d = v.denominator
        if den % d:
            den = den * d // math.gcd(den, d)
    return den


def log_fraction(x: Fraction) -> float:
    """Natural log of a positive rational without float underflow."""
    if x <= 0:
        raise ValueError("log of non-positive rational")
    return math.log(x.numerator) - math.log(x.denominator)
