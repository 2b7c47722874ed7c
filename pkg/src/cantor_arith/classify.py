"""Structural classification of ``K - lam*K'``.

The cascade is: both thickness products at least one gives a finite union of
intervals (proven); dimension sum below one gives a Cantor set (proven);
otherwise a finite-depth reading of coverings and endpoint certificates gives
an empirical label.  Empirical labels are evidence, never theorems.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Iterable, Mapping, Sequence

from .coverings import difference_covering
from .dimension import moran_dimension
from .errors import BudgetExceeded, PreconditionError
from .intervals import Interval, IntervalSet, gaps
from .rational import Q, RationalLike, rat_str
from .renormalization import (
    EvidenceStatus,
    endpoint_interval_evidence,
    lemma1_check,
)
from .sets import CantorPair, TwoMapCantorSet, thickness


class ClassLabel(str, Enum):
    CANTOR = "CantorSet"
    L = "LCantorval"
    R = "RCantorval"
    M = "MCantorval"
    FINITE_UNION = "FiniteUnionIntervals"
    UNKNOWN = "Unknown"

    def mirror(self) -> "ClassLabel":
        if self is ClassLabel.L:
            return ClassLabel.R
        if self is ClassLabel.R:
            return ClassLabel.L
        return self


class Certainty(str, Enum):
    PROVEN = "Proven"
    EMPIRICAL = "Empirical"


@dataclass
class StructureClass:
    label: ClassLabel
    certainty: Certainty
    diagnostics: dict[str, Any] = field(default_factory=dict)

    def mirror(self) -> "StructureClass":
        return StructureClass(self.label.mirror(), self.certainty, dict(self.diagnostics))


@dataclass
class ConditionTable:
    hd_sum: float
    tau_rl: Fraction  # tau_R(K) * tau_L(K')
    tau_lr: Fraction  # tau_L(K) * tau_R(K')
    lemma1: bool
    evidence: EvidenceStatus | None = None
    evidence_swapped: EvidenceStatus | None = None

    @property
    def products_at_least_one(self) -> bool:
        return self.tau_rl >= 1 and self.tau_lr >= 1

    @property
    def products_at_most_one(self) -> bool:
        return self.tau_rl <= 1 and self.tau_lr <= 1


def theorem2_conditions(pair: CantorPair, lam: RationalLike = 1, with_evidence: bool = False) -> ConditionTable:
    lam = Q(lam)
    tl, tr = thickness(pair.K)
    tlp, trp = thickness(pair.Kp)
    hd = moran_dimension([1 / pair.K.p0, 1 / pair.K.p1]) + moran_dimension([1 / pair.Kp.p0, 1 / pair.Kp.p1])
    table = ConditionTable(hd, tr * tlp, tl * trp, lemma1_check(pair).holds)
    if with_evidence:
        table.evidence = endpoint_interval_evidence(pair, lam).status
        table.evidence_swapped = endpoint_interval_evidence(pair.swapped(), 1 / lam).status
    return table


# ---------------------------------------------------------------------------
# empirical reading of coverings


def _component_index(cover: IntervalSet, x: Fraction) -> int:
    i = cover._index_of(x)
    return i if i >= 0 and x <= cover.intervals[i].hi else -1


def _largest_gaps(gs: list[Interval], n: int) -> list[Interval]:
    if len(gs) <= n:
        return list(gs)
    ranked = sorted(gs, key=lambda g: (-(g.hi - g.lo), g.lo))
    cutoff = ranked[n - 1].hi - ranked[n - 1].lo
    return sorted((g for g in gs if g.hi - g.lo >= cutoff), key=lambda g: g.lo)


def _persistence(covers: Sequence[IntervalSet], theta: Fraction) -> list[bool]:
    """For each component of the deepest cover: is it longer than ``theta`` times its shallowest ancestor?

    Measured across the whole window, not per step: clusters of overlapping
    images shrink by about ``theta`` per refinement and fail, genuine interval
    pieces keep their length and pass.
    """
    deep, base = covers[-1], covers[0]
    out = []
    for comp in deep:
        anc = base.intervals[_component_index(base, comp.lo)]
        out.append(comp.hi > comp.lo and (comp.hi - comp.lo) > theta * (anc.hi - anc.lo))
    return out


def classify_pair(
    pair: CantorPair,
    lam: RationalLike = 1,
    depth: int = 7,
    theta: RationalLike | None = None,
    n_gaps: int = 32,
    use_evidence: bool = True,
    budget: int | None = None,
) -> StructureClass:
    lam = Q(lam)
    if lam <= 0:
        raise PreconditionError("lambda must be positive")
    table = theorem2_conditions(pair, lam)
    diag: dict[str, Any] = {
        "depth": depth,
        "hd_sum": table.hd_sum,
        "tau_rl": rat_str(table.tau_rl),
        "tau_lr": rat_str(table.tau_lr),
        "notes": [],
    }
    if table.products_at_least_one:
        diag["rule"] = "thickness products >= 1"
        diag["interval"] = None
        return StructureClass(ClassLabel.FINITE_UNION, Certainty.PROVEN, diag)
    if table.hd_sum < 1:
        diag["rule"] = "dimension sum < 1"
        return StructureClass(ClassLabel.CANTOR, Certainty.PROVEN, diag)

    th = Q(theta) if theta is not None else max(1 / pair.K.p0, 1 / pair.K.p1, 1 / pair.Kp.p0, 1 / pair.Kp.p1)
    diag["rule"] = "empirical"
    diag["theta"] = rat_str(th)
    try:
        covers = [difference_covering(pair.K, pair.Kp, lam, d, budget) for d in (depth, depth + 1, depth + 2)]
    except BudgetExceeded as exc:
        diag["notes"].append(str(exc))
        return StructureClass(ClassLabel.UNKNOWN, Certainty.EMPIRICAL, diag)
    base, deep = covers[0], covers[-1]
    persistent = _persistence(covers, th)
    n_persistent = sum(persistent)
    all_gaps = gaps(base)
    chosen = _largest_gaps(all_gaps, n_gaps)
    diag.update(
        n_components=len(deep),
        n_persistent=n_persistent,
        n_gaps=len(all_gaps),
        largest_gap=rat_str(max((g.hi - g.lo for g in all_gaps), default=Fraction(0))),
        gaps_inspected=len(chosen),
    )

    left_override = right_override = False
    if use_evidence:
        ev = endpoint_interval_evidence(pair, lam)
        ev_sw = endpoint_interval_evidence(pair.swapped(), 1 / lam)
        diag["evidence"] = ev.status.value
        diag["evidence_swapped"] = ev_sw.status.value
        # gaps accumulated at the right end of the hull: left sides of gaps are not interval-adjacent
        left_override = ev.status is EvidenceStatus.NO
        right_override = ev_sw.status is EvidenceStatus.NO

    patterns = []
    for g in chosen:
        li = _component_index(deep, g.lo)
        ri = _component_index(deep, g.hi)
        left = li >= 0 and deep.intervals[li].hi == g.lo and persistent[li]
        right = ri >= 0 and deep.intervals[ri].lo == g.hi and persistent[ri]
        if left_override:
            left = False
        if right_override:
            right = False
        patterns.append((left, right))
    counts = {
        "both": sum(1 for p in patterns if p == (True, True)),
        "right_only": sum(1 for p in patterns if p == (False, True)),
        "left_only": sum(1 for p in patterns if p == (True, False)),
        "neither": sum(1 for p in patterns if p == (False, False)),
    }
    diag["gap_patterns"] = counts

    if n_persistent == 0:
        label = ClassLabel.CANTOR
    elif not patterns or counts["both"] == len(patterns):
        label = ClassLabel.FINITE_UNION
    elif counts["right_only"] == len(patterns):
        label = ClassLabel.L
    elif counts["left_only"] == len(patterns):
        label = ClassLabel.R
    elif counts["neither"] == len(patterns):
        label = ClassLabel.M
    else:
        label = ClassLabel.UNKNOWN
        diag["notes"].append("mixed gap patterns")

    if label is ClassLabel.FINITE_UNION and not table.lemma1:
        diag["notes"].append("finite-union pattern but thickness products are not both >= 1")
        label = ClassLabel.UNKNOWN
    if table.products_at_most_one and label in (ClassLabel.L, ClassLabel.R, ClassLabel.FINITE_UNION, ClassLabel.UNKNOWN):
        new = ClassLabel.M if n_persistent else ClassLabel.CANTOR
        if label is not ClassLabel.UNKNOWN or new is not label:
            diag["notes"].append(f"{label.value} reading overridden: both thickness products <= 1")
        label = new
    return StructureClass(label, Certainty.EMPIRICAL, diag)


# ---------------------------------------------------------------------------
# sweeps and sampling


@dataclass
class SweepRow:
    lam: Fraction
    result: StructureClass
    hd_sum: float
    tau_rl: Fraction
    tau_lr: Fraction
    depth: int

    @property
    def n_gaps(self) -> int | None:
        return self.result.diagnostics.get("n_gaps")

    @property
    def largest_gap(self) -> str | None:
        return self.result.diagnostics.get("largest_gap")


def lambda_sweep(pair: CantorPair, grid: Iterable[RationalLike], depth: int = 7, **kwargs: Any) -> list[SweepRow]:
    rows = []
    for lam in grid:
        lam = Q(lam)
        res = classify_pair(pair, lam, depth, **kwargs)
        d = res.diagnostics
        rows.append(SweepRow(lam, res, d["hd_sum"], Q(d["tau_rl"]), Q(d["tau_lr"]), depth))
    return rows


DYADIC_BITS = 16
_DEFAULT_BOUNDS = {"p0": (2.5, 4), "p1": (2.5, 4), "a": (1, 1), "q0": (2.5, 4), "q1": (2.5, 4), "b": (1, 1)}


def _grid(lo: Fraction, hi: Fraction) -> tuple[int, int]:
    den = 2**DYADIC_BITS
    nlo = math.ceil(lo * den)
    nhi = math.floor(hi * den)
    return nlo, nhi


def sample_space(
    count: int, bounds: Mapping[str, Sequence[RationalLike]] | None = None, seed: int = 0, max_tries: int = 10**6
) -> list[CantorPair]:
    """Uniform dyadic samples (denominator ``2**16``) rejected against the gap condition."""
    bds = dict(_DEFAULT_BOUNDS)
    if bounds:
        unknown = set(bounds) - set(bds)
        if unknown:
            raise PreconditionError(f"unknown bound keys: {sorted(unknown)}")
        bds.update(bounds)
    grids = {}
    den = 2**DYADIC_BITS
    for k, (lo, hi) in bds.items():
        lo, hi = Q(lo), Q(hi)
        nlo, nhi = _grid(lo, hi)
        if nlo > nhi:
            raise PreconditionError(f"bound for {k} contains no dyadic point")
        if k in ("p0", "p1", "q0", "q1") and Fraction(nhi, den) <= 1:
            raise PreconditionError(f"{k} must exceed 1")
        if k in ("a", "b") and Fraction(nhi, den) <= 0:
            raise PreconditionError(f"{k} must be positive")
        grids[k] = (nlo, nhi)
    for x, y in (("p0", "p1"), ("q0", "q1")):
        best = 1 / Fraction(grids[x][1], den) + 1 / Fraction(grids[y][1], den)
        if best >= 1:
            raise PreconditionError(f"empty feasible region: 1/{x} + 1/{y} >= 1 throughout the bounds")
    rng = random.Random(seed)
    out: list[CantorPair] = []
    tries = 0
    while len(out) < count:
        tries += 1
        if tries > max_tries:
            raise PreconditionError("rejection sampling did not converge")
        v = {k: Fraction(rng.randint(*grids[k]), den) for k in ("p0", "p1", "a", "q0", "q1", "b")}
        if min(v["p0"], v["p1"], v["q0"], v["q1"]) <= 1 or v["a"] <= 0 or v["b"] <= 0:
            continue
        K = TwoMapCantorSet(v["p0"], v["p1"], v["a"])
        Kp = TwoMapCantorSet(v["q0"], v["q1"], v["b"])
        if K.G <= 0 or Kp.G <= 0:
            continue
        out.append(CantorPair(K, Kp))
    return out
