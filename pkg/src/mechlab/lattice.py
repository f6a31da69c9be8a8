"""Lattice properties of set pricings and their supermodular majorants."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .lp import LpProblem, Optimal, solve
from .model import INF, DetPricing, SymPricing, popcount


class LatticeProperty(enum.Enum):
    NONDECREASING = "nondecreasing"
    SUBMODULAR = "submodular"
    SUPERMODULAR = "supermodular"
    SEPARABLY_SUBADDITIVE = "separably-subadditive"
    SEPARABLY_SUPERADDITIVE = "separably-superadditive"


@dataclass(frozen=True)
class PropertyVerdict:
    holds: bool
    witness: Optional[tuple] = None


def ext_sum(values: Iterable) -> object:
    total = Fraction(0)
    for v in values:
        if v is INF:
            return INF
        total += v
    return total


def ext_geq(left: Sequence, right: Sequence) -> bool:
    """sum(left) >= sum(right) with +inf; any inf on the left wins."""
    lsum, rsum = ext_sum(left), ext_sum(right)
    if lsum is INF:
        return True
    if rsum is INF:
        return False
    return lsum >= rsum


def _holds(p: DetPricing, prop: LatticeProperty, a: int, b: int) -> bool:
    if prop is LatticeProperty.NONDECREASING:
        return a & b != a or ext_geq([p[b]], [p[a]])
    if prop is LatticeProperty.SUBMODULAR:
        return ext_geq([p[a], p[b]], [p[a | b], p[a & b]])
    if prop is LatticeProperty.SUPERMODULAR:
        return ext_geq([p[a | b], p[a & b]], [p[a], p[b]])
    if prop is LatticeProperty.SEPARABLY_SUBADDITIVE:
        return a & b != 0 or ext_geq([p[a], p[b]], [p[a | b]])
    if prop is LatticeProperty.SEPARABLY_SUPERADDITIVE:
        return a & b != 0 or ext_geq([p[a | b]], [p[a], p[b]])
    raise ValueError(f"unknown property {prop!r}")


def check_det(
    p: DetPricing, prop: LatticeProperty, restrict_to: Optional[Iterable[int]] = None
) -> PropertyVerdict:
    """Exhaustive pair check; the witness is the first violating (A, B) by bitmask order.

    For Nondecreasing the pair is ordered (A subset of B); otherwise A < B as bitmasks.
    """
    family = sorted(set(restrict_to)) if restrict_to is not None else list(range(1 << p.k))
    if prop is LatticeProperty.NONDECREASING:
        for a in family:
            for b in family:
                if a != b and not _holds(p, prop, a, b):
                    return PropertyVerdict(False, (a, b))
        return PropertyVerdict(True)
    for idx, a in enumerate(family):
        for b in family[idx + 1:]:
            if not _holds(p, prop, a, b):
                return PropertyVerdict(False, (a, b))
    return PropertyVerdict(True)


def check_sym(p: SymPricing, prop: LatticeProperty = LatticeProperty.SUPERMODULAR) -> PropertyVerdict:
    """Supermodularity (or submodularity) of a symmetric pricing via second differences.

    The witness is the smallest level m where the difference sequence breaks.
    """
    lv = p.levels
    for m in range(1, len(lv)):
        if prop is LatticeProperty.NONDECREASING:
            ok = ext_geq([lv[m]], [lv[m - 1]])
        elif m < 2:
            continue
        elif prop is LatticeProperty.SUPERMODULAR:
            ok = ext_geq([lv[m], lv[m - 2]], [lv[m - 1], lv[m - 1]])
        elif prop is LatticeProperty.SUBMODULAR:
            ok = ext_geq([lv[m - 1], lv[m - 1]], [lv[m], lv[m - 2]])
        else:
            raise ValueError(f"check_sym does not support {prop!r}")
        if not ok:
            return PropertyVerdict(False, (m,))
    return PropertyVerdict(True)


def supermod_majorant_det(p: DetPricing) -> DetPricing:
    """A minimal supermodular pricing pointwise >= p, built up by set size."""
    if any(v is INF for v in p.prices):
        raise ValueError("supermod_majorant_det needs finite prices")
    out = [Fraction(0)] * (1 << p.k)
    for mask in sorted(range(1, 1 << p.k), key=lambda m: (popcount(m), m)):
        best = p[mask]
        members = [i for i in range(p.k) if mask >> i & 1]
        for a in range(len(members)):
            for b in range(a + 1, len(members)):
                without_i = mask & ~(1 << members[a])
                without_j = mask & ~(1 << members[b])
                candidate = out[without_i] + out[without_j] - out[without_i & without_j]
                if candidate > best:
                    best = candidate
        out[mask] = best
    return DetPricing(p.k, tuple(out))


def _majorant_program(p: DetPricing, upper: Optional[DetPricing] = None) -> LpProblem:
    """LP over q: q(empty) = 0, q >= p, q supermodular, and q <= upper when given."""
    if any(v is INF for v in p.prices):
        raise ValueError("majorant programs need finite prices")
    n = 1 << p.k
    problem = LpProblem(n, sense="min", lower=[None] * n)
    problem.add({0: Fraction(1)}, "=", 0)
    for m in range(1, n):
        problem.add({m: Fraction(1)}, ">=", p[m])
        if upper is not None:
            problem.add({m: Fraction(1)}, "<=", upper[m])
    for a in range(n):
        for b in range(a + 1, n):
            if a & b not in (a, b):
                row: dict = {}
                for m, c in ((a | b, 1), (a & b, 1), (a, -1), (b, -1)):
                    row[m] = row.get(m, 0) + Fraction(c)
                problem.add(row, ">=", 0)
    return problem


def _solve_min(problem: LpProblem) -> Fraction:
    outcome = solve(problem)
    if not isinstance(outcome, Optimal):
        raise RuntimeError(f"majorant LP ended {type(outcome).__name__}")
    return outcome.value


def supermod_majorant_lp(p: DetPricing, mask: int) -> Fraction:
    """min q(mask) over supermodular q >= p with q(empty) = 0, solved as an LP.

    This pointwise minimum can sit strictly below supermod_majorant_det: raising
    a small set may relax the supermodularity floor on a larger one.
    """
    problem = _majorant_program(p)
    problem.set_objective({mask: Fraction(1)})
    return _solve_min(problem)


def is_minimal_majorant(p: DetPricing, q: DetPricing) -> bool:
    """True when no supermodular r with p <= r <= q differs from q (LP on the sum of r)."""
    problem = _majorant_program(p, upper=q)
    problem.set_objective([Fraction(1)] * (1 << p.k))
    return _solve_min(problem) == sum(q.prices, Fraction(0))


def supermod_majorant_sym(p: SymPricing) -> SymPricing:
    """Running maximum of the price differences, summed back up."""
    if any(v is INF for v in p.levels):
        raise ValueError("supermod_majorant_sym needs finite prices")
    levels = [Fraction(0)]
    running = None
    for m in range(1, len(p.levels)):
        diff = p.levels[m] - p.levels[m - 1]
        running = diff if running is None else max(running, diff)
        levels.append(levels[-1] + running)
    return SymPricing(tuple(levels))


def harmonic(k: int) -> Fraction:
    if k < 1:
        raise ValueError("harmonic(k) needs k >= 1")
    return sum((Fraction(1, m) for m in range(1, k + 1)), Fraction(0))


def finite_replacement(p: DetPricing) -> DetPricing:
    """Replace each infinite price p(B) by |B| * M with M above every finite price."""
    top = max((v for v in p.prices if v is not INF), default=Fraction(0))
    big = top + 1
    return DetPricing(p.k, tuple(big * popcount(m) if v is INF else v for m, v in enumerate(p.prices)))
