"""Buyer choice from a menu, revenue, IC/IR checks and canonical pricing."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

from .lp import Infeasible, LpProblem, Optimal, Unbounded, solve
from .model import (
    INF,
    DetPricing,
    ExtPrice,
    Menu,
    MenuEntry,
    ValuationDist,
    alloc_mask,
    dot,
    fmt_rat,
)


class TieRule(enum.Enum):
    SELLER_FAVORABLE = "seller"
    BUYER_FAVORABLE = "buyer"
    TIE_FAVORABLE = "tie"
    INDEX_CONSISTENT = "index"


@dataclass(frozen=True)
class ChoiceResult:
    chosen: MenuEntry
    payoff: Fraction
    tie_set: tuple[MenuEntry, ...]

    @property
    def payment(self) -> Fraction:
        return self.chosen.price


def _index_key(entry: MenuEntry) -> tuple:
    mask = alloc_mask(entry.alloc)
    index_sum = sum(i + 1 for i in range(len(entry.alloc)) if mask >> i & 1)
    # Equal index sums (e.g. {3} vs {1,2}) fall back to the larger bitmask.
    return (entry.price, index_sum, mask)


def buyer_choice(menu: Menu, x: Sequence[Fraction], rule: TieRule) -> ChoiceResult:
    """The buyer's utility-maximizing menu entry at valuation x."""
    if len(x) != menu.k:
        raise ValueError(f"valuation has {len(x)} coordinates, menu has k={menu.k}")
    best = None
    ties: list[MenuEntry] = []
    for entry in menu.entries:
        u = dot(entry.alloc, x) - entry.price
        if best is None or u > best:
            best = u
            ties = [entry]
        elif u == best:
            ties.append(entry)
    if rule is TieRule.SELLER_FAVORABLE:
        chosen = max(ties, key=lambda e: e.price)
    elif rule is TieRule.BUYER_FAVORABLE:
        # The lexicographically largest allocation is coordinatewise maximal.
        chosen = max(ties, key=lambda e: e.alloc)
    elif rule is TieRule.TIE_FAVORABLE:
        chosen = max(ties, key=lambda e: (e.price, e.alloc))
    elif rule is TieRule.INDEX_CONSISTENT:
        chosen = max(ties, key=_index_key)
    else:
        raise ValueError(f"unknown tie rule {rule!r}")
    return ChoiceResult(chosen, best, tuple(ties))


def revenue(menu: Menu, dist: ValuationDist, rule: TieRule = TieRule.SELLER_FAVORABLE) -> Fraction:
    """Expected payment when each atom buys its chosen entry."""
    if menu.k != dist.k:
        raise ValueError(f"menu has k={menu.k}, distribution has k={dist.k}")
    total = Fraction(0)
    for atom in dist.atoms:
        if atom.p:
            total += atom.p * buyer_choice(menu, atom.x, rule).payment
    return total


@dataclass(frozen=True)
class IcViolation:
    """Atom `x` strictly prefers the option assigned to atom `y` (None = the outside option)."""

    x: int
    y: Optional[int]
    slack: Fraction

    @property
    def ok(self) -> bool:
        return False


@dataclass(frozen=True)
class IcOk:
    @property
    def ok(self) -> bool:
        return True


def verify_ic_ir(
    assignment: Sequence[tuple[Sequence[Fraction], Fraction]], dist: ValuationDist
) -> Union[IcOk, IcViolation]:
    """Check IC between all atom pairs, and IR and no-positive-transfer at every atom.

    Reports the largest violation; equal violations resolve to the lexicographically
    larger deviating valuation.
    """
    if len(assignment) != len(dist.atoms):
        raise ValueError("assignment must cover every atom")
    points = dist.points
    payoffs = [dot(q, x) - s for (q, s), x in zip(assignment, points)]
    worst: Optional[IcViolation] = None

    def consider(v: IcViolation):
        nonlocal worst
        if worst is None or (v.slack, points[v.x]) > (worst.slack, points[worst.x]):
            worst = v

    for i, ((q, s), x) in enumerate(zip(assignment, points)):
        if s < 0:
            consider(IcViolation(i, None, -s))
        if payoffs[i] < 0:
            consider(IcViolation(i, None, -payoffs[i]))
        for j, (qy, sy) in enumerate(assignment):
            if i != j:
                gain = dot(qy, x) - sy - payoffs[i]
                if gain > 0:
                    consider(IcViolation(i, j, gain))
    return worst if worst is not None else IcOk()


def canonical_det_price(menu: Menu) -> DetPricing:
    """Smallest nondecreasing set pricing agreeing with a deterministic menu."""
    if not menu.is_deterministic():
        raise ValueError("canonical_det_price needs a menu of 0/1 allocations")
    offers = [(alloc_mask(e.alloc), e.price) for e in menu.entries]
    prices = []
    for mask in range(1 << menu.k):
        candidates = [price for m, price in offers if m & mask == mask]
        prices.append(min(candidates) if candidates else INF)
    return DetPricing(menu.k, tuple(prices))


def primal_price(menu: Menu, g: Sequence[Fraction]) -> ExtPrice:
    """sup over x >= 0 of g.x - b(x), as an LP in (x, t) with t >= every affine piece."""
    k = menu.k
    problem = LpProblem(k + 1, lower=[Fraction(0)] * k + [None])
    for entry in menu.entries:
        row = {i: c for i, c in enumerate(entry.alloc) if c}
        row[k] = Fraction(-1)
        problem.add(row, "<=", entry.price)
    objective = {i: c for i, c in enumerate(g) if c}
    objective[k] = Fraction(-1)
    problem.set_objective(objective)
    outcome = solve(problem)
    if isinstance(outcome, Unbounded):
        return INF
    return outcome.value


def convexified_price(menu: Menu, g: Sequence[Fraction]) -> ExtPrice:
    """Cheapest convex combination of menu entries that dominates g."""
    n = len(menu.entries)
    problem = LpProblem(n, sense="min")
    for i in range(menu.k):
        problem.add({j: e.alloc[i] for j, e in enumerate(menu.entries) if e.alloc[i]}, ">=", g[i])
    problem.add([Fraction(1)] * n, "=", 1)
    problem.set_objective([e.price for e in menu.entries])
    outcome = solve(problem)
    if isinstance(outcome, Infeasible):
        return INF
    return outcome.value


def canonical_general_price(menu: Menu, g: Sequence[Fraction]) -> ExtPrice:
    """Canonical price of allocation g, computed two ways that must agree."""
    if len(g) != menu.k:
        raise ValueError(f"allocation has {len(g)} coordinates, menu has k={menu.k}")
    primal = primal_price(menu, g)
    convex = convexified_price(menu, g)
    if primal != convex:
        raise RuntimeError(
            f"canonical price formulations disagree: {fmt_rat(primal)} vs {fmt_rat(convex)}"
        )
    return primal
