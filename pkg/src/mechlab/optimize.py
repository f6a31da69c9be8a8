"""Revenue functionals over finitely supported valuation distributions."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .eval import IcOk, TieRule, revenue, verify_ic_ir
from .lattice import harmonic
from .lp import CapExceeded, Infeasible, LpProblem, Optimal, solve
from .model import (
    INF,
    BundlingPartition,
    DetPricing,
    Menu,
    SymPricing,
    ValuationDist,
    all_partitions,
    block_marginal,
    diagonal_augment,
    dominance_pairs,
    indicator,
    marginal,
    popcount,
    positive_part,
    set_value,
)

DEFAULT_CAP = 1 << 20


class Mode(enum.Enum):
    GENERAL = "general"
    SUPERMODULAR = "supermodular"


@dataclass(frozen=True)
class RevenueResult:
    """Revenue value plus a mechanism realizing it.

    `witness` holds a `menu` (replayed under seller-favorable ties), or an
    `assignment` of (allocation, payment) per atom of `points` for the
    relaxed monotone programs.  Other keys are descriptive.
    """

    value: Fraction
    witness: dict = field(default_factory=dict)


# ---------------------------------------------------------------- posted prices


def _posted_price(values_probs: Sequence[tuple[Fraction, Fraction]]) -> tuple[Fraction, Fraction]:
    """Best single price over the positive-probability support: (revenue, smallest best price)."""
    support = sorted({v for v, p in values_probs if p > 0})
    best_value, best_price = Fraction(0), Fraction(0)
    for t in support:
        tail = sum((p for v, p in values_probs if v >= t), Fraction(0))
        if t * tail > best_value:
            best_value, best_price = t * tail, t
    return best_value, best_price


def _additive_pricing(k: int, item_prices: Sequence[Fraction]) -> DetPricing:
    return DetPricing(k, tuple(set_value(item_prices, m) for m in range(1 << k)))


def myerson_rev(dist: ValuationDist) -> RevenueResult:
    """Optimal posted price for one good."""
    if dist.k != 1:
        raise ValueError(f"myerson_rev needs a one-good distribution, got k={dist.k}")
    value, price = _posted_price([(a.x[0], a.p) for a in dist.atoms])
    menu = Menu.of(1, [((1,), price)])
    return RevenueResult(value, {"price": price, "menu": menu})


def srev(dist: ValuationDist) -> RevenueResult:
    """Each good sold separately at its own optimal price."""
    prices, total = [], Fraction(0)
    for i in range(dist.k):
        result = myerson_rev(marginal(dist, i))
        prices.append(result.witness["price"])
        total += result.value
    pricing = _additive_pricing(dist.k, prices)
    return RevenueResult(total, {"prices": prices, "pricing": pricing, "menu": pricing.menu()})


def brev(dist: ValuationDist) -> RevenueResult:
    """Grand bundle at its optimal price."""
    result = myerson_rev(marginal(dist, "sum"))
    price = result.witness["price"]
    menu = Menu.of(dist.k, [(tuple(Fraction(1) for _ in range(dist.k)), price)])
    return RevenueResult(result.value, {"price": price, "menu": menu})


def symsrev(dist: ValuationDist) -> RevenueResult:
    """Every good sold separately at one common price."""
    support = sorted({c for a in dist.atoms if a.p > 0 for c in a.x})
    best_value, best_price = Fraction(0), Fraction(0)
    for t in support:
        value = t * sum((a.p for a in dist.atoms for c in a.x if c >= t), Fraction(0))
        if value > best_value:
            best_value, best_price = value, t
    pricing = _additive_pricing(dist.k, [best_price] * dist.k)
    return RevenueResult(best_value, {"price": best_price, "pricing": pricing, "menu": pricing.menu()})


def partition_rev(dist: ValuationDist, partition: BundlingPartition) -> RevenueResult:
    """Each block of the partition sold as one bundle at its own optimal price."""
    if partition.k != dist.k:
        raise ValueError("partition and distribution disagree on k")
    block_prices, total = [], Fraction(0)
    for block in partition.blocks:
        result = myerson_rev(block_marginal(dist, block))
        block_prices.append(result.witness["price"])
        total += result.value
    entries = []
    for choice in range(1, 1 << len(partition.blocks)):
        mask, price = 0, Fraction(0)
        for j, block in enumerate(partition.blocks):
            if choice >> j & 1:
                mask |= block
                price += block_prices[j]
        entries.append((indicator(mask, dist.k), price))
    menu = Menu.of(dist.k, entries)
    return RevenueResult(total, {"blocks": list(partition.blocks), "prices": block_prices, "menu": menu})


# ---------------------------------------------------------------- IC linear programs


def _ic_program(dist: ValuationDist, monotone: Optional[str]) -> tuple[LpProblem, list]:
    """Variables q(x) in [0,1]^k then b(x) >= 0 per atom; IC, NPT and optional monotonicity."""
    k, pts = dist.k, dist.points
    n = len(pts)
    qv = lambda a, i: a * k + i  # noqa: E731
    bv = lambda a: n * k + a  # noqa: E731
    problem = LpProblem(n * k + n, upper=[Fraction(1)] * (n * k) + [None] * n)
    objective: dict = {}
    for a, atom in enumerate(dist.atoms):
        if atom.p:
            for i in range(k):
                if atom.x[i]:
                    objective[qv(a, i)] = atom.p * atom.x[i]
            objective[bv(a)] = -atom.p
    problem.set_objective(objective)
    for x in range(n):
        for y in range(n):
            if x == y:
                continue
            # b(y) - b(x) + q(y).(x - y) <= 0
            row = {bv(y): Fraction(1), bv(x): Fraction(-1)}
            for i in range(k):
                d = pts[x][i] - pts[y][i]
                if d:
                    row[qv(y, i)] = d
            problem.add(row, "<=", 0)
    for a in range(n):
        # payment q(a).x(a) - b(a) >= 0
        row = {qv(a, i): pts[a][i] for i in range(k) if pts[a][i]}
        row[bv(a)] = Fraction(-1)
        problem.add(row, ">=", 0)
    pairs = dominance_pairs(pts) if monotone else []
    for lo, hi in pairs:
        if monotone == "payment":
            # s(lo) <= s(hi)
            row: dict = {}
            for i in range(k):
                if pts[lo][i]:
                    row[qv(lo, i)] = pts[lo][i]
                if pts[hi][i]:
                    row[qv(hi, i)] = row.get(qv(hi, i), 0) - pts[hi][i]
            row[bv(lo)] = Fraction(-1)
            row[bv(hi)] = Fraction(1)
            problem.add(row, "<=", 0)
        else:
            for i in range(k):
                problem.add({qv(lo, i): Fraction(1), qv(hi, i): Fraction(-1)}, "<=", 0)
    return problem, pairs


def _assignment_from(dist: ValuationDist, point: Sequence[Fraction]) -> list:
    k, n = dist.k, len(dist.atoms)
    out = []
    for a, atom in enumerate(dist.atoms):
        q = tuple(point[a * k: a * k + k])
        b = point[n * k + a]
        out.append((q, sum((qi * xi for qi, xi in zip(q, atom.x)), Fraction(0)) - b))
    return out


def _menu_from_assignment(k: int, assignment) -> Menu:
    prices: dict = {}
    for q, s in assignment:
        if q in prices and prices[q] != s:
            raise RuntimeError("IC solution offers one allocation at two prices")
        prices[q] = s
    return Menu.of(k, sorted(prices.items()))


def _solve_ic(dist: ValuationDist, monotone: Optional[str]) -> RevenueResult:
    problem, pairs = _ic_program(dist, monotone)
    outcome = solve(problem)
    if not isinstance(outcome, Optimal):
        raise RuntimeError(f"IC program unexpectedly returned {outcome}")
    assignment = _assignment_from(dist, outcome.point)
    witness = {"assignment": assignment, "points": dist.points, "pairs": pairs, "monotone": monotone}
    if monotone is None:
        witness = {"menu": _menu_from_assignment(dist.k, assignment), "assignment": assignment}
    return RevenueResult(outcome.value, witness)


def lp_rev(dist: ValuationDist) -> RevenueResult:
    """Optimal revenue over all IC/IR mechanisms on the atoms."""
    return _solve_ic(dist, None)


def monrev_relaxed(dist: ValuationDist, augment: bool = True) -> RevenueResult:
    """IC program with payments nondecreasing on atom dominance pairs (an upper bound)."""
    return _solve_ic(diagonal_augment(dist) if augment else dist, "payment")


def amonrev_relaxed(dist: ValuationDist, augment: bool = True) -> RevenueResult:
    """IC program with allocations nondecreasing on atom dominance pairs (an upper bound)."""
    return _solve_ic(diagonal_augment(dist) if augment else dist, "allocation")


# ---------------------------------------------------------------- deterministic search


@dataclass
class _SearchSpace:
    """Prices live on `nodes` (subsets or bundle sizes); node 0 is the empty bundle.

    values[a][v] is atom a's value for node v.  A price vector must satisfy
    p(u) <= p(v) for each (v, u) in `order_edges`.
    """

    nnodes: int
    order_edges: list
    supermod_rows: list
    probs: list
    values: list


def _shortest_prices(space: _SearchSpace, assigned: Sequence[tuple[int, int]]):
    """Pointwise-largest feasible prices for a partial assignment, or None if infeasible.

    Constraints are differences p(u) - p(v) <= w, so the largest solution is the
    shortest-path distance from the empty bundle.  Unconstrained nodes get INF.
    """
    edges = [(v, u, Fraction(0)) for v, u in space.order_edges]
    for atom, node in assigned:
        vals = space.values[atom]
        for other in range(space.nnodes):
            if other != node:
                edges.append((other, node, vals[node] - vals[other]))
    dist = [INF] * space.nnodes
    dist[0] = Fraction(0)
    for _ in range(space.nnodes):
        changed = False
        for v, u, w in edges:
            if dist[v] is not INF:
                cand = dist[v] + w
                if dist[u] is INF or cand < dist[u]:
                    dist[u] = cand
                    changed = True
        if not changed:
            break
    else:
        return None
    if dist[0] < 0:
        return None
    return dist


def _supermodular_prices(space: _SearchSpace, assigned: Sequence[tuple[int, int]]):
    """Exact LP for a full assignment under supermodularity; (value, prices) or None."""
    n = space.nnodes
    problem = LpProblem(n, upper=[Fraction(0)] + [None] * (n - 1))
    objective: dict = {}
    for atom, node in assigned:
        if node:
            objective[node] = objective.get(node, 0) + space.probs[atom]
        vals = space.values[atom]
        for other in range(n):
            if other != node:
                row = {node: Fraction(1)}
                row[other] = row.get(other, 0) - 1
                problem.add(row, "<=", vals[node] - vals[other])
    for v, u in space.order_edges:
        problem.add({u: Fraction(1), v: Fraction(-1)}, "<=", 0)
    for row in space.supermod_rows:
        problem.add(row, "<=", 0)
    problem.set_objective(objective)
    outcome = solve(problem)
    if isinstance(outcome, Infeasible):
        return None
    return outcome.value, list(outcome.point)


def _search(space: _SearchSpace, mode: Mode, incumbent: tuple[Fraction, list, list]):
    """Branch and bound over assignments atom -> node; returns (value, prices, nodes per atom)."""
    n = len(space.probs)
    order = sorted(range(n), key=lambda a: (-space.probs[a], a))
    choices = [sorted(range(space.nnodes), key=lambda v, a=a: (-space.values[a][v], v)) for a in range(n)]
    best = list(incumbent)

    def bound(prices, depth: int, assigned) -> Fraction:
        total = sum((space.probs[a] * prices[v] for a, v in assigned), Fraction(0))
        for a in order[depth:]:
            vals = space.values[a]
            top = Fraction(0)
            for v in range(space.nnodes):
                cap = vals[v] if prices[v] is INF else min(vals[v], prices[v])
                if cap > top:
                    top = cap
            total += space.probs[a] * top
        return total

    def visit(depth: int, assigned: list):
        prices = _shortest_prices(space, assigned)
        if prices is None:
            return
        if bound(prices, depth, assigned) <= best[0]:
            return
        if depth == n:
            if mode is Mode.GENERAL:
                value = sum((space.probs[a] * prices[v] for a, v in assigned), Fraction(0))
            else:
                solved = _supermodular_prices(space, assigned)
                if solved is None:
                    return
                value, prices = solved
            if value > best[0]:
                nodes = [0] * n
                for a, v in assigned:
                    nodes[a] = v
                best[:] = [value, prices, nodes]
            return
        atom = order[depth]
        for v in choices[atom]:
            assigned.append((atom, v))
            visit(depth + 1, assigned)
            assigned.pop()

    visit(0, [])
    return best


def _check_cap(nnodes: int, n: int, cap: int) -> None:
    count = nnodes ** n
    if count > cap:
        raise CapExceeded(f"enumeration needs {nnodes}^{n} assignments, above the cap {cap}")


def drev(dist: ValuationDist, mode: Mode = Mode.GENERAL, cap: int = DEFAULT_CAP) -> RevenueResult:
    """Optimal revenue over deterministic (bundle-pricing) mechanisms."""
    pos = positive_part(dist)
    k = dist.k
    _check_cap(1 << k, len(pos.atoms), cap)
    nodes = 1 << k
    order_edges = [(m, m & ~(1 << i)) for m in range(nodes) for i in range(k) if m >> i & 1]
    rows = []
    if mode is Mode.SUPERMODULAR:
        for s in range(nodes):
            outside = [i for i in range(k) if not s >> i & 1]
            for a in range(len(outside)):
                for b in range(a + 1, len(outside)):
                    si, sj = s | 1 << outside[a], s | 1 << outside[b]
                    rows.append({si: Fraction(1), sj: Fraction(1), si | sj: Fraction(-1), **({s: Fraction(-1)} if s else {})})
    space = _SearchSpace(
        nodes, order_edges, rows, [a.p for a in pos.atoms],
        [[set_value(a.x, m) for m in range(nodes)] for a in pos.atoms],
    )
    seed = srev(pos)
    seed_pricing = seed.witness["pricing"]
    seeds = [(seed.value, list(seed_pricing.prices))]
    if mode is Mode.GENERAL:
        bundle = brev(pos)
        seeds.append((bundle.value, [Fraction(0)] + [bundle.witness["price"]] * (nodes - 1)))
    value, prices = max(seeds, key=lambda s: s[0])
    incumbent = (value, prices, _choices(space, prices))
    value, prices, chosen = _search(space, mode, incumbent)
    pricing = DetPricing(k, tuple(prices))
    return RevenueResult(value, {"pricing": pricing, "menu": pricing.menu(), "assignment": chosen})


def _choices(space: _SearchSpace, prices) -> list:
    """Seller-favorable node choice of every atom under a price vector."""
    out = []
    for vals in space.values:
        best = None
        for v in range(space.nnodes):
            if prices[v] is INF:
                continue
            key = (vals[v] - prices[v], prices[v])
            if best is None or key > best[0]:
                best = (key, v)
        out.append(best[1])
    return out


def top_sums(x: Sequence[Fraction]) -> list[Fraction]:
    """top[m] = sum of the m largest coordinates."""
    out = [Fraction(0)]
    for c in sorted(x, reverse=True):
        out.append(out[-1] + c)
    return out


def symdrev(dist: ValuationDist, mode: Mode = Mode.GENERAL, cap: int = DEFAULT_CAP) -> RevenueResult:
    """Optimal revenue over symmetric deterministic mechanisms (price depends on bundle size)."""
    pos = positive_part(dist)
    k = dist.k
    _check_cap(k + 1, len(pos.atoms), cap)
    order_edges = [(m, m - 1) for m in range(1, k + 1)]
    rows = []
    if mode is Mode.SUPERMODULAR:
        for m in range(2, k + 1):
            row = {m: Fraction(-1), m - 1: Fraction(2)}
            if m - 2:
                row[m - 2] = Fraction(-1)
            rows.append(row)
    space = _SearchSpace(k + 1, order_edges, rows, [a.p for a in pos.atoms], [top_sums(a.x) for a in pos.atoms])
    seed = symsrev(pos)
    prices = [seed.witness["price"] * m for m in range(k + 1)]
    incumbent = (seed.value, prices, _choices(space, prices))
    value, prices, chosen = _search(space, mode, incumbent)
    pricing = SymPricing(tuple(prices))
    return RevenueResult(value, {"levels": pricing, "menu": pricing.det().menu(), "assignment": chosen})


# ---------------------------------------------------------------- replay


def replay(result: RevenueResult, dist: ValuationDist) -> Fraction:
    """Re-evaluate a witness: menu revenue under seller-favorable ties, or an audited assignment."""
    w = result.witness
    if "menu" in w:
        return revenue(w["menu"], dist, TieRule.SELLER_FAVORABLE)
    assignment, points = w["assignment"], w["points"]
    probs = {a.x: a.p for a in dist.atoms}
    augmented = ValuationDist.of(dist.k, [(x, probs.get(x, 0)) for x in points])
    if not isinstance(verify_ic_ir(assignment, augmented), IcOk):
        raise RuntimeError("witness assignment violates IC/IR")
    for lo, hi in w["pairs"]:
        (qlo, slo), (qhi, shi) = assignment[lo], assignment[hi]
        if w["monotone"] == "payment" and slo > shi:
            raise RuntimeError("witness payments are not monotone on a dominance pair")
        if w["monotone"] == "allocation" and any(a > b for a, b in zip(qlo, qhi)):
            raise RuntimeError("witness allocations are not monotone on a dominance pair")
    return sum((a.p * s for a, (_, s) in zip(augmented.atoms, assignment)), Fraction(0))


# ---------------------------------------------------------------- certified logarithms


def ln_bounds(n: int, terms: int = 40) -> tuple[Fraction, Fraction]:
    """Rational (lower, upper) bounds on ln n from the atanh series with a geometric tail."""
    if n < 1:
        raise ValueError("ln_bounds needs n >= 1")
    y = Fraction(n - 1, n + 1)
    y2 = y * y
    partial = Fraction(0)
    power = y
    for j in range(terms):
        partial += power / (2 * j + 1)
        power *= y2
    lower = 2 * partial
    tail = 2 * power / ((2 * terms + 1) * (1 - y2))
    return lower, lower + tail


def ln_upper(n: int) -> Fraction:
    return ln_bounds(n)[1]


# ---------------------------------------------------------------- bound suite


@dataclass(frozen=True)
class BoundCheck:
    name: str
    lhs: Fraction
    rhs: Fraction

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs


def bound_suite(dist: ValuationDist, cap: int = DEFAULT_CAP) -> tuple[list[BoundCheck], dict]:
    """Every exact inequality between the revenue functionals on one instance.

    Returns the checks and the computed values (including the reported, not
    asserted, ratio amonrev/srev).
    """
    k = dist.k
    v = {
        "srev": srev(dist).value,
        "brev": brev(dist).value,
        "symsrev": symsrev(dist).value,
        "lp_rev": lp_rev(dist).value,
        "monrev": monrev_relaxed(dist, augment=False).value,
        "monrev_aug": monrev_relaxed(dist, augment=True).value,
        "amonrev": amonrev_relaxed(dist, augment=False).value,
        "amonrev_aug": amonrev_relaxed(dist, augment=True).value,
        "drev": drev(dist, Mode.GENERAL, cap).value,
        "drev_sup": drev(dist, Mode.SUPERMODULAR, cap).value,
        "symdrev": symdrev(dist, Mode.GENERAL, cap).value,
        "myerson_max": myerson_rev(marginal(dist, "max")).value,
    }
    sup = symdrev(dist, Mode.SUPERMODULAR, cap)
    v["symdrev_sup"] = sup.value
    h = harmonic(k)
    k0 = max(sup.witness["assignment"], default=0)
    checks = [
        BoundCheck("srev <= monrev", v["srev"], v["monrev"]),
        BoundCheck("brev <= monrev", v["brev"], v["monrev"]),
        BoundCheck("monrev <= lp_rev", v["monrev"], v["lp_rev"]),
        BoundCheck("monrev_aug <= lp_rev", v["monrev_aug"], v["lp_rev"]),
        BoundCheck("amonrev <= monrev", v["amonrev"], v["monrev"]),
        BoundCheck("amonrev_aug <= monrev_aug", v["amonrev_aug"], v["monrev_aug"]),
        BoundCheck("srev <= amonrev", v["srev"], v["amonrev"]),
        BoundCheck("symsrev <= srev", v["symsrev"], v["srev"]),
        BoundCheck("symdrev <= drev", v["symdrev"], v["drev"]),
        BoundCheck("drev <= lp_rev", v["drev"], v["lp_rev"]),
        BoundCheck("symdrev_sup <= symdrev", v["symdrev_sup"], v["symdrev"]),
        BoundCheck("drev_sup <= drev", v["drev_sup"], v["drev"]),
        BoundCheck("monrev_aug <= k*srev", v["monrev_aug"], k * v["srev"]),
        BoundCheck("monrev_aug <= k*brev", v["monrev_aug"], k * v["brev"]),
        BoundCheck("monrev_aug <= k*myerson(max)", v["monrev_aug"], k * v["myerson_max"]),
        BoundCheck("myerson(max) <= srev", v["myerson_max"], v["srev"]),
        BoundCheck("myerson(max) <= brev", v["myerson_max"], v["brev"]),
        BoundCheck("symdrev_sup <= H(k)*symsrev", v["symdrev_sup"], h * v["symsrev"]),
        BoundCheck("symdrev_sup <= H(k0)*symsrev", v["symdrev_sup"], (harmonic(k0) if k0 else 0) * v["symsrev"]),
        BoundCheck(
            "symdrev <= 2 ln(2k) H(k)*symsrev", v["symdrev"], 2 * ln_upper(2 * k) * h * v["symsrev"]
        ),
        BoundCheck("drev_sup <= (2^k-1)/k*srev", v["drev_sup"], Fraction((1 << k) - 1, k) * v["srev"]),
        BoundCheck("drev <= ln4 (2^k-1)*srev", v["drev"], ln_upper(4) * ((1 << k) - 1) * v["srev"]),
    ]
    for part in all_partitions(k):
        name = "|".join("".join(str(g + 1) for g in range(k) if b >> g & 1) for b in part.blocks)
        prev = partition_rev(dist, part).value
        v[f"prev[{name}]"] = prev
        checks.append(BoundCheck(f"monrev_aug <= k*prev[{name}]", v["monrev_aug"], k * prev))
    v["amonrev_aug/srev"] = v["amonrev_aug"] / v["srev"] if v["srev"] else None
    v["amonrev_ratio_flag"] = bool(v["srev"]) and v["amonrev_aug"] > 2 * ln_upper(2 * k) * v["srev"]
    return checks, v
