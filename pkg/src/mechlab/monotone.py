"""Payment and allocation monotonicity of deterministic pricings and menus.

A deterministic pricing is monotone exactly when no pair of bundles (A, B) with
p(A) > p(B) admits a vector z over A minus B with

    p(A) - p(A \\ C)  <=  z(C)  <  p(B | C) - p(B)    for every nonempty C in A minus B.

Each scanned pair is settled twice: by the strict LP over z, and by searching
for nonnegative multipliers (lambda, mu) on the two families of rows that
combine to a contradiction.  Exactly one of the two must succeed.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Union

from .eval import TieRule, buyer_choice
from .lattice import ext_geq
from .lp import Feasible, LpProblem, Optimal, solve, strict_feasible
from .model import INF, DetPricing, Menu, dominance_pairs, submasks

MAX_GOODS = 10


class Scope(enum.Enum):
    RANGE = "range"
    ALL = "all"


@dataclass(frozen=True)
class Certificate:
    """Multipliers over nonempty subsets C of A minus B (keyed by bitmask)."""

    pair: tuple[int, int]
    weak: dict  # lambda_C, on rows p(A) - p(A minus C) <= z(C)
    strict: dict  # mu_C, on rows z(C) < p(B | C) - p(B)


@dataclass(frozen=True)
class Violation:
    """Bundles A, B with p(A) > p(B), a solution z, and valuations x <= y paying p(A) > p(B)."""

    pair: tuple[int, int]
    z: dict  # good index (0-based) -> value
    x: tuple
    y: tuple
    big: Fraction


@dataclass(frozen=True)
class MonotonicityVerdict:
    monotonic: bool
    violation: Optional[Violation] = None
    certificates: tuple = field(default_factory=tuple)

    @property
    def status(self) -> str:
        return "monotonic" if self.monotonic else "not-monotonic"


def menu_range(p: DetPricing) -> list[int]:
    """Bundles a buyer can end up with under index-consistent ties.

    A finite-priced bundle is chosen somewhere exactly when every strict
    superset costs strictly more.
    """
    out = []
    for a, price in enumerate(p.prices):
        if price is INF:
            continue
        if all(p[b] > price for b in range(1 << p.k) if b != a and b & a == a):
            out.append(a)
    return out


def _require_nondecreasing(p: DetPricing) -> None:
    for a in range(1 << p.k):
        for i in range(p.k):
            b = a | 1 << i
            if b != a and not ext_geq([p[b]], [p[a]]):
                raise ValueError("monotonicity characterization needs a nondecreasing pricing")


def _system(p: DetPricing, a: int, b: int):
    """Goods of A minus B, and (C, v(C), w(C)) for every nonempty C of them; w may be INF."""
    diff = a & ~b
    goods = [i for i in range(p.k) if diff >> i & 1]
    rows = []
    for c in submasks(diff):
        if c == 0:
            continue
        v = p[a] - p[a & ~c]
        w = INF if p[b | c] is INF else p[b | c] - p[b]
        rows.append((c, v, w))
    return goods, rows


def z_system(p: DetPricing, a: int, b: int, interior: bool = False) -> Union[Feasible, "object"]:
    """Strict LP over z on A minus B; returns lp.Feasible or lp.Infeasible.

    With `interior` the lower rows are strict too.  Feasibility is unchanged
    (shift z up by a small multiple of the all-ones vector), and the witness
    valuation then makes A the unique best bundle, whatever the tie rule.
    """
    goods, rows = _system(p, a, b)
    col = {g: j for j, g in enumerate(goods)}
    weak, strict = [], []
    for c, v, w in rows:
        coeffs = [Fraction(0)] * len(goods)
        for g in goods:
            if c >> g & 1:
                coeffs[col[g]] = Fraction(1)
        weak.append(([-x for x in coeffs], -v))
        if w is not INF:
            strict.append((coeffs, w))
    if interior:
        return strict_feasible(len(goods), [], weak + strict)
    return strict_feasible(len(goods), weak, strict)


def motzkin_certificate(p: DetPricing, a: int, b: int) -> Optional[Certificate]:
    """Multipliers lambda, mu >= 0 summing to 1 with sum lambda_C 1_C = sum mu_C 1_C
    and sum lambda_C v(C) >= sum mu_C w(C); mu_C = 0 where w(C) is infinite."""
    if not (a & ~b and b & ~a):
        raise ValueError("motzkin_certificate needs incomparable bundles")
    if p[a] is INF or p[b] is INF or not p[a] > p[b]:
        raise ValueError("motzkin_certificate needs finite prices with p(A) > p(B)")
    goods, rows = _system(p, a, b)
    nrows = len(rows)
    finite = [w is not INF for _, _, w in rows]
    problem = LpProblem(2 * nrows, upper=[None] * nrows + [None if f else Fraction(0) for f in finite])
    for g in goods:
        coeffs = {}
        for r, (c, _, _) in enumerate(rows):
            if c >> g & 1:
                coeffs[r] = Fraction(1)
                if finite[r]:
                    coeffs[nrows + r] = Fraction(-1)
        problem.add(coeffs, "=", 0)
    balance = {r: v for r, (_, v, _) in enumerate(rows) if v}
    for r, (_, _, w) in enumerate(rows):
        if finite[r] and w:
            balance[nrows + r] = -w
    problem.add(balance, ">=", 0)
    problem.add([Fraction(1)] * (2 * nrows), "=", 1)
    outcome = solve(problem)
    if not isinstance(outcome, Optimal):
        return None
    lam = {rows[r][0]: outcome.point[r] for r in range(nrows) if outcome.point[r]}
    mu = {rows[r][0]: outcome.point[nrows + r] for r in range(nrows) if outcome.point[nrows + r]}
    return Certificate((a, b), lam, mu)


def check_certificate(p: DetPricing, cert: Certificate) -> bool:
    a, b = cert.pair
    goods, rows = _system(p, a, b)
    table = {c: (v, w) for c, v, w in rows}
    if any(m < 0 for m in cert.weak.values()) or any(m < 0 for m in cert.strict.values()):
        return False
    if sum(cert.weak.values()) + sum(cert.strict.values()) == 0 or not cert.strict:
        return False
    for g in goods:
        left = sum((m for c, m in cert.weak.items() if c >> g & 1), Fraction(0))
        right = sum((m for c, m in cert.strict.items() if c >> g & 1), Fraction(0))
        if left != right:
            return False
    if any(table[c][1] is INF for c in cert.strict):
        return False
    lhs = sum((m * table[c][0] for c, m in cert.weak.items()), Fraction(0))
    rhs = sum((m * table[c][1] for c, m in cert.strict.items()), Fraction(0))
    return lhs >= rhs


def witness_valuations(p: DetPricing, a: int, b: int, z: dict) -> tuple[tuple, tuple, Fraction]:
    """x has z on A minus B and M on A and B; y adds M on B minus A."""
    top = max(v for v in p.prices if v is not INF)
    big = 1 + top + sum(abs(v) for v in z.values())
    x, y = [], []
    for i in range(p.k):
        if a >> i & 1 and not b >> i & 1:
            x.append(z[i])
            y.append(z[i])
        elif a >> i & 1:
            x.append(big)
            y.append(big)
        elif b >> i & 1:
            x.append(Fraction(0))
            y.append(big)
        else:
            x.append(Fraction(0))
            y.append(Fraction(0))
    return tuple(x), tuple(y), big


def scan_pairs(p: DetPricing, scope: Scope = Scope.RANGE) -> list[tuple[int, int]]:
    """Ordered incomparable finite-priced pairs with p(A) > p(B), in bitmask order."""
    family = menu_range(p) if scope is Scope.RANGE else p.finite_masks()
    pairs = []
    for a in family:
        for b in family:
            if a & ~b and b & ~a and p[a] > p[b]:
                pairs.append((a, b))
    return pairs


def check_sufficient_restricted_submod(p: DetPricing) -> Optional[tuple[int, int]]:
    """First pair (A, B), A < B, with p(A) != p(B) and p(A)+p(B) < p(A|B)+p(A&B); None if none."""
    n = 1 << p.k
    for a in range(n):
        for b in range(a + 1, n):
            if p[a] != p[b] and not ext_geq([p[a], p[b]], [p[a | b], p[a & b]]):
                return (a, b)
    return None


def check_necessary(p: DetPricing) -> Optional[tuple[int, int, int]]:
    """First disjoint (A, i, J) with p(A+i) > p(A|J) and p(A+i)+p(A|J) < p(A|J+i)+p(A)."""
    n = 1 << p.k
    for a in range(n):
        for i in range(p.k):
            if a >> i & 1:
                continue
            ai = a | 1 << i
            rest = (n - 1) & ~ai
            for j in submasks(rest):
                aj = a | j
                if p[ai] > p[aj] and not ext_geq([p[ai], p[aj]], [p[aj | ai], p[a]]):
                    return (a, i, j)
    return None


def check_det_monotonic(p: DetPricing, scope: Scope = Scope.RANGE) -> MonotonicityVerdict:
    """Decide payment monotonicity of the index-consistent mechanism of a nondecreasing pricing."""
    if p.k > MAX_GOODS:
        raise ValueError(f"check_det_monotonic supports at most {MAX_GOODS} goods")
    _require_nondecreasing(p)
    pairs = scan_pairs(p, scope)
    if check_sufficient_restricted_submod(p) is None:
        certs = tuple(
            Certificate((a, b), {a & ~b: Fraction(1, 2)}, {a & ~b: Fraction(1, 2)}) for a, b in pairs
        )
        return MonotonicityVerdict(True, certificates=certs)
    certs = []
    for a, b in pairs:
        outcome = z_system(p, a, b, interior=True)
        if isinstance(outcome, Feasible):
            goods = [i for i in range(p.k) if (a & ~b) >> i & 1]
            z = dict(zip(goods, outcome.point))
            x, y, big = witness_valuations(p, a, b, z)
            return MonotonicityVerdict(False, Violation((a, b), z, x, y, big))
        cert = motzkin_certificate(p, a, b)
        if cert is None:
            raise RuntimeError(f"pair {(a, b)}: neither a z solution nor a certificate exists")
        certs.append(cert)
    return MonotonicityVerdict(True, certificates=tuple(certs))


def replay_violation(p: DetPricing, violation: Violation, rule: TieRule = TieRule.INDEX_CONSISTENT):
    """Payments at the witness valuations; a genuine violation pays more at x than at y."""
    menu = p.menu()
    return buyer_choice(menu, violation.x, rule).payment, buyer_choice(menu, violation.y, rule).payment


# ---------------------------------------------------------------- grid oracles


class Check(enum.Enum):
    PAYMENT = "payment"
    ALLOCATION = "allocation"


@dataclass(frozen=True)
class GridViolation:
    x: tuple
    y: tuple


def _bad(check: Check, lo, hi) -> bool:
    if check is Check.PAYMENT:
        return lo.price > hi.price
    return any(a > b for a, b in zip(lo.alloc, hi.alloc))


def grid_oracle(menu: Menu, rule: TieRule, grid: Sequence[Sequence[Fraction]], check: Check) -> Optional[GridViolation]:
    """First dominance pair x <= y of the grid where payment (or allocation) decreases.

    None means no violation on this grid, which proves nothing beyond it.
    """
    points = [tuple(Fraction(c) for c in g) for g in grid]
    chosen = [buyer_choice(menu, x, rule).chosen for x in points]
    for i, j in dominance_pairs(points):
        if _bad(check, chosen[i], chosen[j]):
            return GridViolation(points[i], points[j])
    return None


def product_grid_oracle(
    menu: Menu, rule: TieRule, axes: Sequence[Sequence[Fraction]], check: Check
) -> Optional[GridViolation]:
    """Grid oracle on the product of per-good axes.

    Both properties are preserved along chains, so comparing neighbours that
    differ by one axis step covers every dominance pair of the product grid.
    """
    axes = [sorted(set(Fraction(c) for c in axis)) for axis in axes]
    cache: dict = {}

    def choice(idx):
        if idx not in cache:
            cache[idx] = buyer_choice(menu, tuple(axes[i][j] for i, j in enumerate(idx)), rule).chosen
        return cache[idx]

    def walk(prefix):
        if len(prefix) == len(axes):
            yield tuple(prefix)
            return
        for j in range(len(axes[len(prefix)])):
            yield from walk(prefix + [j])

    for idx in walk([]):
        here = choice(idx)
        for i in range(len(axes)):
            if idx[i] + 1 < len(axes[i]):
                up = idx[:i] + (idx[i] + 1,) + idx[i + 1:]
                if _bad(check, here, choice(up)):
                    point = lambda t: tuple(axes[d][t[d]] for d in range(len(axes)))  # noqa: E731
                    return GridViolation(point(idx), point(up))
    return None


def uniform_axes(k: int, upper: Fraction, step: Fraction) -> list[list[Fraction]]:
    n = int(upper / step)
    return [[step * j for j in range(n + 1)] for _ in range(k)]


def product_points(axes: Sequence[Sequence[Fraction]]) -> list[tuple]:
    out = [()]
    for axis in axes:
        out = [p + (c,) for p in out for c in axis]
    return out


def allocation_violation_search(
    p: DetPricing, rule: TieRule = TieRule.TIE_FAVORABLE, menu: Optional[Menu] = None
) -> Optional[GridViolation]:
    """Structured search for an allocation drop in the menu of a non-submodular pricing.

    For a local failure p(S+i) - p(S) < p(S+i+j) - p(S+j), put M on S, a value t
    on good i with p(S+i) - p(S) <= t < p(S+i+j) - p(S+j), and compare x with
    x + M e_j.  Candidate t values are the price differences and their midpoints.
    Choices come from `menu` when given (e.g. the offers p was derived from),
    else from the menu of p itself.
    """
    finite = [v for v in p.prices if v is not INF]
    big = 1 + 2 * max(finite) if finite else Fraction(1)
    diffs = sorted({a - b for a in finite for b in finite if a >= b})
    candidates = sorted(set(diffs) | {(u + v) / 2 for u, v in zip(diffs, diffs[1:])})
    menu = menu if menu is not None else p.menu()
    n = 1 << p.k
    for s in range(n):
        for i in range(p.k):
            for j in range(p.k):
                if i == j or s >> i & 1 or s >> j & 1:
                    continue
                si, sj, sij = s | 1 << i, s | 1 << j, s | 1 << i | 1 << j
                low = None if p[si] is INF else p[si] - p[s]
                high = INF if p[sij] is INF else (None if p[sj] is INF else p[sij] - p[sj])
                if low is None or high is None or not (high is INF or low < high):
                    continue
                for t in candidates + [big]:
                    if t < low or (high is not INF and t >= high):
                        continue
                    x = tuple(big if s >> g & 1 else (t if g == i else Fraction(0)) for g in range(p.k))
                    y = tuple(big if g == j else x[g] for g in range(p.k))
                    qx = buyer_choice(menu, x, rule).chosen.alloc
                    qy = buyer_choice(menu, y, rule).chosen.alloc
                    if any(a > b for a, b in zip(qx, qy)):
                        return GridViolation(x, y)
    return None
