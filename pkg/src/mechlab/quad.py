"""Quadratic mechanisms: payoff b(x) = x'Ax/2 on a box V = [0, v], extended linearly beyond it."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .model import InputError, fmt_rat, to_rat

Matrix = tuple  # tuple of row tuples of Fraction


def leading_minors(a: Sequence[Sequence[Fraction]]) -> list[Fraction]:
    return [_det([row[:m] for row in a[:m]]) for m in range(1, len(a) + 1)]


def _det(a: Sequence[Sequence[Fraction]]) -> Fraction:
    m = [list(map(Fraction, row)) for row in a]
    n = len(m)
    det = Fraction(1)
    for c in range(n):
        pivot = next((r for r in range(c, n) if m[r][c]), None)
        if pivot is None:
            return Fraction(0)
        if pivot != c:
            m[c], m[pivot] = m[pivot], m[c]
            det = -det
        det *= m[c][c]
        for r in range(c + 1, n):
            f = m[r][c] / m[c][c]
            if f:
                for j in range(c, n):
                    m[r][j] -= f * m[c][j]
    return det


def _check_symmetric_pd(a: Sequence[Sequence[Fraction]]) -> None:
    n = len(a)
    if any(len(row) != n for row in a):
        raise ValueError("matrix must be square")
    for i in range(n):
        for j in range(i + 1, n):
            if a[i][j] != a[j][i]:
                raise ValueError(f"matrix is not symmetric at ({i + 1},{j + 1})")
    for m, minor in enumerate(leading_minors(a), start=1):
        if minor <= 0:
            raise ValueError(f"matrix is not positive definite: leading minor {m} is {fmt_rat(minor)}")


def invert_pd(a: Sequence[Sequence[Fraction]]) -> Matrix:
    """Exact inverse of a symmetric positive definite matrix (Gauss-Jordan)."""
    _check_symmetric_pd(a)
    n = len(a)
    m = [[Fraction(c) for c in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(a)]
    for c in range(n):
        pivot = next(r for r in range(c, n) if m[r][c])
        m[c], m[pivot] = m[pivot], m[c]
        inv = 1 / m[c][c]
        m[c] = [v * inv for v in m[c]]
        for r in range(n):
            if r != c and m[r][c]:
                f = m[r][c]
                m[r] = [u - f * w for u, w in zip(m[r], m[c])]
    return tuple(tuple(row[n:]) for row in m)


def matmul(a, b) -> Matrix:
    return tuple(tuple(sum((a[i][t] * b[t][j] for t in range(len(b))), Fraction(0)) for j in range(len(b[0]))) for i in range(len(a)))


def matvec(a, x) -> tuple:
    return tuple(sum((a[i][j] * x[j] for j in range(len(x))), Fraction(0)) for i in range(len(a)))


def quad_form(a, x) -> Fraction:
    return sum((x[i] * a[i][j] * x[j] for i in range(len(x)) for j in range(len(x))), Fraction(0))


@dataclass(frozen=True)
class QuadSpec:
    a: Matrix
    v: tuple

    def __post_init__(self):
        k = len(self.a)
        if len(self.v) != k:
            raise InputError(f"$.v: expected {k} entries, got {len(self.v)}")
        try:
            _check_symmetric_pd(self.a)
        except ValueError as exc:
            raise InputError(f"$.A: {exc}") from None
        for i, c in enumerate(self.v):
            if c <= 0:
                raise InputError(f"$.v[{i}]: truncation must be positive")
        for i, c in enumerate(matvec(self.a, self.v)):
            if c > 1:
                raise InputError(f"$.v: (A v)[{i}] = {fmt_rat(c)} exceeds 1")

    @classmethod
    def of(cls, a, v) -> "QuadSpec":
        return cls(tuple(tuple(to_rat(c) for c in row) for row in a), tuple(to_rat(c) for c in v))

    @property
    def k(self) -> int:
        return len(self.v)


def parse_quad(text: str) -> QuadSpec:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"$: invalid JSON ({exc.msg})") from None
    if not isinstance(data, dict) or "A" not in data or "v" not in data:
        raise InputError('$: expected {"A":[[…]…],"v":[…]}')
    if not isinstance(data["A"], list) or not all(isinstance(r, list) for r in data["A"]):
        raise InputError("$.A: expected a list of rows")
    a = tuple(tuple(to_rat(c, f"$.A[{i}][{j}]") for j, c in enumerate(row)) for i, row in enumerate(data["A"]))
    if not isinstance(data["v"], list):
        raise InputError("$.v: expected a list")
    return QuadSpec(a, tuple(to_rat(c, f"$.v[{i}]") for i, c in enumerate(data["v"])))


def quad_to_json(spec: QuadSpec) -> dict:
    return {"A": [[fmt_rat(c) for c in row] for row in spec.a], "v": [fmt_rat(c) for c in spec.v]}


@dataclass(frozen=True)
class QuadOutcome:
    alloc: tuple
    payment: Fraction
    payoff: Fraction


def quad_eval(spec: QuadSpec, x: Sequence[Fraction]) -> QuadOutcome:
    """Allocation, payment and payoff of the truncated quadratic mechanism at x."""
    if len(x) != spec.k:
        raise ValueError(f"valuation has {len(x)} coordinates, spec has k={spec.k}")
    clipped = tuple(min(c, cap) for c, cap in zip(x, spec.v))
    grad = matvec(spec.a, clipped)
    alloc = tuple(grad[i] if x[i] < spec.v[i] else Fraction(1) for i in range(spec.k))
    payoff = quad_form(spec.a, clipped) / 2 + sum((max(c - cap, Fraction(0)) for c, cap in zip(x, spec.v)), Fraction(0))
    payment = sum((q * c for q, c in zip(alloc, x)), Fraction(0)) - payoff
    return QuadOutcome(alloc, payment, payoff)


@dataclass(frozen=True)
class Screen:
    holds: bool
    offending: tuple  # ((i, j, value), ...) with 1-based indices, i < j


def quad_screens(spec: QuadSpec) -> dict:
    """Sign screens: off-diagonals of A nonnegative; off-diagonals of A^-1 nonpositive."""
    inv = invert_pd(spec.a)
    k = spec.k
    amon = tuple((i + 1, j + 1, spec.a[i][j]) for i in range(k) for j in range(i + 1, k) if spec.a[i][j] < 0)
    subm = tuple((i + 1, j + 1, inv[i][j]) for i in range(k) for j in range(i + 1, k) if inv[i][j] > 0)
    return {"amon_necessary": Screen(not amon, amon), "subm_necessary": Screen(not subm, subm)}


# ---------------------------------------------------------------- grid checks


def box_grid(upper: Sequence[Fraction], steps: int) -> list[tuple]:
    """Product grid with `steps` equal steps per axis from 0 to upper[i]."""
    axes = [[u * j / steps for j in range(steps + 1)] for u in upper]
    return list(itertools.product(*axes))


def allocation_monotone_on_grid(spec: QuadSpec, steps: int = 8) -> Optional[tuple]:
    """Check q along every single-axis grid step over [0, 2v] (step v/4 by default).

    Neighbour steps suffice since the coordinatewise order is generated by them.
    Returns the first (x, x') with a coordinate of q decreasing, or None.
    """
    upper = [2 * c for c in spec.v]
    deltas = [u / steps for u in upper]
    alloc = {x: quad_eval(spec, x).alloc for x in box_grid(upper, steps)}
    for x, q in alloc.items():
        for i in range(spec.k):
            if x[i] < upper[i]:
                y = x[:i] + (x[i] + deltas[i],) + x[i + 1:]
                if any(a > b for a, b in zip(q, alloc[y])):
                    return (x, y)
    return None


def ultramodular_on_grid(spec: QuadSpec, steps: int = 8) -> Optional[tuple]:
    """b(x+d1+d2) - b(x+d1) >= b(x+d2) - b(x) for axis steps d1, d2 on the grid."""
    upper = [2 * c for c in spec.v]
    deltas = [u / steps for u in upper]
    pay = {x: quad_eval(spec, x).payoff for x in box_grid(upper, steps)}

    def step(x, i):
        return x[:i] + (x[i] + deltas[i],) + x[i + 1:]

    for x in pay:
        for i in range(spec.k):
            for j in range(spec.k):
                xi = step(x, i)
                xj = step(x, j)
                if xi not in pay or xj not in pay:
                    continue
                xij = step(xi, j)
                if xij not in pay:
                    continue
                if pay[xij] - pay[xi] < pay[xj] - pay[x]:
                    return (x, i, j)
    return None


def pricing_value(inv: Matrix, g: Sequence[Fraction]) -> Fraction:
    """p(g) = g' A^-1 g / 2 on the image of the box under A."""
    return quad_form(inv, g) / 2


def in_image_box(spec: QuadSpec, inv: Matrix, g: Sequence[Fraction]) -> bool:
    x = matvec(inv, g)
    return all(0 <= c <= cap for c, cap in zip(x, spec.v))


def pricing_submodularity_violation(spec: QuadSpec, steps: int = 4) -> Optional[tuple]:
    """Find g, h with g, h, g|h, g&h all allocations of the box and p(g)+p(h) < p(g|h)+p(g&h).

    Base points are grid points of the box; g and h move the base allocation A x
    by one step along two different axes.
    """
    inv = invert_pd(spec.a)
    k = spec.k
    for x in box_grid(spec.v, steps):
        base = matvec(spec.a, x)
        for delta in (Fraction(1, 2 ** e) * min(spec.v) for e in range(2, 7)):
            for i in range(k):
                for j in range(i + 1, k):
                    g = tuple(c + (delta if t == i else 0) for t, c in enumerate(base))
                    h = tuple(c + (delta if t == j else 0) for t, c in enumerate(base))
                    join = tuple(max(a, b) for a, b in zip(g, h))
                    meet = tuple(min(a, b) for a, b in zip(g, h))
                    if not all(in_image_box(spec, inv, pt) for pt in (g, h, join, meet)):
                        continue
                    lhs = pricing_value(inv, g) + pricing_value(inv, h)
                    rhs = pricing_value(inv, join) + pricing_value(inv, meet)
                    if lhs < rhs:
                        return (g, h, lhs, rhs)
    return None


# ---------------------------------------------------------------- two-good piecewise example


def piecewise_payoff(x: Sequence[Fraction]) -> Fraction:
    """[f(x~)]+ + [x1-1]+ + [x2-1]+ with x~ = min(x, 1) and
    f = (x1^2 + x2^2 + x1 + x2 - x1 x2 - 2) / 3."""
    x1, x2 = (min(c, Fraction(1)) for c in x)
    f = (x1 * x1 + x2 * x2 + x1 + x2 - x1 * x2 - 2) / 3
    return max(f, Fraction(0)) + max(x[0] - 1, Fraction(0)) + max(x[1] - 1, Fraction(0))


def piecewise_checks(step: Fraction = Fraction(1, 20), upper: Fraction = Fraction(2)) -> dict:
    """Grid verdicts for the piecewise payoff; each value is None (holds) or a witness."""
    n = int(upper / step)
    pts = [Fraction(j) * step for j in range(n + 1)]
    b = {(u, w): piecewise_payoff((u, w)) for u in pts for w in pts}
    idx = range(n + 1)
    at = lambda i, j: b[(pts[i], pts[j])]  # noqa: E731
    out = {"nondecreasing": None, "nonexpansive": None, "midpoint_convex": None,
           "separably_superadditive": None, "supermodular": None}
    for i in idx:
        for j in idx:
            here = at(i, j)
            for di, dj in ((1, 0), (0, 1)):
                if i + di <= n and j + dj <= n:
                    up = at(i + di, j + dj)
                    if up < here and out["nondecreasing"] is None:
                        out["nondecreasing"] = ((pts[i], pts[j]), (pts[i + di], pts[j + dj]))
                    if up - here > step and out["nonexpansive"] is None:
                        out["nonexpansive"] = ((pts[i], pts[j]), (pts[i + di], pts[j + dj]))
            for di, dj in ((1, 0), (0, 1), (1, 1), (1, -1)):
                if 0 <= i - di and i + di <= n and 0 <= j - dj <= n and 0 <= j + dj <= n:
                    if at(i - di, j - dj) + at(i + di, j + dj) < 2 * here and out["midpoint_convex"] is None:
                        out["midpoint_convex"] = (pts[i], pts[j], (di, dj))
            if here < at(i, 0) + at(0, j) and out["separably_superadditive"] is None:
                out["separably_superadditive"] = (pts[i], pts[j])
            if i < n and j < n and out["supermodular"] is None:
                if at(i + 1, j + 1) - at(i + 1, j) < at(i, j + 1) - at(i, j):
                    out["supermodular"] = (pts[i], pts[j])
    return out


EXAMPLE_SPEC = QuadSpec.of([[6, 3, 1], [3, 6, 3], [1, 3, 6]], [Fraction(1, 15)] * 3)
