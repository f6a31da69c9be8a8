"""Exact rational linear programming.

A two-phase tableau simplex over gmpy2 rationals (largest-coefficient pricing
with a Bland's-rule fallback against cycling), plus
strict-inequality feasibility by maximizing a common slack.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Sequence, Union

from gmpy2 import mpq

MAX_SIZE = 4096
_STALL_LIMIT = 50

# Which route produced each optimum; inspected by tests.
STATS = {"dual": 0, "primal": 0}

Coeffs = Union[Mapping[int, Fraction], Sequence[Fraction]]


class CapExceeded(RuntimeError):
    """A problem is larger than the configured desk-scale limit."""


@dataclass(frozen=True)
class Constraint:
    coeffs: dict  # variable index -> coefficient (nonzero only)
    rel: str  # "<=", ">=" or "="
    rhs: Fraction


def _sparse(coeffs: Coeffs, nvars: int) -> dict:
    if isinstance(coeffs, Mapping):
        out = {}
        for j, c in coeffs.items():
            if not 0 <= j < nvars:
                raise ValueError(f"coefficient index {j} outside 0..{nvars - 1}")
            if c:
                out[j] = Fraction(c)
        return out
    if len(coeffs) != nvars:
        raise ValueError(f"coefficient vector has length {len(coeffs)}, expected {nvars}")
    return {j: Fraction(c) for j, c in enumerate(coeffs) if c}


@dataclass
class LpProblem:
    """Linear program builder.  Variables default to the bounds 0 <= x < inf.

    A bound of None means unbounded on that side.
    """

    nvars: int
    sense: str = "max"
    objective: dict = field(default_factory=dict)
    constraints: list = field(default_factory=list)
    lower: list = None
    upper: list = None

    def __post_init__(self):
        if self.sense not in ("max", "min"):
            raise ValueError(f"sense must be 'max' or 'min', got {self.sense!r}")
        if self.lower is None:
            self.lower = [Fraction(0)] * self.nvars
        if self.upper is None:
            self.upper = [None] * self.nvars
        if len(self.lower) != self.nvars or len(self.upper) != self.nvars:
            raise ValueError("bound vectors must match the variable count")
        self.objective = _sparse(self.objective, self.nvars)

    def set_objective(self, coeffs: Coeffs) -> None:
        self.objective = _sparse(coeffs, self.nvars)

    def add(self, coeffs: Coeffs, rel: str, rhs) -> None:
        if rel not in ("<=", ">=", "="):
            raise ValueError(f"unknown relation {rel!r}")
        self.constraints.append(Constraint(_sparse(coeffs, self.nvars), rel, Fraction(rhs)))

    def bound(self, j: int, lower=0, upper=None) -> None:
        self.lower[j] = None if lower is None else Fraction(lower)
        self.upper[j] = None if upper is None else Fraction(upper)


@dataclass(frozen=True)
class Optimal:
    value: Fraction
    point: tuple


@dataclass(frozen=True)
class Infeasible:
    pass


@dataclass(frozen=True)
class Unbounded:
    pass


LpOutcome = Union[Optimal, Infeasible, Unbounded]


def _to_fraction(q) -> Fraction:
    return Fraction(int(q.numerator), int(q.denominator))


class _Tableau:
    """Dense tableau: rows[i] holds coefficients then the right-hand side."""

    def __init__(self, rows: list, basis: list, ncols: int):
        self.rows = rows
        self.basis = basis
        self.ncols = ncols

    def pivot(self, r: int, c: int, obj: list) -> None:
        rows = self.rows
        prow = rows[r]
        inv = 1 / prow[c]
        nz = [j for j, v in enumerate(prow) if v]
        for j in nz:
            prow[j] *= inv
        for row in rows:
            if row is not prow:
                f = row[c]
                if f:
                    for j in nz:
                        row[j] -= f * prow[j]
        f = obj[c]
        if f:
            for j in nz:
                obj[j] -= f * prow[j]
        self.basis[r] = c

    def minimize(self, obj: list, allowed: int) -> bool:
        """Pivot on reduced-cost row `obj` until optimal.  False if unbounded.

        Entering columns follow the most negative reduced cost; after a run of
        degenerate pivots the rule switches to Bland's, which cannot cycle.
        """
        rows = self.rows
        basis = self.basis
        stall = 0
        while True:
            enter = -1
            if stall < _STALL_LIMIT:
                most = 0
                for j in range(allowed):
                    if obj[j] < most:
                        most = obj[j]
                        enter = j
            else:
                for j in range(allowed):
                    if obj[j] < 0:
                        enter = j
                        break
            if enter < 0:
                return True
            leave = -1
            best = None
            for i, row in enumerate(rows):
                a = row[enter]
                if a > 0:
                    ratio = row[-1] / a
                    if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                        best = ratio
                        leave = i
            if leave < 0:
                return False
            stall = stall + 1 if best == 0 else 0
            self.pivot(leave, enter, obj)


@dataclass
class _StdForm:
    """min cost.y subject to rows over y >= 0, with the map back to original variables."""

    ncols: int
    cost: dict
    rows: list  # (coeffs dict, rel, rhs)
    columns: list  # per original variable: [(col, sign), ...]
    offsets: list


def _standardize(problem: LpProblem) -> _StdForm:
    columns: list[list[tuple[int, int]]] = []
    offsets: list[Fraction] = []
    bound_rows: list[tuple[dict, str, Fraction]] = []
    ncol = 0
    for j in range(problem.nvars):
        lo, hi = problem.lower[j], problem.upper[j]
        if lo is not None:
            columns.append([(ncol, 1)])
            offsets.append(lo)
            if hi is not None:
                bound_rows.append(({ncol: Fraction(1)}, "<=", hi - lo))
            ncol += 1
        elif hi is not None:
            columns.append([(ncol, -1)])
            offsets.append(hi)
            ncol += 1
        else:
            columns.append([(ncol, 1), (ncol + 1, -1)])
            offsets.append(Fraction(0))
            ncol += 2

    def transform(coeffs: dict) -> tuple[dict, Fraction]:
        out: dict = {}
        shift = Fraction(0)
        for j, a in coeffs.items():
            shift += a * offsets[j]
            for col, sign in columns[j]:
                out[col] = out.get(col, 0) + sign * a
        return out, shift

    rows = []
    for con in problem.constraints:
        coeffs, shift = transform(con.coeffs)
        rows.append((coeffs, con.rel, con.rhs - shift))
    rows.extend(bound_rows)
    sense = -1 if problem.sense == "max" else 1
    cost, _ = transform({j: sense * a for j, a in problem.objective.items()})
    return _StdForm(ncol, cost, rows, columns, offsets)


def _core(ncols: int, cost: dict, rows: list):
    """Two-phase simplex on min cost.y, rows, y >= 0.

    Returns ("optimal", y, duals) with duals pi such that cost - A^T pi >= 0 on
    every column, or ("infeasible",) or ("unbounded",).
    """
    m = len(rows)
    negated = [rhs < 0 for _, _, rhs in rows]
    rels = []
    for (_, rel, _), neg in zip(rows, negated):
        if neg and rel != "=":
            rel = ">=" if rel == "<=" else "<="
        rels.append(rel)
    ncol = ncols
    slack_of = [-1] * m
    for i, rel in enumerate(rels):
        if rel != "=":
            slack_of[i] = ncol
            ncol += 1
    art_rows = [i for i, rel in enumerate(rels) if rel != "<="]
    first_art = ncol
    total = first_art + len(art_rows)
    art_of = [-1] * m
    for a, i in enumerate(art_rows):
        art_of[i] = first_art + a

    tab_rows = []
    basis = []
    unit = []  # (column, sign) whose column in the normalized matrix is sign * e_i
    for i, (coeffs, _, rhs) in enumerate(rows):
        flip = -1 if negated[i] else 1
        row = [mpq(0)] * (total + 1)
        for col, a in coeffs.items():
            if a:
                row[col] = mpq(flip * a)
        row[-1] = mpq(flip * rhs)
        if rels[i] == "<=":
            row[slack_of[i]] = mpq(1)
            basis.append(slack_of[i])
            unit.append((slack_of[i], 1))
        else:
            if rels[i] == ">=":
                row[slack_of[i]] = mpq(-1)
            row[art_of[i]] = mpq(1)
            basis.append(art_of[i])
            unit.append((art_of[i], 1))
        tab_rows.append(row)
    row_ids = list(range(m))
    tab = _Tableau(tab_rows, basis, total)

    if art_rows:
        obj = [mpq(0)] * (total + 1)
        for i in art_rows:
            for j, v in enumerate(tab_rows[i]):
                if v:
                    obj[j] -= v
        for i in art_rows:
            obj[art_of[i]] = mpq(0)
        tab.minimize(obj, total)
        if -obj[-1] > 0:
            return ("infeasible",)
        i = 0
        while i < len(tab.rows):
            if tab.basis[i] >= first_art:
                row = tab.rows[i]
                col = next((j for j in range(first_art) if row[j]), -1)
                if col >= 0:
                    tab.pivot(i, col, obj)
                else:
                    del tab.rows[i]
                    del tab.basis[i]
                    del row_ids[i]
                    continue
            i += 1

    cvec = [mpq(0)] * (total + 1)
    for col, a in cost.items():
        cvec[col] = mpq(a)
    obj = list(cvec)
    for i, b in enumerate(tab.basis):
        f = cvec[b]
        if f:
            for j, v in enumerate(tab.rows[i]):
                if v:
                    obj[j] -= f * v
    if not tab.minimize(obj, first_art):
        return ("unbounded",)

    values = [mpq(0)] * total
    for i, b in enumerate(tab.basis):
        values[b] = tab.rows[i][-1]
    y = [_to_fraction(values[j]) for j in range(ncols)]
    kept = set(row_ids)
    duals = []
    for i in range(m):
        if i not in kept:
            duals.append(Fraction(0))
            continue
        col, sign = unit[i]
        pi = -_to_fraction(obj[col]) / sign
        duals.append(-pi if negated[i] else pi)
    return ("optimal", y, duals)


def _std_feasible(std: _StdForm, y: Sequence[Fraction]) -> bool:
    if any(v < 0 for v in y):
        return False
    for coeffs, rel, rhs in std.rows:
        lhs = sum((a * y[j] for j, a in coeffs.items()), Fraction(0))
        if (rel == "<=" and lhs > rhs) or (rel == ">=" and lhs < rhs) or (rel == "=" and lhs != rhs):
            return False
    return True


def _via_dual(std: _StdForm):
    """Solve the dual program and read the primal point off its multipliers.

    Returns the primal point when the dual has an optimum and the recovered point
    is exactly feasible with a matching objective; None otherwise.
    """
    m = len(std.rows)
    # Dual of min c.y, A y (rel) b, y >= 0:  max b.pi, A^T pi <= c, sign of pi by relation.
    # Dual variables are split so that each one is >= 0 in standard form.
    cols: list[tuple[int, int]] = []
    for i, (_, rel, _) in enumerate(std.rows):
        if rel == ">=":
            cols.append((i, 1))
        elif rel == "<=":
            cols.append((i, -1))
        else:
            cols.append((i, 1))
            cols.append((i, -1))
    dual_rows: list[dict] = [dict() for _ in range(std.ncols)]
    dual_cost: dict = {}
    for c, (i, sign) in enumerate(cols):
        coeffs, _, rhs = std.rows[i]
        for j, a in coeffs.items():
            if a:
                dual_rows[j][c] = sign * a
        if rhs:
            dual_cost[c] = -sign * rhs
    result = _core(len(cols), dual_cost, [(row, "<=", std.cost.get(j, Fraction(0))) for j, row in enumerate(dual_rows)])
    if result[0] != "optimal":
        return None
    _, pi, rho = result
    dual_value = -sum((a * pi[c] for c, a in dual_cost.items()), Fraction(0))
    y = [-r for r in rho]
    if not _std_feasible(std, y):
        return None
    if sum((a * y[j] for j, a in std.cost.items()), Fraction(0)) != dual_value:
        return None
    return y


def solve(problem: LpProblem) -> LpOutcome:
    """Solve exactly; the returned optimal point is re-checked against every constraint."""
    n = problem.nvars
    if n > MAX_SIZE or len(problem.constraints) > MAX_SIZE:
        raise CapExceeded(
            f"LP has {n} variables and {len(problem.constraints)} constraints; limit is {MAX_SIZE} each"
        )
    for j in range(n):
        lo, hi = problem.lower[j], problem.upper[j]
        if lo is not None and hi is not None and lo > hi:
            return Infeasible()
    std = _standardize(problem)
    y = None
    if len(std.rows) > 2 * std.ncols:
        y = _via_dual(std)
        STATS["dual"] += y is not None
    if y is None:
        result = _core(std.ncols, std.cost, std.rows)
        STATS["primal"] += 1
        if result[0] == "infeasible":
            return Infeasible()
        if result[0] == "unbounded":
            return Unbounded()
        y = result[1]
    point = []
    for j in range(n):
        v = std.offsets[j]
        for col, s in std.columns[j]:
            v += s * y[col]
        point.append(v)
    value = sum((a * point[j] for j, a in problem.objective.items()), Fraction(0))
    _verify(problem, point)
    return Optimal(value, tuple(point))


def _verify(problem: LpProblem, point: Sequence[Fraction]) -> None:
    for j, v in enumerate(point):
        lo, hi = problem.lower[j], problem.upper[j]
        if (lo is not None and v < lo) or (hi is not None and v > hi):
            raise RuntimeError(f"simplex returned x[{j}]={v} outside its bounds")
    for idx, con in enumerate(problem.constraints):
        lhs = sum((a * point[j] for j, a in con.coeffs.items()), Fraction(0))
        ok = lhs <= con.rhs if con.rel == "<=" else lhs >= con.rhs if con.rel == ">=" else lhs == con.rhs
        if not ok:
            raise RuntimeError(f"simplex returned a point violating constraint {idx}")


@dataclass(frozen=True)
class Feasible:
    point: tuple
    margin: Fraction  # min slack over the strict rows, capped at 1


def strict_feasible(
    nvars: int,
    weak: Sequence[tuple[Coeffs, object]],
    strict: Sequence[tuple[Coeffs, object]],
) -> Union[Feasible, Infeasible]:
    """Decide whether some free z satisfies a.z <= r for weak rows and a.z < r for strict rows."""
    problem = LpProblem(nvars + 1, lower=[None] * nvars + [None], upper=[None] * nvars + [Fraction(1)])
    eps = nvars
    for coeffs, rhs in weak:
        problem.add(_sparse(coeffs, nvars), "<=", rhs)
    for coeffs, rhs in strict:
        row = _sparse(coeffs, nvars)
        row[eps] = Fraction(1)
        problem.add(row, "<=", rhs)
    problem.set_objective({eps: Fraction(1)})
    outcome = solve(problem)
    if isinstance(outcome, Infeasible) or outcome.value <= 0:
        return Infeasible()
    point = outcome.point[:nvars]
    for coeffs, rhs in weak:
        if sum((a * point[j] for j, a in _sparse(coeffs, nvars).items()), Fraction(0)) > Fraction(rhs):
            raise RuntimeError("strict_feasible point violates a weak row")
    for coeffs, rhs in strict:
        if sum((a * point[j] for j, a in _sparse(coeffs, nvars).items()), Fraction(0)) >= Fraction(rhs):
            raise RuntimeError("strict_feasible point violates a strict row")
    return Feasible(tuple(point), outcome.value)
