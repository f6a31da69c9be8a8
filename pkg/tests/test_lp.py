import itertools
from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mechlab import lp
from mechlab.lp import CapExceeded, Feasible, Infeasible, LpProblem, Optimal, Unbounded, solve, strict_feasible


def _solve_square(rows, rhs):
    """Exact Gaussian elimination; None when singular."""
    n = len(rows)
    m = [list(r) + [b] for r, b in zip(rows, rhs)]
    for c in range(n):
        piv = next((r for r in range(c, n) if m[r][c]), None)
        if piv is None:
            return None
        m[c], m[piv] = m[piv], m[c]
        for r in range(n):
            if r != c and m[r][c]:
                f = m[r][c] / m[c][c]
                m[r] = [a - f * b for a, b in zip(m[r], m[c])]
    return [m[i][n] / m[i][i] for i in range(n)]


def vertex_oracle(n, objective, rows, upper):
    """max c.x over {A x <= b, 0 <= x <= upper} by enumerating every basic solution."""
    halfspaces = [(r, b) for r, b in rows]
    halfspaces += [([F(-int(i == j)) for i in range(n)], F(0)) for j in range(n)]
    halfspaces += [([F(int(i == j)) for i in range(n)], upper) for j in range(n)]
    best = None
    for active in itertools.combinations(halfspaces, n):
        x = _solve_square([a for a, _ in active], [b for _, b in active])
        if x is None:
            continue
        if all(sum(a * v for a, v in zip(r, x)) <= b for r, b in halfspaces):
            val = sum(c * v for c, v in zip(objective, x))
            best = val if best is None else max(best, val)
    return best


coef = st.integers(-3, 3).map(F)


@st.composite
def boxed_lps(draw):
    n = draw(st.integers(1, 3))
    m = draw(st.integers(0, 4))
    rows = [(draw(st.lists(coef, min_size=n, max_size=n)), F(draw(st.integers(-4, 6)))) for _ in range(m)]
    objective = draw(st.lists(coef, min_size=n, max_size=n))
    return n, objective, rows, F(draw(st.integers(1, 4)))


def test_simple_max():
    p = LpProblem(1)
    p.add([1], "<=", 3)
    p.set_objective([1])
    assert solve(p) == Optimal(F(3), (F(3),))


def test_unbounded():
    p = LpProblem(2)
    p.set_objective([1, 1])
    assert isinstance(solve(p), Unbounded)


def test_infeasible():
    p = LpProblem(1)
    p.add([1], "<=", 1)
    p.add([1], ">=", 2)
    assert isinstance(solve(p), Infeasible)


def test_min_sense_free_variables_and_equalities():
    p = LpProblem(2, sense="min", lower=[None, None])
    p.add([1, 1], "=", 1)
    p.add([1, -1], ">=", -3)
    p.set_objective([2, 1])
    assert solve(p) == Optimal(F(0), (F(-1), F(2)))
    p.set_objective([1, 2])
    assert isinstance(solve(p), Unbounded)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        LpProblem(2).add([1, 2, 3], "<=", 1)
    with pytest.raises(ValueError):
        LpProblem(2, lower=[0])


def test_size_cap():
    p = LpProblem(lp.MAX_SIZE + 1)
    with pytest.raises(CapExceeded):
        solve(p)


def test_strict_feasible_examples():
    assert strict_feasible(1, [([-1], -2)], [([1], 3)]) == Feasible((F(2),), F(1))
    assert isinstance(strict_feasible(1, [([-1], -3)], [([1], 3)]), Infeasible)
    assert isinstance(strict_feasible(1, [], [([1], 0), ([-1], 0)]), Infeasible)


@given(boxed_lps())
def test_matches_vertex_enumeration(inst):
    n, objective, rows, upper = inst
    p = LpProblem(n, upper=[upper] * n)
    for r, b in rows:
        p.add(r, "<=", b)
    p.set_objective(objective)
    out = solve(p)
    expected = vertex_oracle(n, objective, rows, upper)
    if expected is None:
        assert isinstance(out, Infeasible)
    else:
        assert isinstance(out, Optimal) and out.value == expected
        x = out.point
        assert all(0 <= v <= upper for v in x)
        assert all(sum(a * v for a, v in zip(r, x)) <= b for r, b in rows)
        assert sum(c * v for c, v in zip(objective, x)) == out.value


@given(boxed_lps())
def test_dual_route_matches_primal_route(inst):
    n, objective, rows, upper = inst
    p = LpProblem(n, upper=[upper] * n)
    for r, b in rows:
        p.add(r, "<=", b)
    p.set_objective(objective)
    std = lp._standardize(p)
    primal = lp._core(std.ncols, std.cost, std.rows)
    y = lp._via_dual(std)
    if y is not None:
        assert primal[0] == "optimal"
        cost = lambda v: sum(a * v[j] for j, a in std.cost.items())  # noqa: E731
        assert cost(y) == cost(primal[1])
    elif primal[0] == "optimal":
        # The dual route only gives up; it never reports a wrong optimum.
        assert isinstance(solve(p), Optimal)


@given(
    st.lists(st.tuples(st.integers(-3, 3), st.integers(-5, 5)), max_size=4),
    st.lists(st.tuples(st.integers(-3, 3), st.integers(-5, 5)), max_size=4),
)
def test_strict_feasible_one_dimensional(weak, strict):
    """Compare with exact interval reasoning on a single variable."""
    lo, lo_open, hi, hi_open, empty = None, False, None, False, False

    def tighten(a, b, is_strict):
        nonlocal lo, lo_open, hi, hi_open, empty
        if a == 0:
            empty |= (0 >= b) if is_strict else (0 > b)
            return
        bound = F(b, a)
        if a > 0:
            if hi is None or bound < hi or (bound == hi and is_strict):
                hi, hi_open = bound, is_strict
        elif lo is None or bound > lo or (bound == lo and is_strict):
            lo, lo_open = bound, is_strict

    for a, b in weak:
        tighten(a, b, False)
    for a, b in strict:
        tighten(a, b, True)
    if lo is not None and hi is not None:
        empty |= lo > hi or (lo == hi and (lo_open or hi_open))
    out = strict_feasible(1, [([a], b) for a, b in weak], [([a], b) for a, b in strict])
    assert isinstance(out, Feasible) == (not empty)
    if isinstance(out, Feasible):
        z = out.point[0]
        assert all(a * z <= b for a, b in weak) and all(a * z < b for a, b in strict)
