import itertools
import math
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mechlab.cli import harmonic_dist
from mechlab.eval import IcOk, verify_ic_ir
from mechlab.lattice import harmonic
from mechlab.lp import LpProblem, Optimal, solve
from mechlab.model import BundlingPartition, SymPricing, ValuationDist, diagonal_augment, positive_part, set_value
from mechlab.optimize import (
    CapExceeded,
    Mode,
    amonrev_relaxed,
    bound_suite,
    brev,
    drev,
    ln_bounds,
    lp_rev,
    monrev_relaxed,
    myerson_rev,
    partition_rev,
    replay,
    srev,
    symdrev,
    symsrev,
    top_sums,
)
from strategies import dists

UNIT = ValuationDist.uniform(2, [(1, 0), (0, 1)])


def one_good(*pairs):
    return ValuationDist.of(1, [((x,), p) for x, p in pairs])


def test_myerson_examples():
    assert myerson_rev(one_good((5, 1))).value == 5
    r = myerson_rev(ValuationDist.uniform(1, [(1,), (2,)]))
    assert r.value == 1 and r.witness["price"] == 1
    assert myerson_rev(one_good((1, F(1, 2)), (2, F(1, 4)), (4, F(1, 4)))).value == 1
    with pytest.raises(ValueError):
        myerson_rev(UNIT)


def test_separate_and_bundle_examples():
    assert srev(UNIT).value == brev(UNIT).value == symsrev(UNIT).value == 1
    point = ValuationDist.of(2, [((1, 2), 1)])
    assert srev(point).value == brev(point).value == 3


def test_harmonic_separate_selling():
    assert 1 <= srev(harmonic_dist(3, 1000)).value <= 1 + F(2, 1000)


def test_partition_examples():
    d = ValuationDist.uniform(3, [(1, 0, 0), (0, 1, 1)])
    assert partition_rev(d, BundlingPartition.of(3, [[1], [2, 3]])).value == F(3, 2)
    assert partition_rev(d, BundlingPartition.of(3, [[1], [2], [3]])).value == srev(d).value
    assert partition_rev(d, BundlingPartition.of(3, [[1, 2, 3]])).value == brev(d).value
    with pytest.raises(ValueError):
        BundlingPartition.of(3, [[1], [1, 2, 3]])


def test_lp_rev_examples():
    assert lp_rev(ValuationDist.of(2, [((1, 2), 1)])).value == 3
    assert lp_rev(ValuationDist.uniform(2, [(1, 1), (2, 2)])).value == 2
    r = lp_rev(harmonic_dist(3, 1000))
    assert F(11, 6) <= r.value <= F(11, 6) + F(3, 1000)


def test_relaxed_monotone_examples():
    point = ValuationDist.of(2, [((1, 2), 1)])
    assert monrev_relaxed(point).value == amonrev_relaxed(point).value == 3
    assert monrev_relaxed(UNIT, augment=True).value == 1
    assert amonrev_relaxed(UNIT, augment=True).value == 1


def test_drev_examples():
    assert drev(ValuationDist.of(2, [((1, 2), 1)])).value == 3
    assert drev(UNIT).value == 1
    assert drev(ValuationDist.uniform(2, [(1, 1), (2, 2)])).value == 2


def test_symdrev_examples():
    assert symdrev(ValuationDist.of(2, [((2, 2), 1)])).value == 4
    d = harmonic_dist(3, 1000)
    r = symdrev(d, Mode.SUPERMODULAR)
    assert r.value >= F(11, 6)
    powers = SymPricing.of([0, 1000, 1000**2, 1000**3])
    from mechlab.eval import revenue

    assert revenue(powers.det().menu(), d) == F(11, 6)


def test_cap_exceeded():
    d = ValuationDist.uniform(3, [(i, 0, 0) for i in range(1, 9)])
    with pytest.raises(CapExceeded):
        drev(d)
    with pytest.raises(CapExceeded):
        symdrev(d, cap=10)


def test_top_sums():
    assert top_sums((1, 3, 2)) == [0, 3, 5, 6]


@pytest.mark.parametrize("n", [1, 2, 3, 4, 6, 10, 1000])
def test_ln_bounds_bracket(n):
    lo, hi = ln_bounds(n)
    assert lo <= hi
    assert float(lo) <= math.log(n) + 1e-12 and math.log(n) - 1e-12 <= float(hi)
    assert hi - lo < F(1, 10**6) or n == 1000


def test_ln_bounds_of_two_above_short_constant():
    # 25469/36744 falls short of ln 2, so it cannot serve as an upper bound
    assert F(25469, 36744) < ln_bounds(2)[0] < ln_bounds(2)[1]


def _price_lp_oracle(nodes, order_edges, sup_rows, probs, values):
    """Exhaustive assignment enumeration, one LP per assignment."""
    best = F(0)
    for assign in itertools.product(range(nodes), repeat=len(probs)):
        lp = LpProblem(nodes, sense="max")
        lp.set_objective([sum((p for p, a in zip(probs, assign) if a == v), F(0)) for v in range(nodes)])
        lp.add({0: F(1)}, "=", 0)
        for big, small in order_edges:
            lp.add({big: F(1), small: F(-1)}, ">=", 0)
        for row in sup_rows:
            lp.add(row, ">=", 0)
        for vals, a in zip(values, assign):
            lp.add({a: F(1)}, "<=", vals[a])
            for b in range(nodes):
                if b != a:
                    lp.add({a: F(1), b: F(-1)}, "<=", vals[a] - vals[b])
        out = solve(lp)
        if isinstance(out, Optimal) and out.value > best:
            best = out.value
    return best


def _drev_oracle(dist, mode):
    d = positive_part(dist)
    nodes = 1 << d.k
    edges = [(m, m & ~(1 << i)) for m in range(nodes) for i in range(d.k) if m >> i & 1]
    rows = []
    if mode is Mode.SUPERMODULAR:
        for a in range(nodes):
            for b in range(a + 1, nodes):
                if a & b not in (a, b):
                    row = {}
                    for m, c in ((a | b, 1), (a & b, 1), (a, -1), (b, -1)):
                        row[m] = row.get(m, 0) + F(c)
                    rows.append(row)
    vals = [[set_value(a.x, m) for m in range(nodes)] for a in d.atoms]
    return _price_lp_oracle(nodes, edges, rows, [a.p for a in d.atoms], vals)


def _symdrev_oracle(dist, mode):
    d = positive_part(dist)
    k = d.k
    edges = [(m, m - 1) for m in range(1, k + 1)]
    rows = [{m: F(1), m - 1: F(-2), m - 2: F(1)} for m in range(2, k + 1)]
    rows = rows if mode is Mode.SUPERMODULAR else []
    return _price_lp_oracle(k + 1, edges, rows, [a.p for a in d.atoms], [top_sums(a.x) for a in d.atoms])


@settings(max_examples=15)
@given(st.integers(1, 2).flatmap(lambda k: dists(k=k, max_atoms=3, top=3)), st.sampled_from(Mode))
def test_drev_matches_assignment_enumeration(dist, mode):
    r = drev(dist, mode)
    assert r.value == _drev_oracle(dist, mode)
    assert replay(r, dist) == r.value


@settings(max_examples=15)
@given(st.integers(1, 3).flatmap(lambda k: dists(k=k, max_atoms=3, top=3)), st.sampled_from(Mode))
def test_symdrev_matches_assignment_enumeration(dist, mode):
    r = symdrev(dist, mode)
    assert r.value == _symdrev_oracle(dist, mode)
    assert replay(r, dist) == r.value


@settings(max_examples=25)
@given(dists(max_atoms=4))
def test_witnesses_replay_to_value(dist):
    for fn in (srev, brev, symsrev, lp_rev):
        r = fn(dist)
        assert replay(r, dist) == r.value
    for fn in (monrev_relaxed, amonrev_relaxed):
        for augment in (False, True):
            r = fn(dist, augment=augment)
            assert replay(r, dist) == r.value


@settings(max_examples=25)
@given(dists(max_atoms=4))
def test_lp_witness_menu_is_ic_ir(dist):
    r = lp_rev(dist)
    menu = r.witness["menu"]
    from mechlab.eval import TieRule, buyer_choice

    rows = []
    for a in dist.atoms:
        c = buyer_choice(menu, a.x, TieRule.SELLER_FAVORABLE)
        rows.append((c.chosen.alloc, c.payment))
    assert isinstance(verify_ic_ir(rows, dist), IcOk)


@settings(max_examples=20)
@given(st.integers(1, 3).flatmap(lambda k: dists(k=k, max_atoms=4, top=3)))
def test_bound_suite_inequalities(dist):
    checks, values = bound_suite(dist)
    assert [c.name for c in checks if not c.holds] == []
    assert values["symdrev"] <= values["drev"] <= values["lp_rev"]


@given(st.integers(1, 3), st.lists(st.integers(1, 4), min_size=1, max_size=3, unique=True))
def test_diagonal_lp_rev_is_k_times_one_good(k, ys):
    y = ValuationDist.uniform(1, [(v,) for v in ys])
    diag = ValuationDist.uniform(k, [(v,) * k for v in ys])
    assert lp_rev(diag).value == k * myerson_rev(y).value


def test_max_marginal_tight_on_unit_vectors():
    from mechlab.model import marginal

    m = myerson_rev(marginal(UNIT, "max")).value
    assert m == srev(UNIT).value == brev(UNIT).value == 1


def test_diagonal_augment_keeps_relaxation_above_srev():
    d = ValuationDist.uniform(2, [(1, 3), (2, 1)])
    assert len(diagonal_augment(d).atoms) > len(d.atoms)
    assert srev(d).value <= monrev_relaxed(d, augment=True).value <= 2 * min(srev(d).value, brev(d).value)


def test_harmonic_symdrev_bound():
    d = harmonic_dist(3, 1000)
    assert symdrev(d, Mode.SUPERMODULAR).value <= harmonic(3) * symsrev(d).value
