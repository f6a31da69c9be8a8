from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mechlab.eval import canonical_det_price
from mechlab.lattice import (
    LatticeProperty as LP,
    check_det,
    check_sym,
    ext_geq,
    finite_replacement,
    harmonic,
    is_minimal_majorant,
    supermod_majorant_det,
    supermod_majorant_lp,
    supermod_majorant_sym,
)
from mechlab.model import INF, DetPricing, Menu, SymPricing, popcount
from strategies import det_menus, halves, monotone_pricings, sym_pricings

BOTTOM = DetPricing.of(2, {0: 0, 1: F(3, 2), 2: 2, 3: 3})
RIGHT = DetPricing.of(2, {0: 0, 1: 1, 2: 1, 3: 4})


def test_check_det_examples():
    assert check_det(BOTTOM, LP.SUBMODULAR).holds
    assert check_det(RIGHT, LP.SUPERMODULAR).holds
    v = check_det(RIGHT, LP.SUBMODULAR)
    assert not v.holds and v.witness == (0b01, 0b10)
    p = DetPricing(3, tuple(F(2) if popcount(m) == 1 else F(popcount(m)) for m in range(8)))
    v = check_det(p, LP.SUBMODULAR)
    assert not v.holds and v.witness == (0b011, 0b101)
    assert check_det(p, LP.SEPARABLY_SUBADDITIVE).holds


def test_check_det_with_infinite_prices():
    p = DetPricing.of(2, {0: 0, 1: 1, 2: INF, 3: INF})
    assert check_det(p, LP.SUBMODULAR).holds
    assert check_det(p, LP.SUPERMODULAR).holds
    assert check_det(p, LP.NONDECREASING).holds
    q = DetPricing.of(2, {0: 0, 1: INF, 2: 1, 3: 5})
    assert check_det(q, LP.SUPERMODULAR).witness == (1, 2)
    assert check_det(q, LP.NONDECREASING).witness == (1, 3)
    assert ext_geq([INF], [INF]) and not ext_geq([F(5)], [INF])


def test_check_det_restricted_family():
    assert check_det(RIGHT, LP.SUBMODULAR, restrict_to=[0, 1, 3]).holds


def test_check_sym_examples():
    v = check_sym(SymPricing.of([0, 1, 1, 1000]))
    assert not v.holds and v.witness == (2,)
    assert check_sym(SymPricing.of([0, 1000, 1000**2, 1000**3])).holds
    assert check_sym(SymPricing.of([0, 3, 6, 9])).holds
    assert check_sym(SymPricing.of([0, 3, 6, 9]), LP.SUBMODULAR).holds


def test_majorant_examples():
    assert supermod_majorant_det(DetPricing.of(2, {0: 0, 1: 1, 2: 1, 3: 1}))[3] == 2
    assert supermod_majorant_det(RIGHT) == RIGHT
    assert supermod_majorant_sym(SymPricing.of([0, 1, 1, 1000])).levels == (0, 1, 2, 1001)
    assert supermod_majorant_sym(SymPricing.of([0, 5, 6])).levels == (0, 5, 10)
    sup = SymPricing.of([0, 1, 3, 6])
    assert supermod_majorant_sym(sup) == sup
    with pytest.raises(ValueError):
        supermod_majorant_det(DetPricing.of(1, {0: 0, 1: INF}))
    with pytest.raises(ValueError):
        supermod_majorant_sym(SymPricing.of([0, INF]))


def test_majorant_is_minimal_but_not_pointwise_least():
    """A monotone pricing whose recursive majorant is minimal yet beaten pointwise at the full set."""
    p = DetPricing(3, tuple(map(F, [0, 3, 2, 3, 1, 6, 4, 6])))
    q = supermod_majorant_det(p)
    assert q.prices == tuple(map(F, [0, 3, 2, 5, 1, 6, 4, 9]))
    assert is_minimal_majorant(p, q)
    assert supermod_majorant_lp(p, 0b111) == 8
    # the LP optimum at the full set raises {3} to 2, which the recursion never does
    other = DetPricing(3, tuple(map(F, [0, 3, 2, 5, 2, 6, 4, 8])))
    assert check_det(other, LP.SUPERMODULAR).holds
    assert all(a >= b for a, b in zip(other.prices, p.prices))
    assert other[0b100] > q[0b100] and other[0b111] < q[0b111]


def test_harmonic():
    assert harmonic(1) == 1 and harmonic(2) == F(3, 2) and harmonic(3) == F(11, 6)
    with pytest.raises(ValueError):
        harmonic(0)


def test_finite_replacement():
    p = finite_replacement(DetPricing.of(2, {0: 0, 1: 3, 2: INF, 3: INF}))
    assert p.prices == (0, 3, 4, 8)


@st.composite
def any_pricings(draw, k=None):
    k = draw(st.integers(1, 3)) if k is None else k
    rest = draw(st.lists(halves(0, 6), min_size=(1 << k) - 1, max_size=(1 << k) - 1))
    return DetPricing(k, (F(0), *rest))


@given(any_pricings())
def test_sub_and_super_means_additive(p):
    if check_det(p, LP.SUBMODULAR).holds and check_det(p, LP.SUPERMODULAR).holds:
        for m in range(1 << p.k):
            assert p[m] == sum(p[1 << i] for i in range(p.k) if m >> i & 1)


@given(st.integers(1, 3).flatmap(lambda k: st.lists(halves(0, 4), min_size=k, max_size=k)))
def test_additive_pricings_are_sub_and_super(weights):
    k = len(weights)
    p = DetPricing(k, tuple(sum((w for i, w in enumerate(weights) if m >> i & 1), F(0)) for m in range(1 << k)))
    for prop in LP:
        assert check_det(p, prop).holds


@given(any_pricings())
def test_modularity_implies_separable_additivity(p):
    if check_det(p, LP.SUBMODULAR).holds:
        assert check_det(p, LP.SEPARABLY_SUBADDITIVE).holds
    if check_det(p, LP.SUPERMODULAR).holds:
        assert check_det(p, LP.SEPARABLY_SUPERADDITIVE).holds


@st.composite
def submodular_menus(draw):
    """Menus priced by a capped additive function, offered on a random family."""
    k = draw(st.integers(2, 3))
    weights = draw(st.lists(halves(1, 3), min_size=k, max_size=k))
    cap = draw(halves(1, 6))
    masks = draw(st.lists(st.integers(1, (1 << k) - 1), unique=True, min_size=1))
    prices = {0: F(0)}
    for m in masks:
        prices[m] = min(cap, sum((w for i, w in enumerate(weights) if m >> i & 1), F(0)))
    return Menu.deterministic(k, prices)


def _restricted_then_global(menu):
    p = canonical_det_price(menu)
    family = [m for m in range(1 << menu.k) if p[m] is not INF]
    if check_det(p, LP.SUBMODULAR, restrict_to=family).holds:
        assert check_det(p, LP.SUBMODULAR).holds
        return True
    return False


@given(det_menus())
def test_submodular_on_offers_extends_to_canonical_price(menu):
    _restricted_then_global(menu)


@given(submodular_menus())
def test_submodular_on_offers_extends_to_canonical_price_positive_family(menu):
    _restricted_then_global(menu)


@given(any_pricings())
def test_majorant_is_supermodular_minimal_majorant(p):
    q = supermod_majorant_det(p)
    assert check_det(q, LP.SUPERMODULAR).holds
    assert all(a <= b for a, b in zip(p.prices, q.prices))
    assert is_minimal_majorant(p, q)
    if check_det(p, LP.SUPERMODULAR).holds:
        assert q == p


@given(monotone_pricings())
def test_majorant_of_nondecreasing_pricing_within_doubling_bound(p):
    q = supermod_majorant_det(p)
    for m in range(1, 1 << p.k):
        assert p[m] <= q[m] <= 2 ** (popcount(m) - 1) * p[m]


@given(monotone_pricings(k=3))
def test_majorant_matches_pointwise_lp(p):
    """Expected to fail: the recursion gives a minimal majorant, and the pointwise minima need not form one."""
    q = supermod_majorant_det(p)
    for m in range(1 << p.k):
        assert q[m] == supermod_majorant_lp(p, m)


@given(sym_pricings())
def test_sym_majorant(p):
    q = supermod_majorant_sym(p)
    assert check_sym(q).holds
    for a, b in zip(p.levels, q.levels):
        assert a <= b <= p.k * a or a == b == 0
