"""Hypothesis strategies for exact instances."""

from fractions import Fraction

from hypothesis import strategies as st

from mechlab.model import DetPricing, Menu, SymPricing, ValuationDist, popcount


def halves(lo: int = 0, hi: int = 4):
    return st.integers(2 * lo, 2 * hi).map(lambda n: Fraction(n, 2))


@st.composite
def dists(draw, k=None, max_atoms: int = 4, top: int = 4):
    k = draw(st.integers(1, 3)) if k is None else k
    points = draw(
        st.lists(st.tuples(*[halves(0, top)] * k), min_size=1, max_size=max_atoms, unique=True)
    )
    weights = draw(st.lists(st.integers(1, 5), min_size=len(points), max_size=len(points)))
    total = sum(weights)
    return ValuationDist.of(k, [(x, Fraction(w, total)) for x, w in zip(points, weights)])


@st.composite
def monotone_pricings(draw, k=None):
    k = draw(st.integers(1, 3)) if k is None else k
    prices = [Fraction(0)] * (1 << k)
    for mask in sorted(range(1, 1 << k), key=lambda m: (popcount(m), m)):
        below = max(prices[mask & ~(1 << i)] for i in range(k) if mask >> i & 1)
        prices[mask] = below + draw(halves(0, 3))
    return DetPricing(k, tuple(prices))


@st.composite
def sym_pricings(draw, k=None):
    k = draw(st.integers(1, 5)) if k is None else k
    levels = [Fraction(0)]
    for _ in range(k):
        levels.append(levels[-1] + draw(halves(0, 4)))
    return SymPricing(tuple(levels))


@st.composite
def det_menus(draw, k=None):
    """Deterministic menus with prices strictly increasing along inclusion."""
    k = draw(st.integers(1, 3)) if k is None else k
    masks = draw(st.lists(st.integers(1, (1 << k) - 1), unique=True, max_size=(1 << k) - 1))
    prices = {0: Fraction(0)}
    for m in sorted(masks, key=lambda m: (popcount(m), m)):
        floor = max(prices[s] for s in prices if s & m == s and s != m)
        prices[m] = floor + draw(halves(1, 3)) / 2
    return Menu.deterministic(k, prices)


@st.composite
def menus(draw, k=None):
    k = draw(st.integers(1, 3)) if k is None else k
    allocs = draw(
        st.lists(
            st.tuples(*[st.integers(0, 4).map(lambda n: Fraction(n, 4))] * k), min_size=1, max_size=4, unique=True
        )
    )
    allocs = [a for a in allocs if any(a)]
    prices = draw(st.lists(halves(0, 2 * k), min_size=len(allocs), max_size=len(allocs)))
    return Menu.of(k, list(zip(allocs, prices)))


def points(k: int, top: int = 4):
    return st.tuples(*[halves(0, top)] * k)
