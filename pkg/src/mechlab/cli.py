"""Command line: revenue functionals, structural checks and the scenario registry."""

from __future__ import annotations

import argparse
import dataclasses
import enum
import itertools
import json
import random
import sys
import time
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

from . import optimize as opt
from .eval import (
    TieRule,
    buyer_choice,
    canonical_det_price,
    canonical_general_price,
    convexified_price,
    primal_price,
    revenue,
)
from .lattice import (
    LatticeProperty,
    check_det,
    check_sym,
    harmonic,
    is_minimal_majorant,
    supermod_majorant_det,
    supermod_majorant_lp,
    supermod_majorant_sym,
)
from .lp import CapExceeded, Feasible
from .model import (
    INF,
    BundlingPartition,
    DetPricing,
    InputError,
    Menu,
    SymPricing,
    ValuationDist,
    alloc_mask,
    augment_points,
    fmt_rat,
    fmt_set,
    indicator,
    parse_instance,
    popcount,
    submasks,
    to_json,
    to_rat,
)
from .monotone import (
    Check,
    Scope,
    allocation_violation_search,
    check_certificate,
    check_det_monotonic,
    grid_oracle,
    motzkin_certificate,
    product_grid_oracle,
    replay_violation,
    scan_pairs,
    uniform_axes,
    z_system,
)
from .quad import (
    EXAMPLE_SPEC,
    QuadSpec,
    allocation_monotone_on_grid,
    in_image_box,
    invert_pd,
    matmul,
    parse_quad,
    piecewise_checks,
    pricing_submodularity_violation,
    pricing_value,
    quad_screens,
    ultramodular_on_grid,
)

EXIT_OK, EXIT_FAILED, EXIT_INPUT, EXIT_CAP = 0, 1, 2, 3

F = Fraction


# ---------------------------------------------------------------- rendering


def jsonable(obj):
    """Exact JSON-ready form: rationals as "a/b", infinity as "inf"."""
    if obj is INF:
        return "inf"
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, (int, Fraction)):
        return fmt_rat(Fraction(obj))
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, (ValuationDist, Menu, DetPricing, SymPricing)):
        return to_json(obj)
    if isinstance(obj, QuadSpec):
        return {"A": jsonable(obj.a), "v": jsonable(obj.v)}
    if isinstance(obj, opt.RevenueResult):
        return {"value": jsonable(obj.value), "witness": jsonable(obj.witness)}
    if dataclasses.is_dataclass(obj):
        return {f.name: jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(jsonable(k)): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    raise TypeError(f"cannot render {type(obj).__name__}")


def render(value) -> str:
    out = jsonable(value)
    return out if isinstance(out, str) else json.dumps(out, separators=(",", ":"))


def flatten(payload) -> list[str]:
    """Text rendering of a JSON payload: one `key: value` line per top-level field."""
    def text(value) -> str:
        return value if isinstance(value, str) else json.dumps(value, separators=(",", ":"))

    if isinstance(payload, dict):
        return [f"{key}: {text(value)}" for key, value in payload.items()]
    return [text(payload)]


# ---------------------------------------------------------------- reports


@dataclass
class Result:
    name: str
    value: object
    expect: str
    passed: bool

    def to_json(self) -> dict:
        return {"name": self.name, "value": jsonable(self.value), "expect": self.expect, "pass": self.passed}


@dataclass
class Report:
    scenario: str
    results: list = field(default_factory=list)
    witnesses: dict = field(default_factory=dict)
    elapsed_ms: int = 0

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def to_json(self) -> dict:
        return {
            "scenario": self.scenario,
            "results": [r.to_json() for r in self.results],
            "witnesses": jsonable(self.witnesses),
            "elapsed_ms": self.elapsed_ms,
        }

    def to_text(self) -> str:
        lines = [f"scenario {self.scenario}: {'PASS' if self.passed else 'FAIL'} ({self.elapsed_ms} ms)"]
        for r in self.results:
            lines.append(f"  {'pass' if r.passed else 'FAIL'}  {r.name}: {render(r.value)}  (expect {r.expect})")
        for line in flatten(jsonable(self.witnesses)) if self.witnesses else []:
            lines.append(f"  witness {line}")
        return "\n".join(lines)


class Recorder:
    """Collects expectation outcomes for one scenario run."""

    def __init__(self, report: Report):
        self.report = report

    def check(self, name: str, value, expect: str, passed: bool) -> None:
        self.report.results.append(Result(name, value, expect, bool(passed)))

    def equal(self, name: str, value, target) -> None:
        self.check(name, value, f"= {render(target)}", value == target)

    def within(self, name: str, value, lo, hi) -> None:
        self.check(name, value, f"in [{render(lo)}, {render(hi)}]", lo <= value <= hi)

    def at_least(self, name: str, value, lo) -> None:
        self.check(name, value, f">= {render(lo)}", value >= lo)

    def at_most(self, name: str, value, hi) -> None:
        self.check(name, value, f"<= {render(hi)}", value <= hi)

    def greater(self, name: str, value, lo) -> None:
        self.check(name, value, f"> {render(lo)}", value > lo)

    def holds(self, name: str, flag: bool) -> None:
        self.check(name, bool(flag), "= true", bool(flag))

    def note(self, name: str, value) -> None:
        self.check(name, value, "reported", True)

    def witness(self, name: str, value) -> None:
        self.report.witnesses[name] = value


# ---------------------------------------------------------------- instance builders

FIG1 = {
    "left": DetPricing.of(2, [0, 1, 2, 4]),
    "right": DetPricing.of(2, [0, 1, 1, 4]),
    "bottom": DetPricing.of(2, [0, F(3, 2), 2, 3]),
}


def harmonic_dist(k: int, big: int) -> ValuationDist:
    """Every set A of size m gets value M^m on A, with total mass 1/(m M^m) per size."""
    pairs = []
    rest = F(1)
    for m in range(1, k + 1):
        beta = F(1, m * big**m)
        rest -= beta
        sets = list(itertools.combinations(range(k), m))
        for goods in sets:
            pairs.append((tuple(F(big**m) if i in goods else F(0) for i in range(k)), beta / len(sets)))
    pairs.insert(0, ((F(0),) * k, rest))
    return ValuationDist.of(k, pairs)


def harmonic_proof_points(k: int, big: int) -> list[tuple]:
    """Zero-mass points M^(m-1) on the first m goods, in every coordinate order."""
    out = []
    for m in range(1, k + 1):
        base = tuple(F(big ** (m - 1)) if i < m else F(0) for i in range(k))
        out.extend(sorted(set(itertools.permutations(base))))
    return out


def non_convex_dist(big: int, grid: int) -> ValuationDist:
    """Half the mass on (u, 1-u) placed on two of three goods, 1/(12M) on (M,M,M), rest at 0.

    u runs over the midpoints of a grid with `grid` cells on (0, 1).
    """
    us = [F(2 * j - 1, 2 * grid) for j in range(1, grid + 1)]
    pairs = []
    cell = F(1, 2) / (3 * grid)
    for u in us:
        for zero in range(3):
            rest = [u, 1 - u]
            x = tuple(F(0) if i == zero else rest.pop(0) for i in range(3))
            pairs.append((x, cell))
    top = F(1, 12 * big)
    pairs.append(((F(big),) * 3, top))
    pairs.append(((F(0),) * 3, 1 - F(1, 2) - top))
    return ValuationDist.merged(3, pairs)


def pair_partition_pricing(k: int) -> DetPricing:
    """Price 1 on sets meeting every pair {1,2}, {3,4}, ..., else 0."""
    pairs = [0b11 << (2 * l) for l in range(k // 2)]
    return DetPricing(k, tuple(F(int(all(m & pr for pr in pairs))) for m in range(1 << k)))


def pair_partition_product(k: int, mask: int) -> Fraction:
    out = 1
    for l in range(k // 2):
        out *= popcount(mask & 0b11 << (2 * l))
    return F(out)


def _half(rng: random.Random, lo: int, hi: int) -> Fraction:
    return F(rng.randint(2 * lo, 2 * hi), 2)


def random_dist(rng: random.Random, k: int, n: int, top: int = 4) -> ValuationDist:
    """n distinct atoms with half-integer coordinates in [0, top] and random positive weights."""
    points: set = set()
    while len(points) < n:
        points.add(tuple(_half(rng, 0, top) for _ in range(k)))
    weights = [rng.randint(1, 6) for _ in points]
    total = sum(weights)
    return ValuationDist.of(k, [(x, F(w, total)) for x, w in zip(sorted(points), weights)])


def random_one_good(rng: random.Random, support: int) -> ValuationDist:
    return random_dist(rng, 1, support, top=6)


def random_monotone_pricing(rng: random.Random, k: int) -> DetPricing:
    """Finite nondecreasing pricing with p(empty) = 0 and half-integer increments."""
    prices = [F(0)] * (1 << k)
    for mask in sorted(range(1, 1 << k), key=lambda m: (popcount(m), m)):
        below = max(prices[mask & ~(1 << i)] for i in range(k) if mask >> i & 1)
        prices[mask] = below + _half(rng, 0, 3)
    return DetPricing(k, tuple(prices))


def random_sym_pricing(rng: random.Random, k: int) -> SymPricing:
    levels = [F(0)]
    for _ in range(k):
        levels.append(levels[-1] + _half(rng, 0, 4))
    return SymPricing(tuple(levels))


def random_det_menu(rng: random.Random, k: int, size: int) -> Menu:
    """Deterministic menu with `size` entries (zero entry included), prices strictly increasing with inclusion."""
    masks = sorted(rng.sample(range(1, 1 << k), min(size - 1, (1 << k) - 1)), key=lambda m: (popcount(m), m))
    prices: dict = {0: F(0)}
    for m in masks:
        floor = max((prices[s] for s in prices if s & m == s and s != m), default=F(0))
        prices[m] = max(_half(rng, 1, 2 * popcount(m) + 1), floor + _half(rng, 1, 4) / 2)
    return Menu.deterministic(k, prices)


def random_menu(rng: random.Random, k: int, size: int) -> Menu:
    """Menu of random quarter-grid allocations in [0,1]^k with half-integer prices."""
    allocs = {tuple(F(0) for _ in range(k))}
    while len(allocs) < size + 1:
        allocs.add(tuple(F(rng.randint(0, 4), 4) for _ in range(k)))
    pairs = [(q, F(0) if not any(q) else _half(rng, 0, 2 * k)) for q in sorted(allocs)]
    return Menu.of(k, pairs, add_zero=False)


# ---------------------------------------------------------------- scenarios


@dataclass(frozen=True)
class Param:
    default: int
    lo: int
    hi: int
    doc: str


@dataclass(frozen=True)
class Scenario:
    id: str
    description: str
    anchor: str
    run: Callable
    params: dict = field(default_factory=dict)
    randomized: bool = False


def _fig1_left(r: Recorder, params: dict, ctx: dict) -> None:
    p = FIG1["left"]
    menu = p.menu()
    x1, x2 = (F(1), F(23, 10)), (F(2), F(27, 10))
    c1 = buyer_choice(menu, x1, TieRule.TIE_FAVORABLE)
    c2 = buyer_choice(menu, x2, TieRule.TIE_FAVORABLE)
    r.equal("bundle bought at (1,23/10)", fmt_set(alloc_mask(c1.chosen.alloc)), "{2}")
    r.equal("payment at (1,23/10)", c1.payment, F(2))
    r.equal("bundle bought at (2,27/10)", fmt_set(alloc_mask(c2.chosen.alloc)), "{1}")
    r.equal("payment at (2,27/10)", c2.payment, F(1))
    dist = ValuationDist.uniform(2, [x1, x2])
    r.equal("revenue on the two-atom distribution", revenue(menu, dist), F(3, 2))
    hit = grid_oracle(menu, TieRule.TIE_FAVORABLE, [x1, x2], Check.PAYMENT)
    r.equal("payment grid violation", None if hit is None else [hit.x, hit.y], [x1, x2])
    dense = product_grid_oracle(menu, TieRule.TIE_FAVORABLE, uniform_axes(2, F(4), F(1, 10)), Check.PAYMENT)
    r.holds("payment violation on the 1/10 grid over [0,4]^2", dense is not None)
    r.witness("dense grid payment violation", dense)
    verdict = check_det_monotonic(p)
    r.equal("monotonicity verdict", verdict.status, "not-monotonic")
    v = verdict.violation
    r.equal("violating pair (A,B)", [fmt_set(v.pair[0]), fmt_set(v.pair[1])], ["{2}", "{1}"])
    z2 = v.z.get(1)
    r.check("z_2", z2, "in [2, 3)", z2 is not None and 2 <= z2 < 3)
    paid = replay_violation(p, v)
    ordered = all(a <= b for a, b in zip(v.x, v.y))
    r.holds("witness x <= y pays more at x", ordered and paid[0] > paid[1])
    r.witness("violation", {"x": v.x, "y": v.y, "payments": paid, "z": {i + 1: c for i, c in v.z.items()}})


def _fig1_right(r: Recorder, params: dict, ctx: dict) -> None:
    p = FIG1["right"]
    menu = p.menu()
    r.holds("supermodular", check_det(p, LatticeProperty.SUPERMODULAR).holds)
    sub = check_det(p, LatticeProperty.SUBMODULAR)
    r.equal(
        "submodularity witness", None if sub.holds else [fmt_set(m) for m in sub.witness], ["{1}", "{2}"]
    )
    r.equal("monotonicity verdict", check_det_monotonic(p).status, "monotonic")
    x, y = (F(1), F(23, 10)), (F(3), F(23, 10))
    hit = grid_oracle(menu, TieRule.TIE_FAVORABLE, [x, y], Check.ALLOCATION)
    r.equal("allocation grid violation", None if hit is None else [hit.x, hit.y], [x, y])
    lo = buyer_choice(menu, x, TieRule.TIE_FAVORABLE).chosen.alloc
    hi = buyer_choice(menu, y, TieRule.TIE_FAVORABLE).chosen.alloc
    r.witness("allocations", {"x": lo, "y": hi})
    r.holds("structured search finds an allocation drop", allocation_violation_search(p) is not None)


def _fig1_bottom(r: Recorder, params: dict, ctx: dict) -> None:
    p = FIG1["bottom"]
    menu = p.menu()
    r.holds("submodular", check_det(p, LatticeProperty.SUBMODULAR).holds)
    r.equal("monotonicity verdict", check_det_monotonic(p).status, "monotonic")
    axes = uniform_axes(2, F(4), F(1, 4))
    for check in (Check.PAYMENT, Check.ALLOCATION):
        hit = product_grid_oracle(menu, TieRule.TIE_FAVORABLE, axes, check)
        r.equal(f"{check.value} violations on the 1/4 grid over [0,4]^2", hit, None)


def _harmonic(r: Recorder, params: dict, ctx: dict) -> None:
    k, big = params["k"], params["M"]
    dist = harmonic_dist(k, big)
    h = harmonic(k)
    r.within("lp_rev", opt.lp_rev(dist).value, h, h + F(k, big))
    s = opt.srev(dist).value
    r.within("srev", s, F(1), 1 + F(k - 1, big))
    r.equal("symsrev equals srev", opt.symsrev(dist).value, s)
    sup = opt.symdrev(dist, opt.Mode.SUPERMODULAR, ctx["cap"])
    r.at_least("symdrev (supermodular)", sup.value, h)
    levels = SymPricing((F(0),) + tuple(F(big**m) for m in range(1, k + 1)))
    r.holds("p(m) = M^m is supermodular", check_sym(levels).holds)
    r.equal("revenue of p(m) = M^m", revenue(levels.det().menu(), dist), h)
    r.witness("symdrev levels", sup.witness["levels"])

    k2, big2 = params["k_amon"], params["M_amon"]
    small = augment_points(harmonic_dist(k2, big2), harmonic_proof_points(k2, big2))
    amon = opt.amonrev_relaxed(small, augment=True).value
    mon = opt.monrev_relaxed(small, augment=True).value
    r.at_most(f"amonrev_relaxed (k={k2}, M={big2})", amon, 1 + F(k2, big2))
    r.at_least(f"monrev_relaxed (k={k2}, M={big2})", mon, harmonic(k2))
    r.note("monrev_relaxed / amonrev_relaxed", mon / amon)


def _non_convex(r: Recorder, params: dict, ctx: dict) -> None:
    big, grid = params["M"], params["G"]
    dist = non_convex_dist(big, grid)
    p = SymPricing(tuple(F(c) for c in (0, 1, 1, big)))
    rev = revenue(p.det().menu(), dist, TieRule.SELLER_FAVORABLE)
    r.equal("revenue of p = (0,1,1,M)", rev, F(7, 12))
    verdict = check_sym(p)
    r.equal("first level breaking supermodularity", None if verdict.holds else verdict.witness[0], 2)
    s = opt.srev(dist).value
    r.note("srev", s)
    r.equal("symsrev equals srev", opt.symsrev(dist).value, s)
    r.greater("revenue / srev", rev / s, harmonic(3))
    try:
        sym = opt.symdrev(dist, opt.Mode.GENERAL, ctx["cap"])
        r.at_least("symdrev", sym.value, rev)
    except CapExceeded as exc:
        r.note("symdrev", f"not enumerated ({exc}); lower bound 7/12 from the p = (0,1,1,M) witness")


def _bound_suite(r: Recorder, params: dict, ctx: dict) -> None:
    rng = random.Random(ctx["seed"])
    violations: Counter = Counter()
    names: list = []
    flagged = 0
    first_failure = None
    for _ in range(params["count"]):
        k = rng.choice([2, 3])
        dist = random_dist(rng, k, rng.randint(1, params["n"]))
        checks, values = opt.bound_suite(dist, ctx["cap"])
        for c in checks:
            if c.name not in names:
                names.append(c.name)
            if not c.holds:
                violations[c.name] += 1
                first_failure = first_failure or {"dist": dist, "check": c.name, "lhs": c.lhs, "rhs": c.rhs}
        flagged += values["amonrev_ratio_flag"]
    for name in names:
        r.equal(f"violations of {name}", violations[name], 0)
    r.note("instances with amonrev_aug/srev above 2 ln(2k)", flagged)
    if first_failure:
        r.witness("first failure", first_failure)


def _diagonal(r: Recorder, params: dict, ctx: dict) -> None:
    rng = random.Random(ctx["seed"])
    misses = 0
    example = None
    for _ in range(params["count"]):
        y = random_one_good(rng, rng.randint(1, 5))
        k = rng.choice([2, 3])
        diag = ValuationDist.of(k, [((a.x[0],) * k, a.p) for a in y.atoms])
        lhs, rhs = opt.lp_rev(diag).value, k * opt.myerson_rev(y).value
        if lhs != rhs:
            misses += 1
            example = example or {"dist": diag, "lp_rev": lhs, "k*myerson": rhs}
    r.equal("instances with lp_rev(Ye) != k myerson(Y)", misses, 0)
    if example:
        r.witness("mismatch", example)


def _z_solves(p: DetPricing, a: int, b: int, z: dict) -> bool:
    """Direct check of p(A) - p(A-C) <= z(C) < p(B+C) - p(B) for nonempty C in A-B."""
    for c in submasks(a & ~b):
        if not c:
            continue
        zc = sum((z[i] for i in range(p.k) if c >> i & 1), F(0))
        if p[a] - p[a & ~c] > zc:
            return False
        if p[b | c] is not INF and zc >= p[b | c] - p[b]:
            return False
    return True


def _motzkin(r: Recorder, params: dict, ctx: dict) -> None:
    rng = random.Random(ctx["seed"])
    scanned = both_or_neither = bad_z = bad_cert = bad_replay = violated = 0
    example = None
    for _ in range(params["count"]):
        k = rng.randint(2, params["k"])
        menu = random_det_menu(rng, k, rng.randint(2, params["q"]))
        p = canonical_det_price(menu)
        for a, b in scan_pairs(p, Scope.ALL):
            scanned += 1
            outcome = z_system(p, a, b)
            cert = motzkin_certificate(p, a, b)
            feasible = isinstance(outcome, Feasible)
            if feasible == (cert is not None):
                both_or_neither += 1
                example = example or {"pricing": p, "pair": [fmt_set(a), fmt_set(b)]}
            if feasible:
                goods = [i for i in range(k) if (a & ~b) >> i & 1]
                if not _z_solves(p, a, b, dict(zip(goods, outcome.point))):
                    bad_z += 1
            if cert is not None and not check_certificate(p, cert):
                bad_cert += 1
        verdict = check_det_monotonic(p)
        if not verdict.monotonic:
            violated += 1
            v = verdict.violation
            paid = replay_violation(p, v)
            if not (all(s <= t for s, t in zip(v.x, v.y)) and paid[0] > paid[1]):
                bad_replay += 1
    r.note("pairs scanned", scanned)
    r.note("not-monotonic pricings", violated)
    r.equal("pairs with both or neither alternative", both_or_neither, 0)
    r.equal("z solutions failing direct recheck", bad_z, 0)
    r.equal("certificates failing recheck", bad_cert, 0)
    r.equal("violations not replaying as payment drops", bad_replay, 0)
    if example:
        r.witness("alternative failure", example)


def _majorants(r: Recorder, params: dict, ctx: dict) -> None:
    rng = random.Random(ctx["seed"])
    k = 3
    not_super = out_of_band = off_pointwise = not_minimal = 0
    example = None
    for _ in range(params["count"]):
        p = random_monotone_pricing(rng, k)
        q = supermod_majorant_det(p)
        not_super += not check_det(q, LatticeProperty.SUPERMODULAR).holds
        out_of_band += any(not p[m] <= q[m] <= (1 << (k - 1)) * p[m] for m in range(1 << k))
        pointwise = [supermod_majorant_lp(p, m) for m in range(1 << k)]
        if list(q.prices) != pointwise:
            off_pointwise += 1
            example = example or {"p": p, "majorant": q, "pointwise LP minimum": pointwise}
        not_minimal += not is_minimal_majorant(p, q)
    r.equal("majorants not supermodular", not_super, 0)
    r.equal("majorants outside p <= p' <= 4p", out_of_band, 0)
    r.equal("majorants differing from the per-subset LP minimum", off_pointwise, 0)
    r.equal("majorants with a smaller supermodular majorant below them", not_minimal, 0)
    if example:
        r.witness("first per-subset LP mismatch", example)
    sym_bad = 0
    for _ in range(params["count"]):
        p = random_sym_pricing(rng, rng.randint(1, 5))
        q = supermod_majorant_sym(p)
        kk = p.k
        sym_bad += not check_sym(q).holds or any(
            not q.levels[m] / kk <= p.levels[m] <= q.levels[m] for m in range(kk + 1)
        )
    r.equal("symmetric majorants failing supermodularity or (1/k)p' <= p <= p'", sym_bad, 0)
    for kk in (2, 4):
        q = supermod_majorant_det(pair_partition_pricing(kk))
        r.equal(f"pair-partition p'(K), k={kk}", q[(1 << kk) - 1], F(2 ** (kk // 2)))


def _majorant_tight(r: Recorder, params: dict, ctx: dict) -> None:
    k = params["k"]
    p = pair_partition_pricing(k)
    q = supermod_majorant_det(p)
    full = (1 << k) - 1
    r.equal("p(K)", p[full], F(1))
    r.equal("p'(K)", q[full], F(2 ** (k // 2)))
    r.holds("p' equals the product of pair intersections", all(q[m] == pair_partition_product(k, m) for m in range(full + 1)))
    if k <= 4:
        r.equal("LP minimum at K", supermod_majorant_lp(p, full), F(2 ** (k // 2)))
    r.witness("majorant", q)


def _am_directions(r: Recorder, params: dict, ctx: dict) -> None:
    rng = random.Random(ctx["seed"])
    submod = missed_sub = missed_non = unconfirmed = 0
    example = None
    for _ in range(params["count"]):
        k = rng.randint(2, params["k"])
        menu = random_det_menu(rng, k, rng.randint(2, 1 << k))
        p0 = canonical_det_price(menu)
        if check_det(p0, LatticeProperty.SUBMODULAR).holds:
            submod += 1
            top = max(e.price for e in menu.entries) + 1
            hit = product_grid_oracle(menu, TieRule.TIE_FAVORABLE, uniform_axes(k, top, F(1, 2)), Check.ALLOCATION)
            if hit is not None:
                missed_sub += 1
                example = example or {"menu": menu, "violation": hit}
        else:
            hit = allocation_violation_search(p0, TieRule.TIE_FAVORABLE, menu=menu)
            if hit is None:
                missed_non += 1
                example = example or {"menu": menu, "violation": None}
                continue
            qx = buyer_choice(menu, hit.x, TieRule.TIE_FAVORABLE).chosen.alloc
            qy = buyer_choice(menu, hit.y, TieRule.TIE_FAVORABLE).chosen.alloc
            ordered = all(a <= b for a, b in zip(hit.x, hit.y))
            if not (ordered and any(a > b for a, b in zip(qx, qy))):
                unconfirmed += 1
    r.note("menus with submodular canonical pricing", submod)
    r.equal("submodular menus with an allocation grid violation", missed_sub, 0)
    r.equal("non-submodular menus where the search found nothing", missed_non, 0)
    r.equal("search witnesses failing recheck", unconfirmed, 0)
    if example:
        r.witness("miss", example)


def _canonical(r: Recorder, params: dict, ctx: dict) -> None:
    rng = random.Random(ctx["seed"])
    separate = Menu.deterministic(2, {0: 0, 1: 1, 2: 1, 3: 2})
    r.equal("p0(1/2,1/2) for separate selling at (1,1)", canonical_general_price(separate, (F(1, 2), F(1, 2))), F(1))
    disagree = infinite = 0
    example = None
    for _ in range(params["count"]):
        k = rng.randint(1, 3)
        menu = random_menu(rng, k, rng.randint(1, 4))
        g = tuple(F(rng.randint(0, 4), 4) for _ in range(k))
        a, b = primal_price(menu, g), convexified_price(menu, g)
        infinite += a is INF
        if a != b:
            disagree += 1
            example = example or {"menu": menu, "g": g, "primal": a, "convexified": b}
    r.note("probes with infinite price", infinite)
    r.equal("probes where the two formulations disagree", disagree, 0)
    det_bad = 0
    for _ in range(params["count"]):
        k = rng.randint(1, 3)
        menu = random_det_menu(rng, k, rng.randint(1, 1 << k))
        p = canonical_det_price(menu)
        det_bad += any(p[m] != canonical_general_price(menu, indicator(m, k)) for m in range(1 << k))
    r.equal("deterministic menus where p0^D differs from p0 at indicators", det_bad, 0)
    if example:
        r.witness("disagreement", example)


def _quad(r: Recorder, params: dict, ctx: dict) -> None:
    spec = EXAMPLE_SPEC
    inv = invert_pd(spec.a)
    r.equal("120 A^-1", [[120 * c for c in row] for row in inv], [[27, -15, 3], [-15, 35, -15], [3, -15, 27]])
    identity = tuple(tuple(F(int(i == j)) for j in range(3)) for i in range(3))
    r.holds("A A^-1 = I", matmul(spec.a, inv) == identity)
    screens = quad_screens(spec)
    r.holds("amon_necessary holds", screens["amon_necessary"].holds)
    sub = screens["subm_necessary"]
    r.equal("subm_necessary offending entries", [list(e) for e in sub.offending], [[1, 3, F(3, 120)]])
    r.equal("allocation drops on the v/4 grid over [0,2v]", allocation_monotone_on_grid(spec), None)
    r.equal("ultramodularity failures on the v/4 grid over [0,2v]", ultramodular_on_grid(spec), None)
    hit = pricing_submodularity_violation(spec)
    r.holds("pricing submodularity violation found", hit is not None)
    if hit is not None:
        g, h, _, _ = hit
        join = tuple(max(a, b) for a, b in zip(g, h))
        meet = tuple(min(a, b) for a, b in zip(g, h))
        inside = all(in_image_box(spec, inv, pt) for pt in (g, h, join, meet))
        lhs = pricing_value(inv, g) + pricing_value(inv, h)
        rhs = pricing_value(inv, join) + pricing_value(inv, meet)
        r.holds("violation rechecked: g, h, g|h, g&h in Q_V and p(g)+p(h) < p(g|h)+p(g&h)", inside and lhs < rhs)
        r.witness("pricing violation", {"g": g, "h": h, "p(g)+p(h)": lhs, "p(g|h)+p(g&h)": rhs})
    pw = piecewise_checks()
    for name in ("nondecreasing", "nonexpansive", "midpoint_convex", "separably_superadditive"):
        r.equal(f"two-good piecewise payoff: {name} failures", pw[name], None)
    r.holds("two-good piecewise payoff: supermodularity failure found", pw["supermodular"] is not None)
    r.witness("supermodularity failure at", pw["supermodular"])


SCENARIOS = [
    Scenario("fig1-left", "Pricing 1, 2, 4: a higher valuation pays less", "non-monotonic deterministic menu", _fig1_left),
    Scenario("fig1-right", "Pricing 1, 1, 4: supermodular, monotonic, allocation drops", "supermodular symmetric menu", _fig1_right),
    Scenario("fig1-bottom", "Pricing 3/2, 2, 3: submodular, monotonic, no grid violations", "submodular menu", _fig1_bottom),
    Scenario(
        "harmonic", "Harmonic distribution: revenue near H(k) against separate selling near 1",
        "harmonic tightness and the monotone vs allocation-monotone gap", _harmonic,
        {
            "k": Param(3, 2, 4, "goods"),
            "M": Param(1000, 10, 10**6, "scale"),
            "k_amon": Param(2, 2, 3, "goods for the allocation-monotone part"),
            "M_amon": Param(100, 10, 10**4, "scale for the allocation-monotone part"),
        },
    ),
    Scenario(
        "non-convex-p", "Non-supermodular symmetric pricing (0,1,1,M) beats H(3) times srev",
        "harmonic bound fails without supermodularity", _non_convex,
        {"M": Param(10**4, 2, 10**9, "price of the grand bundle"), "G": Param(100, 2, 1000, "cells in the u grid")},
    ),
    Scenario(
        "bound-suite", "Exact revenue inequality chain on random instances", "revenue comparison bounds",
        _bound_suite, {"count": Param(100, 1, 10**4, "instances"), "n": Param(5, 1, 5, "max atoms")}, True,
    ),
    Scenario(
        "diagonal", "Diagonal valuations: lp_rev(Ye) = k myerson(Y)", "diagonal valuation revenue",
        _diagonal, {"count": Param(50, 1, 10**4, "instances")}, True,
    ),
    Scenario(
        "motzkin-duality", "Exactly one of z-system and certificate per pair; violations replay",
        "deterministic monotonicity characterization", _motzkin,
        {"count": Param(500, 1, 10**5, "pricings"), "k": Param(4, 2, 4, "max goods"), "q": Param(6, 2, 8, "max menu size")},
        True,
    ),
    Scenario(
        "majorants", "Supermodular majorants: minimal, within factor bounds", "supermodular majorant constructions",
        _majorants, {"count": Param(200, 1, 10**4, "pricings")}, True,
    ),
    Scenario(
        "majorant-tight", "Pair-partition pricing: p'(K) = 2^(k/2)", "majorant factor tightness",
        _majorant_tight, {"k": Param(2, 2, 6, "even number of goods")},
    ),
    Scenario(
        "am-directions", "Submodular canonical pricing iff allocation monotone, both directions",
        "allocation monotonicity characterization", _am_directions,
        {"count": Param(200, 1, 10**4, "menus"), "k": Param(3, 2, 3, "max goods")}, True,
    ),
    Scenario(
        "canonical-pricing", "Canonical price: primal and convexification formulations agree",
        "canonical pricing function", _canonical, {"count": Param(100, 1, 10**4, "probes")}, True,
    ),
    Scenario(
        "quad-counterexample", "Quadratic mechanism: allocation monotone, pricing not submodular",
        "quadratic mechanisms", _quad,
    ),
]

_BY_ID = {s.id: s for s in SCENARIOS}


def list_scenarios() -> list[tuple[str, str, str]]:
    return [(s.id, s.description, s.anchor) for s in SCENARIOS]


def _resolve_params(scenario: Scenario, overrides: dict) -> dict:
    params = {name: spec.default for name, spec in scenario.params.items()}
    for name, raw in overrides.items():
        if name not in scenario.params:
            raise InputError(f"{scenario.id}: unknown parameter {name!r} (known: {', '.join(scenario.params) or 'none'})")
        spec = scenario.params[name]
        try:
            value = int(raw)
        except (TypeError, ValueError):
            raise InputError(f"{scenario.id}: parameter {name} must be an integer, got {raw!r}") from None
        if not spec.lo <= value <= spec.hi:
            raise InputError(f"{scenario.id}: parameter {name}={value} outside [{spec.lo}, {spec.hi}]")
        params[name] = value
    if scenario.id == "majorant-tight" and params["k"] % 2:
        raise InputError("majorant-tight: k must be even")
    return params


def run_scenario(
    scenario_id: str, params: Optional[dict] = None, seed: int = 0, cap: int = opt.DEFAULT_CAP
) -> Report:
    if scenario_id not in _BY_ID:
        raise InputError(f"unknown scenario {scenario_id!r}; try `repro --list`")
    scenario = _BY_ID[scenario_id]
    resolved = _resolve_params(scenario, params or {})
    report = Report(scenario_id)
    start = time.perf_counter()
    scenario.run(Recorder(report), resolved, {"seed": seed, "cap": cap})
    report.elapsed_ms = int((time.perf_counter() - start) * 1000)
    return report


# ---------------------------------------------------------------- argument handling


def _read(path: Optional[str], what: str) -> str:
    if path is None:
        raise InputError(f"missing {what} (pass a JSON file path, or - for stdin)")
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def _load(path: Optional[str], kind: type, what: str):
    obj = parse_instance(_read(path, what))
    if not isinstance(obj, kind):
        raise InputError(f"{what}: expected a {kind.__name__}, got a {type(obj).__name__}")
    return obj


def _rat_vector(text: str, flag: str) -> tuple:
    return tuple(to_rat(part.strip(), f"{flag}[{i}]") for i, part in enumerate(text.split(",")))


def _partition(text: str, k: int) -> BundlingPartition:
    blocks = []
    for b, block in enumerate(text.split("|")):
        try:
            blocks.append([int(g) for g in block.split(",")])
        except ValueError:
            raise InputError(f"--partition block {b}: expected comma-separated goods, got {block!r}") from None
    try:
        return BundlingPartition.of(k, blocks)
    except ValueError as exc:
        raise InputError(f"--partition: {exc}") from None


def _u64(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def _positive(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("cap must be positive")
    return value


def _emit(args, payload: dict) -> None:
    data = jsonable(payload)
    if args.json:
        print(json.dumps(data, separators=(",", ":")))
    else:
        print("\n".join(flatten(data)))


def _revenue_cmd(fn: Callable) -> Callable:
    def handler(args) -> int:
        result = fn(_load(args.input, ValuationDist, "--input"), args)
        _emit(args, {"value": result.value, "witness": result.witness})
        return EXIT_OK

    return handler


def _mode(args) -> opt.Mode:
    return opt.Mode.SUPERMODULAR if args.supermodular else opt.Mode.GENERAL


def _cmd_eval(args) -> int:
    menu = _load(args.menu or (args.input if args.x else None), Menu, "--menu")
    rule = TieRule(args.rule)
    if args.x:
        choice = buyer_choice(menu, _rat_vector(args.x, "--x"), rule)
        _emit(args, {"alloc": choice.chosen.alloc, "payment": choice.payment, "payoff": choice.payoff,
                     "ties": [e.alloc for e in choice.tie_set]})
    else:
        dist = _load(args.input, ValuationDist, "--input")
        _emit(args, {"revenue": revenue(menu, dist, rule)})
    return EXIT_OK


def _cmd_canonical(args) -> int:
    menu = _load(args.menu or args.input, Menu, "--menu")
    if args.det:
        try:
            _emit(args, {"pricing": canonical_det_price(menu)})
        except ValueError as exc:
            raise InputError(str(exc)) from None
    else:
        if not args.g:
            raise InputError("canonical needs --g <allocation> or --det")
        g = _rat_vector(args.g, "--g")
        if len(g) != menu.k:
            raise InputError(f"--g: expected {menu.k} coordinates")
        _emit(args, {"price": canonical_general_price(menu, g)})
    return EXIT_OK


def _verdict_payload(verdict, masks: bool) -> dict:
    if verdict.holds:
        return {"holds": True}
    witness = [fmt_set(m) for m in verdict.witness] if masks else list(verdict.witness)
    return {"holds": False, "witness": witness}


def _cmd_check(args) -> int:
    obj = parse_instance(_read(args.pricing or args.input, "--pricing"))
    prop = LatticeProperty(args.property)
    if isinstance(obj, SymPricing):
        try:
            _emit(args, _verdict_payload(check_sym(obj, prop), masks=False))
        except ValueError as exc:
            raise InputError(str(exc)) from None
    elif isinstance(obj, DetPricing):
        _emit(args, _verdict_payload(check_det(obj, prop), masks=True))
    else:
        raise InputError("--pricing: expected a pricing (prices or levels)")
    return EXIT_OK


def _cmd_majorant(args) -> int:
    obj = parse_instance(_read(args.pricing or args.input, "--pricing"))
    try:
        if args.symmetric:
            if not isinstance(obj, SymPricing):
                raise InputError("--symmetric needs a levels pricing")
            _emit(args, {"majorant": supermod_majorant_sym(obj)})
        else:
            if not isinstance(obj, DetPricing):
                raise InputError("--pricing: expected a deterministic pricing (prices)")
            _emit(args, {"majorant": supermod_majorant_det(obj)})
    except ValueError as exc:
        raise InputError(str(exc)) from None
    return EXIT_OK


def _cmd_monotone(args) -> int:
    p = _load(args.pricing or args.input, DetPricing, "--pricing")
    try:
        verdict = check_det_monotonic(p, Scope(args.scope))
    except ValueError as exc:
        raise InputError(str(exc)) from None
    payload: dict = {"status": verdict.status}
    if verdict.violation is not None:
        v = verdict.violation
        payload["pair"] = [fmt_set(v.pair[0]), fmt_set(v.pair[1])]
        payload["z"] = {i + 1: c for i, c in v.z.items()}
        payload["x"], payload["y"] = v.x, v.y
        payload["payments"] = replay_violation(p, v)
    else:
        payload["certificates"] = [
            {"pair": [fmt_set(c.pair[0]), fmt_set(c.pair[1])],
             "weak": {fmt_set(m): w for m, w in c.weak.items()},
             "strict": {fmt_set(m): w for m, w in c.strict.items()}}
            for c in verdict.certificates
        ]
    _emit(args, payload)
    return EXIT_OK


def _cmd_quad(args) -> int:
    spec = parse_quad(_read(args.spec or args.input, "--spec"))
    screens = quad_screens(spec)
    hit = pricing_submodularity_violation(spec)
    _emit(args, {
        "inverse": invert_pd(spec.a),
        "amon_necessary": screens["amon_necessary"],
        "subm_necessary": screens["subm_necessary"],
        "grid_allocation_drop": allocation_monotone_on_grid(spec),
        "grid_ultramodular_failure": ultramodular_on_grid(spec),
        "pricing_submodularity_violation": None if hit is None else {"g": hit[0], "h": hit[1], "lhs": hit[2], "rhs": hit[3]},
    })
    return EXIT_OK


def _cmd_repro(args) -> int:
    if args.list:
        for sid, description, anchor in list_scenarios():
            print(f"{sid}\t{description}\t{anchor}")
        return EXIT_OK
    if args.all == bool(args.id):
        raise InputError("repro needs exactly one of <id> or --all")
    overrides = {}
    for item in args.param or []:
        name, sep, value = item.partition("=")
        if not sep:
            raise InputError(f"--param expects name=value, got {item!r}")
        overrides[name] = value
    ids = [s.id for s in SCENARIOS] if args.all else [args.id]
    if args.all and overrides:
        raise InputError("--param applies to a single scenario")
    reports = [run_scenario(sid, overrides, args.seed, args.cap) for sid in ids]
    if args.json:
        out = [r.to_json() for r in reports]
        print(json.dumps(out if args.all else out[0], separators=(",", ":")))
    else:
        print("\n".join(r.to_text() for r in reports))
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAILED


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", help="JSON instance file, or - for stdin")
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--seed", type=_u64, default=0, help="seed for randomized suites")
    common.add_argument("--cap", type=_positive, default=opt.DEFAULT_CAP, help="enumeration cap")

    parser = argparse.ArgumentParser(prog="mechlab", description="Exact revenue and monotonicity computations.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, handler: Callable, help_text: str) -> argparse.ArgumentParser:
        sp = sub.add_parser(name, parents=[common], help=help_text)
        sp.set_defaults(handler=handler)
        return sp

    add("rev", _revenue_cmd(lambda d, a: opt.lp_rev(d)), "optimal revenue over all mechanisms (exact LP)")
    add("srev", _revenue_cmd(lambda d, a: opt.srev(d)), "separate selling revenue")
    add("brev", _revenue_cmd(lambda d, a: opt.brev(d)), "grand bundle revenue")
    add("symsrev", _revenue_cmd(lambda d, a: opt.symsrev(d)), "one common price per good")
    sp = add("prev", _revenue_cmd(lambda d, a: opt.partition_rev(d, _partition(a.partition, d.k))), "partition bundling revenue")
    sp.add_argument("--partition", required=True, help='blocks of 1-based goods, e.g. "1|2,3"')
    for name, fn in (("drev", opt.drev), ("symdrev", opt.symdrev)):
        sp = add(name, _revenue_cmd(lambda d, a, fn=fn: fn(d, _mode(a), a.cap)), f"{name} by exact enumeration")
        sp.add_argument("--supermodular", action="store_true")
    for name, fn in (("monrev", opt.monrev_relaxed), ("amonrev", opt.amonrev_relaxed)):
        sp = add(name, _revenue_cmd(lambda d, a, fn=fn: fn(d, augment=not a.no_augment)), f"{name} relaxation on the atoms")
        sp.add_argument("--no-augment", action="store_true", help="skip the diagonal points")
    sp = add("eval", _cmd_eval, "buyer choice at a valuation, or menu revenue on --input")
    sp.add_argument("--menu")
    sp.add_argument("--x", help='valuation, e.g. "1,23/10"')
    sp.add_argument("--rule", choices=[r.value for r in TieRule], default=TieRule.SELLER_FAVORABLE.value)
    sp = add("canonical", _cmd_canonical, "canonical price of an allocation")
    sp.add_argument("--menu")
    group = sp.add_mutually_exclusive_group()
    group.add_argument("--g", help='allocation, e.g. "1/2,1/2"')
    group.add_argument("--det", action="store_true", help="canonical set pricing of a deterministic menu")
    sp = add("check", _cmd_check, "lattice property of a pricing")
    sp.add_argument("--pricing")
    sp.add_argument("--property", required=True, choices=[p.value for p in LatticeProperty])
    sp = add("majorant", _cmd_majorant, "recursive (minimal) supermodular majorant")
    sp.add_argument("--pricing")
    sp.add_argument("--symmetric", action="store_true")
    sp = add("monotone", _cmd_monotone, "payment monotonicity of a deterministic pricing")
    sp.add_argument("--pricing")
    sp.add_argument("--scope", choices=[s.value for s in Scope], default=Scope.RANGE.value)
    sp = add("quad", _cmd_quad, "quadratic mechanism checks")
    sp.add_argument("--spec")
    sp = add("repro", _cmd_repro, "run a named scenario")
    sp.add_argument("id", nargs="?")
    sp.add_argument("--all", action="store_true")
    sp.add_argument("--list", action="store_true")
    sp.add_argument("--param", action="append", metavar="NAME=VALUE")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CapExceeded as exc:
        print(f"cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP


if __name__ == "__main__":
    sys.exit(main())
