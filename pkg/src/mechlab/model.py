"""Exact-rational domain types, validation, transforms and JSON serialization.

Goods are numbered 1..k in user-facing output and 0..k-1 internally.  A set of
goods is a bitmask whose lowest bit is good 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

Rat = Fraction


class InputError(ValueError):
    """Invalid instance data; the message starts with a JSON-path-like location."""


class _PlusInfinity:
    """The extended price +inf.  Greater than every rational, absorbs addition."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "INF"

    def __str__(self) -> str:
        return "inf"

    def __hash__(self) -> int:
        return hash("mechlab.inf")

    def __eq__(self, other) -> bool:
        return other is self

    def __lt__(self, other) -> bool:
        return False

    def __le__(self, other) -> bool:
        return other is self

    def __gt__(self, other) -> bool:
        return other is not self

    def __ge__(self, other) -> bool:
        return True

    def __add__(self, other):
        return self

    __radd__ = __add__

    def __reduce__(self):
        return (_PlusInfinity, ())


INF = _PlusInfinity()
ExtPrice = Union[Fraction, _PlusInfinity]


def is_inf(value) -> bool:
    return value is INF


# ---------------------------------------------------------------- rationals


def to_rat(value, path: str = "$") -> Fraction:
    """Parse a rational from a string "a", "a/b" or a decimal literal, or an int."""
    if isinstance(value, bool):
        raise InputError(f"{path}: expected a rational, got a boolean")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            raise InputError(f"{path}: {value!r} is not a rational") from None
    raise InputError(f"{path}: expected a rational string, got {type(value).__name__}")


def to_ext_price(value, path: str = "$") -> ExtPrice:
    if value is INF or value == "inf":
        return INF
    return to_rat(value, path)


def fmt_rat(value) -> str:
    if value is INF:
        return "inf"
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


# ---------------------------------------------------------------- subsets


def mask_of(goods: Iterable[int]) -> int:
    """Bitmask of a set of 1-based goods."""
    mask = 0
    for good in goods:
        mask |= 1 << (good - 1)
    return mask


def goods_of(mask: int) -> tuple[int, ...]:
    """1-based goods contained in a bitmask, ascending."""
    out = []
    good = 1
    while mask:
        if mask & 1:
            out.append(good)
        mask >>= 1
        good += 1
    return tuple(out)


def fmt_set(mask: int) -> str:
    return "{" + ",".join(str(g) for g in goods_of(mask)) + "}"


def popcount(mask: int) -> int:
    return bin(mask).count("1")


def submasks(mask: int) -> list[int]:
    """All submasks of `mask`, ascending."""
    out = []
    sub = mask
    while True:
        out.append(sub)
        if sub == 0:
            break
        sub = (sub - 1) & mask
    return out[::-1]


def indicator(mask: int, k: int) -> tuple[Fraction, ...]:
    return tuple(Fraction((mask >> i) & 1) for i in range(k))


def set_value(x: Sequence[Fraction], mask: int) -> Fraction:
    """x(A): total value of the goods in A."""
    return sum((x[i] for i in range(len(x)) if mask >> i & 1), Fraction(0))


def dot(a: Sequence[Fraction], b: Sequence[Fraction]) -> Fraction:
    return sum((u * v for u, v in zip(a, b)), Fraction(0))


# ---------------------------------------------------------------- types


Valuation = tuple  # tuple[Fraction, ...], every coordinate >= 0


@dataclass(frozen=True)
class Atom:
    x: tuple[Fraction, ...]
    p: Fraction


@dataclass(frozen=True)
class ValuationDist:
    """Finitely supported distribution of valuations.

    Zero-probability atoms are allowed: they carry incentive and monotonicity
    constraints in the optimization programs without affecting revenue.
    """

    k: int
    atoms: tuple[Atom, ...]

    def __post_init__(self):
        if not isinstance(self.k, int) or self.k < 1:
            raise InputError(f"$.k: good count must be a positive integer, got {self.k!r}")
        if not self.atoms:
            raise InputError("$.atoms: at least one atom required")
        seen: dict[tuple, int] = {}
        total = Fraction(0)
        for idx, atom in enumerate(self.atoms):
            path = f"$.atoms[{idx}]"
            if len(atom.x) != self.k:
                raise InputError(f"{path}.x: expected {self.k} coordinates, got {len(atom.x)}")
            for j, c in enumerate(atom.x):
                if c < 0:
                    raise InputError(f"{path}.x[{j}]: negative coordinate {fmt_rat(c)}")
            if atom.p < 0:
                raise InputError(f"{path}.p: negative probability {fmt_rat(atom.p)}")
            if atom.x in seen:
                raise InputError(f"{path}.x: duplicate atom (same as $.atoms[{seen[atom.x]}])")
            seen[atom.x] = idx
            total += atom.p
        if total != 1:
            raise InputError(f"$.atoms: probabilities sum to {fmt_rat(total)}")

    @classmethod
    def of(cls, k: int, pairs: Iterable[tuple[Sequence, object]]) -> "ValuationDist":
        """Build from (valuation, probability) pairs of anything `to_rat` accepts."""
        atoms = tuple(
            Atom(tuple(to_rat(c) for c in x), to_rat(p)) for x, p in pairs
        )
        return cls(k, atoms)

    @classmethod
    def uniform(cls, k: int, points: Sequence[Sequence]) -> "ValuationDist":
        share = Fraction(1, len(points))
        return cls.of(k, [(x, share) for x in points])

    @classmethod
    def merged(cls, k: int, pairs: Iterable[tuple[Sequence, Fraction]]) -> "ValuationDist":
        """Like `of`, but equal valuations are merged by adding probabilities."""
        acc: dict[tuple, Fraction] = {}
        for x, p in pairs:
            key = tuple(to_rat(c) for c in x)
            acc[key] = acc.get(key, Fraction(0)) + to_rat(p)
        return cls(k, tuple(Atom(x, p) for x, p in acc.items()))

    @property
    def points(self) -> list[tuple[Fraction, ...]]:
        return [a.x for a in self.atoms]


@dataclass(frozen=True)
class MenuEntry:
    alloc: tuple[Fraction, ...]
    price: Fraction


@dataclass(frozen=True)
class Menu:
    """Finite menu of (allocation, price) options; always contains the zero option."""

    k: int
    entries: tuple[MenuEntry, ...]

    def __post_init__(self):
        if not isinstance(self.k, int) or self.k < 1:
            raise InputError(f"$.k: good count must be a positive integer, got {self.k!r}")
        zero = tuple(Fraction(0) for _ in range(self.k))
        seen: dict[tuple, int] = {}
        has_zero = False
        for idx, entry in enumerate(self.entries):
            path = f"$.entries[{idx}]"
            if len(entry.alloc) != self.k:
                raise InputError(f"{path}.q: expected {self.k} coordinates, got {len(entry.alloc)}")
            for j, c in enumerate(entry.alloc):
                if not 0 <= c <= 1:
                    raise InputError(f"{path}.q[{j}]: allocation {fmt_rat(c)} outside [0,1]")
            if entry.price < 0:
                raise InputError(f"{path}.s: negative price {fmt_rat(entry.price)}")
            if entry.alloc in seen:
                raise InputError(f"{path}.q: allocation repeats $.entries[{seen[entry.alloc]}]")
            seen[entry.alloc] = idx
            if entry.alloc == zero:
                if entry.price != 0:
                    raise InputError(f"{path}.s: the zero allocation must cost 0")
                has_zero = True
        if not has_zero:
            raise InputError("$.entries: menu must contain the zero allocation at price 0")

    @classmethod
    def of(cls, k: int, pairs: Iterable[tuple[Sequence, object]], add_zero: bool = True) -> "Menu":
        entries = [MenuEntry(tuple(to_rat(c) for c in q), to_rat(s)) for q, s in pairs]
        zero = tuple(Fraction(0) for _ in range(k))
        if add_zero and all(e.alloc != zero for e in entries):
            entries.insert(0, MenuEntry(zero, Fraction(0)))
        return cls(k, tuple(entries))

    @classmethod
    def deterministic(cls, k: int, prices: Mapping[int, object]) -> "Menu":
        """Menu offering each bundle (bitmask) at the given price; infinite prices are omitted."""
        pairs = []
        for mask, price in sorted(prices.items()):
            price = to_ext_price(price)
            if price is INF:
                continue
            pairs.append((indicator(mask, k), price))
        return cls.of(k, pairs)

    def is_deterministic(self) -> bool:
        return all(c in (0, 1) for e in self.entries for c in e.alloc)


def alloc_mask(alloc: Sequence[Fraction]) -> int:
    """Bitmask of a 0/1 allocation."""
    mask = 0
    for i, c in enumerate(alloc):
        if c == 1:
            mask |= 1 << i
        elif c != 0:
            raise ValueError(f"allocation {tuple(fmt_rat(v) for v in alloc)} is not deterministic")
    return mask


@dataclass(frozen=True)
class DetPricing:
    """Price for every subset of goods, indexed by bitmask; prices may be INF."""

    k: int
    prices: tuple

    def __post_init__(self):
        if not isinstance(self.k, int) or self.k < 1:
            raise InputError(f"$.k: good count must be a positive integer, got {self.k!r}")
        if len(self.prices) != 1 << self.k:
            raise InputError(f"$.prices: expected {1 << self.k} subsets, got {len(self.prices)}")
        for mask, price in enumerate(self.prices):
            if price is not INF and (not isinstance(price, Fraction) or price < 0):
                raise InputError(f'$.prices["{mask}"]: price must be a rational >= 0 or "inf"')
        if self.prices[0] != 0:
            raise InputError('$.prices["0"]: the empty set must cost 0')

    @classmethod
    def of(cls, k: int, prices: Mapping[int, object] | Sequence) -> "DetPricing":
        if isinstance(prices, Mapping):
            values = [prices.get(m, prices.get(str(m))) for m in range(1 << k)]
            if values[0] is None:
                values[0] = 0
            for m, v in enumerate(values):
                if v is None:
                    raise InputError(f'$.prices["{m}"]: missing subset')
        else:
            values = list(prices)
        return cls(k, tuple(to_ext_price(v) for v in values))

    @classmethod
    def from_goods(cls, k: int, prices: Mapping[Iterable[int], object]) -> "DetPricing":
        """Build from a mapping keyed by collections of 1-based goods."""
        return cls.of(k, {mask_of(goods): v for goods, v in prices.items()})

    def __getitem__(self, mask: int) -> ExtPrice:
        return self.prices[mask]

    @property
    def full(self) -> int:
        return (1 << self.k) - 1

    def finite_masks(self) -> list[int]:
        return [m for m, p in enumerate(self.prices) if p is not INF]

    def menu(self) -> Menu:
        return Menu.deterministic(self.k, dict(enumerate(self.prices)))


@dataclass(frozen=True)
class SymPricing:
    """Symmetric deterministic pricing: levels[m] is the price of any m-good bundle."""

    levels: tuple

    def __post_init__(self):
        if len(self.levels) < 2:
            raise InputError("$.levels: need prices for 0..k with k >= 1")
        if self.levels[0] != 0:
            raise InputError("$.levels[0]: the empty bundle must cost 0")
        for m, price in enumerate(self.levels):
            if price is not INF and (not isinstance(price, Fraction) or price < 0):
                raise InputError(f"$.levels[{m}]: price must be a rational >= 0 or inf")

    @classmethod
    def of(cls, levels: Sequence) -> "SymPricing":
        return cls(tuple(to_ext_price(v) for v in levels))

    @property
    def k(self) -> int:
        return len(self.levels) - 1

    def det(self) -> DetPricing:
        return DetPricing(self.k, tuple(self.levels[popcount(m)] for m in range(1 << self.k)))


@dataclass(frozen=True)
class BundlingPartition:
    """Partition of goods into bundles, each a bitmask."""

    k: int
    blocks: tuple[int, ...]

    def __post_init__(self):
        covered = 0
        for idx, block in enumerate(self.blocks):
            if block == 0:
                raise InputError(f"$.blocks[{idx}]: empty block")
            if block & covered:
                raise InputError(f"$.blocks[{idx}]: overlaps an earlier block")
            covered |= block
        if covered != (1 << self.k) - 1:
            raise InputError("$.blocks: blocks do not cover every good")

    @classmethod
    def of(cls, k: int, blocks: Iterable[Iterable[int]]) -> "BundlingPartition":
        return cls(k, tuple(mask_of(b) for b in blocks))


def all_partitions(k: int) -> list[BundlingPartition]:
    """Every bundling partition of k goods (set partitions), in a fixed order."""

    def rec(goods: list[int]) -> list[list[int]]:
        if not goods:
            return [[]]
        first, rest = goods[0], goods[1:]
        out = []
        for sub in submasks(sum(1 << g for g in rest)):
            block = (1 << first) | sub
            remaining = [g for g in rest if not sub >> g & 1]
            for tail in rec(remaining):
                out.append([block] + tail)
        return out

    return [BundlingPartition(k, tuple(blocks)) for blocks in rec(list(range(k)))]


# ---------------------------------------------------------------- transforms


def dominance_pairs(points: Sequence[Sequence[Fraction]]) -> list[tuple[int, int]]:
    """Ordered index pairs (i, j), i != j, with points[i] <= points[j] coordinatewise."""
    if not points:
        return []
    k = len(points[0])
    for idx, pt in enumerate(points):
        if len(pt) != k:
            raise ValueError(f"point {idx} has {len(pt)} coordinates, expected {k}")
    if len({tuple(p) for p in points}) != len(points):
        raise ValueError("points must be pairwise distinct")
    pairs = []
    for i, a in enumerate(points):
        for j, b in enumerate(points):
            if i != j and all(u <= v for u, v in zip(a, b)):
                pairs.append((i, j))
    return pairs


def marginal(dist: ValuationDist, mode: Union[int, str]) -> ValuationDist:
    """One-good pushforward: good `mode` (0-based int), "sum" or "max"."""
    if mode == "sum":
        project = lambda x: sum(x, Fraction(0))  # noqa: E731
    elif mode == "max":
        project = max
    elif isinstance(mode, int) and 0 <= mode < dist.k:
        project = lambda x: x[mode]  # noqa: E731
    else:
        raise ValueError(f"unknown marginal mode {mode!r}")
    return ValuationDist.merged(1, [((project(a.x),), a.p) for a in dist.atoms])


def block_marginal(dist: ValuationDist, block: int) -> ValuationDist:
    """Distribution of the total value of the goods in `block`."""
    return ValuationDist.merged(1, [((set_value(a.x, block),), a.p) for a in dist.atoms])


def diagonal_augment(dist: ValuationDist) -> ValuationDist:
    """Append the diagonal point max(x)*e at probability 0 for every atom x."""
    existing = {a.x for a in dist.atoms}
    extra = []
    for atom in dist.atoms:
        diag = tuple(max(atom.x) for _ in range(dist.k))
        if diag not in existing:
            existing.add(diag)
            extra.append(Atom(diag, Fraction(0)))
    if not extra:
        return dist
    return ValuationDist(dist.k, dist.atoms + tuple(extra))


def augment_points(dist: ValuationDist, points: Iterable[Sequence]) -> ValuationDist:
    """Append arbitrary zero-probability points, skipping ones already present."""
    existing = {a.x for a in dist.atoms}
    extra = []
    for pt in points:
        pt = tuple(to_rat(c) for c in pt)
        if pt not in existing:
            existing.add(pt)
            extra.append(Atom(pt, Fraction(0)))
    return ValuationDist(dist.k, dist.atoms + tuple(extra))


def positive_part(dist: ValuationDist) -> ValuationDist:
    """Drop zero-probability atoms."""
    kept = tuple(a for a in dist.atoms if a.p > 0)
    if len(kept) == len(dist.atoms):
        return dist
    return ValuationDist(dist.k, kept)


# ---------------------------------------------------------------- JSON


def to_json(obj) -> dict:
    if isinstance(obj, ValuationDist):
        return {
            "k": obj.k,
            "atoms": [{"x": [fmt_rat(c) for c in a.x], "p": fmt_rat(a.p)} for a in obj.atoms],
        }
    if isinstance(obj, Menu):
        return {
            "k": obj.k,
            "entries": [{"q": [fmt_rat(c) for c in e.alloc], "s": fmt_rat(e.price)} for e in obj.entries],
        }
    if isinstance(obj, DetPricing):
        return {"k": obj.k, "prices": {str(m): fmt_rat(p) for m, p in enumerate(obj.prices)}}
    if isinstance(obj, SymPricing):
        return {"levels": [fmt_rat(p) for p in obj.levels]}
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def serialize(obj) -> str:
    return json.dumps(to_json(obj), separators=(",", ":"))


def _expect(cond: bool, message: str):
    if not cond:
        raise InputError(message)


def _rat_list(raw, path: str) -> tuple[Fraction, ...]:
    _expect(isinstance(raw, list), f"{path}: expected a list")
    return tuple(to_rat(c, f"{path}[{j}]") for j, c in enumerate(raw))


def _check_k(data: dict) -> int:
    _expect("k" in data, "$.k: missing")
    k = data["k"]
    _expect(isinstance(k, int) and not isinstance(k, bool) and k >= 1, "$.k: must be a positive integer")
    return k


def from_json(data) -> Union[ValuationDist, Menu, DetPricing, SymPricing]:
    _expect(isinstance(data, dict), "$: expected a JSON object")
    if "atoms" in data:
        k = _check_k(data)
        raw = data["atoms"]
        _expect(isinstance(raw, list), "$.atoms: expected a list")
        atoms = []
        for idx, item in enumerate(raw):
            path = f"$.atoms[{idx}]"
            _expect(isinstance(item, dict) and "x" in item and "p" in item, f"{path}: expected {{\"x\":…,\"p\":…}}")
            atoms.append(Atom(_rat_list(item["x"], f"{path}.x"), to_rat(item["p"], f"{path}.p")))
        return ValuationDist(k, tuple(atoms))
    if "entries" in data:
        k = _check_k(data)
        raw = data["entries"]
        _expect(isinstance(raw, list), "$.entries: expected a list")
        entries = []
        for idx, item in enumerate(raw):
            path = f"$.entries[{idx}]"
            _expect(isinstance(item, dict) and "q" in item and "s" in item, f"{path}: expected {{\"q\":…,\"s\":…}}")
            entries.append(MenuEntry(_rat_list(item["q"], f"{path}.q"), to_rat(item["s"], f"{path}.s")))
        return Menu(k, tuple(entries))
    if "prices" in data:
        k = _check_k(data)
        raw = data["prices"]
        _expect(isinstance(raw, dict), "$.prices: expected an object keyed by bitmask")
        prices: list = [None] * (1 << k)
        for key, value in raw.items():
            path = f'$.prices["{key}"]'
            _expect(key.isdigit() and int(key) < (1 << k), f"{path}: not a bitmask below 2^{k}")
            prices[int(key)] = to_ext_price(value, path)
        for mask, value in enumerate(prices):
            _expect(value is not None, f'$.prices["{mask}"]: missing subset')
        return DetPricing(k, tuple(prices))
    if "levels" in data:
        raw = data["levels"]
        _expect(isinstance(raw, list), "$.levels: expected a list")
        return SymPricing(tuple(to_ext_price(v, f"$.levels[{m}]") for m, v in enumerate(raw)))
    raise InputError("$: unrecognized instance (expected atoms, entries, prices or levels)")


def parse_instance(text: Union[str, bytes]) -> Union[ValuationDist, Menu, DetPricing, SymPricing]:
    """Parse a JSON instance: a distribution, a menu or a deterministic pricing."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"$: invalid JSON ({exc.msg} at line {exc.lineno} column {exc.colno})") from None
    return from_json(data)
