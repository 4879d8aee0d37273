"""Minimal (v, k, t) trades built from defining sets.

A minimal trade is fixed by ``t + 1`` companion pairs of disjoint point sets
plus an optional unpaired tail.  Every block takes exactly one set from each
companion pair together with the tail; blocks that take the second set of an
even number of pairs form side 1, the rest form side 2.

Points are 1-indexed integers.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from itertools import combinations
from math import comb
from typing import Iterable, Sequence

from .errors import BudgetExceeded, InvalidDefiningSets, TradeError

Block = tuple[int, ...]
PointSet = tuple[int, ...]

DEFAULT_MAX_SUBSETS = int(os.environ.get("BALANCED_TRADES_MAX_SUBSETS", 10**7))


def _as_set(items: Iterable[int]) -> PointSet:
    return tuple(sorted(int(x) for x in items))


@dataclass(frozen=True)
class TradeParams:
    v: int
    k: int
    t: int

    def __post_init__(self):
        if not (0 <= self.t < self.k < self.v):
            raise TradeError(f"need 0 <= t < k < v, got v={self.v}, k={self.k}, t={self.t}")

    def to_dict(self) -> dict:
        return {"v": self.v, "k": self.k, "t": self.t}


@dataclass(frozen=True)
class DefiningSets:
    """Companion pairs ``(S1, S2); ...; (S_{2t+1}, S_{2t+2})`` plus a tail over ``[v]``.

    Sets are stored as sorted tuples.  Nothing is validated here; use
    :func:`validate_defining_sets` for the trade conditions.  Duplicate labels
    inside one set collapse (a set is a set).
    """

    v: int
    pairs: tuple[tuple[PointSet, PointSet], ...]
    tail: PointSet = ()

    def __post_init__(self):
        pairs = tuple((_as_set(set(a)), _as_set(set(b))) for a, b in self.pairs)
        object.__setattr__(self, "pairs", pairs)
        object.__setattr__(self, "tail", _as_set(set(self.tail)))
        object.__setattr__(self, "v", int(self.v))

    @property
    def t(self) -> int:
        return len(self.pairs) - 1

    @property
    def k(self) -> int:
        return sum(len(a) for a, _ in self.pairs) + len(self.tail)

    @property
    def sets(self) -> list[PointSet]:
        """All defining sets in order S1, S2, ..., S_{2t+2}, S_{2t+3}."""
        out = [s for pair in self.pairs for s in pair]
        out.append(self.tail)
        return out

    def to_dict(self) -> dict:
        return {
            "v": self.v,
            "t": self.t,
            "pairs": [[list(a), list(b)] for a, b in self.pairs],
            "tail": list(self.tail),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DefiningSets":
        try:
            pairs = tuple((tuple(a), tuple(b)) for a, b in data["pairs"])
            sets = cls(v=data["v"], pairs=pairs, tail=tuple(data.get("tail", ())))
        except (KeyError, TypeError, ValueError) as exc:
            raise TradeError(f"malformed defining-sets document: {exc}") from exc
        if "t" in data and data["t"] != sets.t:
            raise TradeError(f"'t' is {data['t']} but {len(pairs)} pairs were given")
        return sets


@dataclass(frozen=True)
class Violation:
    prop: str  # "pair-count" | "range" | "disjointness" | "pair-size" | "size-sum"
    indices: tuple[int, ...]  # 1-based defining-set indices; the tail is 2t+3
    detail: str

    def __str__(self):
        return f"{self.prop} {list(self.indices)}: {self.detail}"


@dataclass(frozen=True)
class Verdict:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok


def validate_defining_sets(sets: DefiningSets, params: TradeParams | None = None) -> Verdict:
    """Check the three trade conditions on ``sets`` against ``params``.

    Violations are collected, not raised.  Without ``params`` the point
    count and strength are taken from ``sets`` and ``k`` is not checked.
    """
    v = params.v if params else sets.v
    found: list[Violation] = []
    if params is not None and len(sets.pairs) != params.t + 1:
        found.append(Violation("pair-count", (), f"expected {params.t + 1} companion pairs, got {len(sets.pairs)}"))
    all_sets = sets.sets
    for i, s in enumerate(all_sets, start=1):
        bad = [x for x in s if not 1 <= x <= v]
        if bad:
            found.append(Violation("range", (i,), f"elements {bad} outside 1..{v}"))
    for i, j in combinations(range(len(all_sets)), 2):
        common = set(all_sets[i]) & set(all_sets[j])
        if common:
            found.append(Violation("disjointness", (i + 1, j + 1), f"share {sorted(common)}"))
    for i, (a, b) in enumerate(sets.pairs):
        if len(a) != len(b) or not a:
            found.append(
                Violation("pair-size", (2 * i + 1, 2 * i + 2), f"sizes {len(a)} and {len(b)}; need equal and >= 1")
            )
    if params is not None and sets.k != params.k:
        found.append(Violation("size-sum", (), f"odd-indexed sets plus tail have {sets.k} points, need k={params.k}"))
    return Verdict(tuple(found))


def _check_side(side: Sequence[Block], name: str) -> tuple[Block, ...]:
    blocks = tuple(_as_set(b) for b in side)
    if len(set(blocks)) != len(blocks):
        raise TradeError(f"{name} contains a repeated block")
    return blocks


@dataclass(frozen=True)
class Trade:
    side1: tuple[Block, ...]
    side2: tuple[Block, ...]
    params: TradeParams = field(compare=True)

    def __post_init__(self):
        object.__setattr__(self, "side1", _check_side(self.side1, "side1"))
        object.__setattr__(self, "side2", _check_side(self.side2, "side2"))

    @property
    def volume(self) -> int:
        return len(self.side1)

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "side1": [list(b) for b in self.side1],
            "side2": [list(b) for b in self.side2],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Trade":
        try:
            p = data["params"]
            params = TradeParams(v=p["v"], k=p["k"], t=p["t"])
            return cls(side1=tuple(map(tuple, data["side1"])), side2=tuple(map(tuple, data["side2"])), params=params)
        except (KeyError, TypeError) as exc:
            raise TradeError(f"malformed trade document: {exc}") from exc


def construct_trade(sets: DefiningSets) -> Trade:
    """Build the minimal trade of volume ``2**t`` from valid defining sets.

    Flip subsets ``F`` of the companion pairs are enumerated as binary
    counters (bit ``i`` set means pair ``i + 1`` contributes its second set);
    even ``|F|`` goes to side 1, odd to side 2.
    """
    params = TradeParams(v=sets.v, k=sets.k, t=sets.t)
    verdict = validate_defining_sets(sets, params)
    if not verdict:
        raise InvalidDefiningSets(verdict)
    n = len(sets.pairs)
    side1, side2 = [], []
    for flips in range(1 << n):
        block = list(sets.tail)
        for i, pair in enumerate(sets.pairs):
            block.extend(pair[(flips >> i) & 1])
        (side2 if flips.bit_count() & 1 else side1).append(tuple(sorted(block)))
    return Trade(tuple(side1), tuple(side2), params)


def verify_trade(trade: Trade, max_subsets: int | None = None) -> bool:
    """Brute-force check of the trade property.

    Every ``t``-subset of ``[v]`` is enumerated and its containment count is
    compared between the two sides.  Nothing about how the trade was built
    is assumed.  Raises :class:`BudgetExceeded` if ``C(v, t)`` is above
    ``max_subsets`` (default 10**7, env ``BALANCED_TRADES_MAX_SUBSETS``).
    """
    v, k, t = trade.params.v, trade.params.k, trade.params.t
    cap = DEFAULT_MAX_SUBSETS if max_subsets is None else max_subsets
    for block in trade.side1 + trade.side2:
        if block and not (1 <= block[0] and block[-1] <= v):
            raise TradeError(f"block {list(block)} has points outside 1..{v}")
    if len(trade.side1) != len(trade.side2):
        return False
    if set(trade.side1) & set(trade.side2):
        return False
    if any(len(b) != k for b in trade.side1 + trade.side2):
        return False
    n_subsets = comb(v, t)
    if n_subsets > cap:
        raise BudgetExceeded(f"C({v},{t}) = {n_subsets} t-subsets exceeds the cap of {cap}", n_subsets, cap)

    def mask(block):
        m = 0
        for x in block:
            m |= 1 << x
        return m

    masks1 = [mask(b) for b in trade.side1]
    masks2 = [mask(b) for b in trade.side2]
    for subset in combinations(range(1, v + 1), t):
        u = mask(subset)
        c1 = sum(1 for m in masks1 if m & u == u)
        c2 = sum(1 for m in masks2 if m & u == u)
        if c1 != c2:
            return False
    return True


def block_sum(block: Iterable[int]) -> int:
    return sum(block)


def block_discrepancy(side: Sequence[Iterable[int]]) -> int:
    """Largest minus smallest block sum within one side of a trade."""
    if not side:
        raise TradeError("block discrepancy of an empty side is undefined")
    sums = [block_sum(b) for b in side]
    return max(sums) - min(sums)


def _need_doubly_even(v: int) -> int:
    if v < 4 or v % 4:
        raise TradeError(f"v must be a positive multiple of 4, got {v}")
    return v // 4


def canonical_balanced_sets(v: int) -> DefiningSets:
    """Pairs ``{4i-3, 4i}, {4i-2, 4i-1}`` for ``i = 1..v/4``; empty tail."""
    n = _need_doubly_even(v)
    pairs = tuple(((4 * i - 3, 4 * i), (4 * i - 2, 4 * i - 1)) for i in range(1, n + 1))
    return DefiningSets(v=v, pairs=pairs)


def mirror_balanced_sets(v: int) -> DefiningSets:
    """Mirror-image sets ``{i, v+1-i}`` paired as ``(S_{2j-1}, S_{2j})``.

    Set ``i`` (for ``i = 1..v/2``) is ``{i, v+1-i}``.  Each set sums to
    ``v + 1``, so every pair balances and every block sums to ``v(v+1)/4``.
    """
    n = _need_doubly_even(v)
    pairs = tuple(
        ((2 * j - 1, v + 2 - 2 * j), (2 * j, v + 1 - 2 * j)) for j in range(1, n + 1)
    )
    return DefiningSets(v=v, pairs=pairs)


def balanced_block_sum(t: int) -> int:
    """Common block sum ``(t+1)(4t+5)`` of a balanced trade on ``4(t+1)`` points."""
    return (t + 1) * (4 * t + 5)


def relabel_trade(trade: Trade, perm: dict[int, int]) -> Trade:
    """Apply a point relabeling to both sides."""
    side1 = tuple(tuple(sorted(perm.get(x, x) for x in b)) for b in trade.side1)
    side2 = tuple(tuple(sorted(perm.get(x, x) for x in b)) for b in trade.side2)
    return Trade(side1, side2, trade.params)


__all__ = [
    "Block",
    "DefiningSets",
    "Trade",
    "TradeParams",
    "Verdict",
    "Violation",
    "balanced_block_sum",
    "block_discrepancy",
    "block_sum",
    "canonical_balanced_sets",
    "construct_trade",
    "mirror_balanced_sets",
    "relabel_trade",
    "validate_defining_sets",
    "verify_trade",
]
