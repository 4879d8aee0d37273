"""Balanced pairings of ``{1..v}`` into companion pairs of 2-sets, and counting bounds.

A balanced pairing splits ``{1..v}`` (``v = 4(t+1)``) into ``2(t+1)`` sets of
size two, grouped into ``t+1`` companion pairs whose two sets have equal
sums.  Pairings are counted as unordered collections of unordered companion
pairs.  That convention gives 86 at ``v = 12`` and 1990 at ``v = 16``.

Canonical form: each 2-set ascending, the set holding the smaller element
first in its pair, pairs ordered by their smallest element.  Flattened, a
canonical pairing is the tuple ``(a1, b1, c1, d1, a2, ...)`` with
``S_{2i-1} = {ai, bi}`` and ``S_{2i} = {ci, di}``.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterator, Optional

from .errors import TradeError
from .trades import DefiningSets

Flat = tuple[int, ...]


def _check_v(v: int) -> int:
    if v < 4 or v % 4:
        raise TradeError(f"v must be a positive multiple of 4, got {v}")
    return v // 4


def _walk(unused: int, prefix: list[int], sink: Callable[[Flat], None]) -> None:
    # unused: bitmask with bit x set when label x is still free
    if not unused:
        sink(tuple(prefix))
        return
    a = (unused & -unused).bit_length() - 1
    rest = unused ^ (1 << a)
    r = rest
    while r:
        lb = r & -r
        b = lb.bit_length() - 1
        r ^= lb
        s = a + b
        avail = rest ^ lb
        # companion {c, d}, c < d, c + d = s; c > a always since a is the minimum
        c_hi = (s - 1) // 2
        m = avail & ((1 << (c_hi + 1)) - 1)
        while m:
            lc = m & -m
            c = lc.bit_length() - 1
            m ^= lc
            d = s - c
            if (avail >> d) & 1:
                prefix.extend((a, b, c, d))
                _walk(avail ^ lc ^ (1 << d), prefix, sink)
                del prefix[-4:]


def _full_mask(v: int) -> int:
    return ((1 << (v + 1)) - 1) ^ 1


def iter_flat_pairings(v: int) -> Iterator[Flat]:
    """Yield canonical flattened pairings in lexicographic order.

    A generator built on an explicit stack, so ``v = 24`` streams without
    materializing the 4.2M pairings.
    """
    _check_v(v)
    stack: list[tuple[int, Flat]] = [(_full_mask(v), ())]
    while stack:
        unused, prefix = stack.pop()
        if not unused:
            yield prefix
            continue
        a = (unused & -unused).bit_length() - 1
        rest = unused ^ (1 << a)
        children = []
        r = rest
        while r:
            lb = r & -r
            b = lb.bit_length() - 1
            r ^= lb
            s = a + b
            avail = rest ^ lb
            m = avail & ((1 << ((s - 1) // 2 + 1)) - 1)
            while m:
                lc = m & -m
                c = lc.bit_length() - 1
                m ^= lc
                d = s - c
                if (avail >> d) & 1:
                    children.append((avail ^ lc ^ (1 << d), prefix + (a, b, c, d)))
        stack.extend(reversed(children))


def flat_to_sets(flat: Flat, v: int) -> DefiningSets:
    pairs = tuple(((flat[i], flat[i + 1]), (flat[i + 2], flat[i + 3])) for i in range(0, len(flat), 4))
    return DefiningSets(v=v, pairs=pairs)


def canonical_flat(sets: DefiningSets) -> Flat:
    """Canonical flattened form of a cardinality-2 pairing (any set/pair order)."""
    pairs = []
    for a, b in sets.pairs:
        if len(a) != 2 or len(b) != 2:
            raise TradeError("canonical form needs defining sets of size 2")
        pairs.append(tuple(sorted((a, b))))
    pairs.sort()
    return tuple(x for pair in pairs for s in pair for x in s)


def canonical_pairing(sets: DefiningSets) -> DefiningSets:
    return flat_to_sets(canonical_flat(sets), sets.v)


def is_balanced_pairing(sets: DefiningSets) -> bool:
    """True iff ``sets`` is a partition of ``[v]`` into balanced 2-set companion pairs."""
    if sets.tail or sets.v != 4 * len(sets.pairs):
        return False
    seen = []
    for a, b in sets.pairs:
        if len(a) != 2 or len(b) != 2 or sum(a) != sum(b):
            return False
        seen.extend(a)
        seen.extend(b)
    return sorted(seen) == list(range(1, sets.v + 1))


def _count_branch(args: tuple[int, int, int, int, int]) -> int:
    unused, a, b, c, d = args
    n = 0

    def bump(_):
        nonlocal n
        n += 1

    _walk(unused, [a, b, c, d], bump)
    return n


def _top_branches(v: int) -> list[tuple[int, int, int, int, int]]:
    # one work item per choice of element 1's partner and companion
    full = _full_mask(v)
    out = []
    rest = full ^ 2
    for b in range(2, v + 1):
        s = 1 + b
        avail = rest ^ (1 << b)
        for c in range(2, (s - 1) // 2 + 1):
            d = s - c
            if c != b and d != b and d <= v:
                out.append((avail ^ (1 << c) ^ (1 << d), 1, b, c, d))
    return out


def enumerate_balanced_pairings(
    v: int,
    visitor: Optional[Callable[[DefiningSets], None]] = None,
    *,
    workers: int = 1,
) -> int:
    """Count balanced pairings of ``[v]``, passing each one to ``visitor``.

    Pairings arrive in lexicographic order of their canonical form.  With
    ``workers > 1`` and no visitor, the search tree is split on the
    companion pair of element 1 across processes.
    """
    _check_v(v)
    if visitor is None and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return sum(pool.map(_count_branch, _top_branches(v)))
    n = 0
    for flat in iter_flat_pairings(v):
        n += 1
        if visitor is not None:
            visitor(flat_to_sets(flat, v))
    return n


def pairing_count_lower_bound(v: int) -> int:
    """``(2(t+1))! / ((t+1)! 2^(t+1))`` with ``t + 1 = v / 4``."""
    n = _check_v(v)
    return math.factorial(2 * n) // (math.factorial(n) * 2**n)


def log_partition_number_asymptotic(n: float) -> float:
    return math.pi * math.sqrt(2.0 * n / 3.0) - math.log(4.0 * math.sqrt(3.0) * n)


def partition_number_asymptotic(n: float) -> float:
    """Hardy-Ramanujan leading term ``exp(pi sqrt(2n/3)) / (4 sqrt(3) n)``."""
    if n < 1:
        raise TradeError("n must be >= 1")
    return math.exp(log_partition_number_asymptotic(n))


def _upper_terms(v: int) -> dict:
    n = _check_v(v)
    if v < 8:
        raise TradeError("the asymptotic upper bound needs v >= 8")
    s = v * (v + 1) // 2
    lam_log = -math.pi * math.sqrt(1.0 / (6.0 * s))
    lam = math.exp(lam_log)
    log_prod = sum(math.log1p(-(lam**i)) for i in range(1, s + 1))
    log_binom = math.log(math.comb(n + 2 * v - 8, 2 * v - 8))
    log_ps = log_binom + s * lam_log + log_prod
    log_tail = (v // 2) * math.log(v / 2) - math.lgamma(v // 2 + 1)
    return {
        "s": s,
        "lambda": lam,
        "log_product": log_prod,
        "log_P_s": log_ps,
        "log_p_s": log_partition_number_asymptotic(s),
        "log_upper": log_ps + log_partition_number_asymptotic(s) + log_tail,
    }


def pairing_count_upper_asymptotic(v: int) -> float:
    """Asymptotic upper estimate ``P_s * p(s) * (v/2)^(v/2) / (v/2)!``.

    ``s = v(v+1)/2`` and ``lambda = exp(-pi / sqrt(6 s))``; the product is
    accumulated in the log domain because ``lambda**s`` underflows quickly.
    """
    return math.exp(_upper_terms(v)["log_upper"])


@dataclass(frozen=True)
class CountBounds:
    v: int
    lower: int
    upper_asymptotic: float
    exact: Optional[int] = None

    def to_dict(self) -> dict:
        # integers as strings: counts outgrow 2**53 quickly
        return {
            "v": self.v,
            "exact": None if self.exact is None else str(self.exact),
            "lower": str(self.lower),
            "upper_asymptotic": self.upper_asymptotic,
        }


def count_bounds(v: int, exact: bool = False, workers: int = 1) -> CountBounds:
    return CountBounds(
        v=v,
        lower=pairing_count_lower_bound(v),
        upper_asymptotic=pairing_count_upper_asymptotic(v),
        exact=enumerate_balanced_pairings(v, workers=workers) if exact else None,
    )
