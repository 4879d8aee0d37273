"""Robustness of balanced pairings to popularity swaps of limited magnitude.

A swap ``(i, j)`` exchanges labels ``i`` and ``j`` with ``|i - j| <= p``;
simultaneous swaps must not share a label.  After a collection of swaps,
the total set discrepancy is the sum over companion pairs of the absolute
difference of the two set sums.

Worst-case evaluation uses ``sum_j |g_j| = max over signs e of sum_j e_j g_j``.
For a fixed sign vector the objective is linear in the relabeling.  A swap
``(x, y)`` then adds ``(y - x) * (c_x - c_y)``, where ``c_x`` is the signed
coefficient of the set holding ``x``.  So each sign vector needs one
maximum-weight matching on the band graph ``{(x, y): 0 < y - x <= p}``,
which a left-to-right DP over positions solves.  The result is exact; the
cost is exponential only in the number of companion pairs.
"""
from __future__ import annotations

import json
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from importlib import resources
from itertools import islice
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .errors import BudgetExceeded, InvalidSwapSet, TradeError
from .pairings import canonical_flat, flat_to_sets, iter_flat_pairings, is_balanced_pairing
from .trades import DefiningSets, validate_defining_sets

SUPPORTED_P = (1, 2)
DEFAULT_MAX_SIGN_VECTORS = int(os.environ.get("BALANCED_TRADES_MAX_SIGN_VECTORS", 1 << 16))
DEFAULT_MAX_PAIRINGS = int(os.environ.get("BALANCED_TRADES_MAX_PAIRINGS", 100_000))

Swap = tuple[int, int]


def _check_p(p: int) -> int:
    if p not in SUPPORTED_P:
        raise TradeError(f"swap magnitude p must be one of {SUPPORTED_P}, got {p}")
    return p


@dataclass(frozen=True)
class SwapSet:
    """Element-disjoint transpositions, each of magnitude at most ``p``."""

    swaps: tuple[Swap, ...] = ()
    p: int = 1

    def __post_init__(self):
        norm = []
        for pair in self.swaps:
            i, j = sorted(int(x) for x in pair)
            if i == j or i < 1:
                raise InvalidSwapSet(f"bad transposition {pair}")
            if j - i > self.p:
                raise InvalidSwapSet(f"({i},{j}) has magnitude {j - i} > p={self.p}")
            norm.append((i, j))
        norm.sort()
        touched = [x for s in norm for x in s]
        if len(touched) != len(set(touched)):
            raise InvalidSwapSet(f"swaps {norm} share an element")
        object.__setattr__(self, "swaps", tuple(norm))

    def __len__(self):
        return len(self.swaps)

    def __iter__(self):
        return iter(self.swaps)

    def permutation(self) -> dict[int, int]:
        perm = {}
        for i, j in self.swaps:
            perm[i] = j
            perm[j] = i
        return perm

    def to_list(self) -> list[list[int]]:
        return [list(s) for s in self.swaps]


def enumerate_swap_sets(
    v: int,
    p: int,
    visitor: Optional[Callable[[SwapSet], None]] = None,
    skip: Optional[Callable[[int, int], bool]] = None,
) -> int:
    """Visit every element-disjoint swap collection on ``[v]``, the empty one included.

    Order is lexicographic in the sorted swap lists.  ``skip(i, j)`` drops
    individual transpositions (for instance those inside one defining set).
    """
    _check_p(p)
    if v < 2:
        raise TradeError("need v >= 2")
    count = 0
    used = [False] * (v + 2)
    stack: list[Swap] = []

    def rec(start: int) -> None:
        nonlocal count
        count += 1
        if visitor is not None:
            visitor(SwapSet(tuple(stack), p))
        for i in range(start, v):
            if used[i]:
                continue
            for j in range(i + 1, min(i + p, v) + 1):
                if used[j] or (skip is not None and skip(i, j)):
                    continue
                used[i] = used[j] = True
                stack.append((i, j))
                rec(i + 1)
                stack.pop()
                used[i] = used[j] = False

    rec(1)
    return count


def _as_swapset(swaps, p: Optional[int] = None) -> SwapSet:
    if isinstance(swaps, SwapSet):
        return swaps
    swaps = [tuple(s) for s in swaps]
    if p is None:
        p = max([abs(j - i) for i, j in swaps], default=1)
    return SwapSet(tuple(swaps), p)


def apply_swaps(sets: DefiningSets, swaps) -> DefiningSets:
    """Relabel the defining sets: every ``i`` becomes ``j`` and vice versa."""
    swaps = _as_swapset(swaps)
    for i, j in swaps:
        if j > sets.v:
            raise InvalidSwapSet(f"swap ({i},{j}) outside 1..{sets.v}")
    perm = swaps.permutation()
    pairs = tuple((tuple(perm.get(x, x) for x in a), tuple(perm.get(x, x) for x in b)) for a, b in sets.pairs)
    return DefiningSets(v=sets.v, pairs=pairs, tail=tuple(perm.get(x, x) for x in sets.tail))


def set_discrepancy(sets: DefiningSets) -> int:
    """Sum over companion pairs of the absolute difference of the set sums."""
    return sum(abs(sum(b) - sum(a)) for a, b in sets.pairs)


@dataclass(frozen=True)
class DiscrepancyReport:
    value: int
    witness: SwapSet
    sets_after: DefiningSets

    def to_dict(self) -> dict:
        return {"value": self.value, "witness": self.witness.to_list(), "sets_after": self.sets_after.to_dict()}


def _sign_matrix(n_pairs: int) -> np.ndarray:
    # row s: sign of pair i is -1 iff bit i of s is set
    s = np.arange(1 << n_pairs)[:, None]
    return 1 - 2 * ((s >> np.arange(n_pairs)[None, :]) & 1)


def _coefficients(sets: DefiningSets) -> np.ndarray:
    """``c[s, x]`` for labels ``x = 0..v`` (column 0 unused), shape ``(2**n, v + 1)``."""
    n = len(sets.pairs)
    signs = _sign_matrix(n)
    c = np.zeros((1 << n, sets.v + 1), dtype=np.int64)
    for i, (a, b) in enumerate(sets.pairs):
        for x in a:
            c[:, x] = -signs[:, i]
        for x in b:
            c[:, x] = signs[:, i]
    return c


def _suffix_tables(c: np.ndarray, v: int, p: int) -> np.ndarray:
    """``best[x, mask, s]``: largest gain from swaps starting at ``x..v``.

    ``mask`` bit ``k`` marks label ``x + k`` as already taken by an earlier swap.
    """
    nm = 1 << p
    n_s = c.shape[0]
    neg = np.iinfo(np.int64).min // 4
    best = np.full((v + 2, nm, n_s), neg, dtype=np.int64)
    best[v + 1, 0] = 0
    for x in range(v, 0, -1):
        for mask in range(nm):
            if mask & 1:
                best[x, mask] = best[x + 1, mask >> 1]
                continue
            cur = best[x + 1, mask >> 1].copy()
            for d in range(1, p + 1):
                y = x + d
                if y > v or (mask >> d) & 1:
                    continue
                gain = d * (c[:, x] - c[:, y]) + best[x + 1, (mask | (1 << d)) >> 1]
                np.maximum(cur, gain, out=cur)
            best[x, mask] = cur
    return best


def _set_index(sets: DefiningSets) -> dict[int, int]:
    where = {}
    for idx, s in enumerate(sets.sets):
        for x in s:
            where[x] = idx
    return where


def _check_for_swaps(sets: DefiningSets) -> None:
    verdict = validate_defining_sets(sets)
    bad = [v for v in verdict.violations if v.prop in ("range", "disjointness")]
    if bad:
        raise TradeError("defining sets must be disjoint subsets of 1..v: " + "; ".join(map(str, bad)))


def worst_case_discrepancy(sets: DefiningSets, p: int, max_sign_vectors: Optional[int] = None) -> DiscrepancyReport:
    """Exact maximum of the total set discrepancy over all swap collections of magnitude <= p.

    The witness is the lexicographically smallest maximizing collection
    among those with no swap inside a single defining set (such swaps
    change nothing).  Raises :class:`BudgetExceeded` if the ``2**(t+1)``
    sign vectors exceed ``max_sign_vectors`` (default 65536, env
    ``BALANCED_TRADES_MAX_SIGN_VECTORS``).
    """
    _check_p(p)
    _check_for_swaps(sets)
    cap = DEFAULT_MAX_SIGN_VECTORS if max_sign_vectors is None else max_sign_vectors
    n_signs = 1 << len(sets.pairs)
    if n_signs > cap:
        raise BudgetExceeded(f"{n_signs} sign vectors exceed the cap of {cap}", n_signs, cap)
    v = sets.v
    c = _coefficients(sets)
    labels = np.arange(v + 1)
    base = c @ labels
    best = _suffix_tables(c, v, p)
    value = int(np.max(base + best[1, 0]))

    where = _set_index(sets)
    gain = np.zeros_like(base)
    chosen: list[Swap] = []
    used: set[int] = set()
    last = 0
    while int(np.max(base + gain)) != value:
        for i in range(last + 1, v):
            if i in used:
                continue
            found = False
            for j in range(i + 1, min(i + p, v) + 1):
                if j in used or (i in where and where.get(j) == where[i]):
                    continue
                g = gain + (j - i) * (c[:, i] - c[:, j])
                taken = used | {j}
                mask = sum(1 << (y - i - 1) for y in taken if i < y <= i + p)
                if int(np.max(base + g + best[i + 1, mask])) >= value:
                    chosen.append((i, j))
                    used |= {i, j}
                    gain, last, found = g, i, True
                    break
            if found:
                break
        else:  # pragma: no cover - the suffix tables guarantee a completion
            raise AssertionError("witness reconstruction failed")
    witness = SwapSet(tuple(chosen), p)
    after = apply_swaps(sets, witness)
    assert set_discrepancy(after) == value
    return DiscrepancyReport(value, witness, after)


# ---------------------------------------------------------------------------
# batch evaluation for the optimal-pairing search


def _batch_coefficients(flats: np.ndarray, v: int, signs: np.ndarray) -> np.ndarray:
    """Coefficients ``(N, S, v + 1)`` for a batch of flattened canonical pairings."""
    n, width = flats.shape
    pos = np.arange(width)
    pair_of_label = np.zeros((n, v + 1), dtype=np.int64)
    side_of_label = np.zeros((n, v + 1), dtype=np.int64)
    rows = np.arange(n)[:, None]
    pair_of_label[rows, flats] = pos // 4
    side_of_label[rows, flats] = np.where(pos % 4 < 2, -1, 1)
    # (S, N, v+1) -> (N, S, v+1)
    c = signs[:, pair_of_label].transpose(1, 0, 2) * side_of_label[:, None, :]
    return c


def _batch_worst(c: np.ndarray, v: int, p: int) -> np.ndarray:
    """Max over swap collections of the signed objective, shape ``(N, S)``."""
    nm = 1 << p
    shape = c.shape[:2]
    neg = np.iinfo(np.int64).min // 4
    labels = np.arange(v + 1)
    dp = [np.full(shape, neg, dtype=np.int64) for _ in range(nm)]
    dp[0] = c @ labels
    for x in range(1, v + 1):
        new = [np.full(shape, neg, dtype=np.int64) for _ in range(nm)]
        for mask in range(nm):
            cur = dp[mask]
            np.maximum(new[mask >> 1], cur, out=new[mask >> 1])
            if mask & 1:
                continue
            for d in range(1, p + 1):
                y = x + d
                if y > v or (mask >> d) & 1:
                    continue
                nxt = (mask | (1 << d)) >> 1
                np.maximum(new[nxt], cur + d * (c[:, :, x] - c[:, :, y]), out=new[nxt])
        dp = new
    return dp[0]


def batch_worst_case(flats: np.ndarray, v: int, p: int, ceiling: Optional[int] = None, sign_chunk: int = 16) -> np.ndarray:
    """Worst-case discrepancy for each row of ``flats`` (canonical pairings).

    Sign vectors are processed in chunks.  Once a row's running maximum is
    above ``ceiling`` it is no longer evaluated and comes back as that
    partial value (already known to exceed the ceiling).
    """
    _check_p(p)
    flats = np.asarray(flats, dtype=np.int64)
    signs = _sign_matrix(flats.shape[1] // 4)
    running = np.full(flats.shape[0], -1, dtype=np.int64)
    live = np.arange(flats.shape[0])
    for start in range(0, signs.shape[0], sign_chunk):
        if live.size == 0:
            break
        c = _batch_coefficients(flats[live], v, signs[start : start + sign_chunk])
        running[live] = np.maximum(running[live], _batch_worst(c, v, p).max(axis=1))
        if ceiling is not None:
            live = live[running[live] <= ceiling]
    return running


@dataclass
class SearchResult:
    v: int
    p: int
    value: Optional[int]
    optima: list[DefiningSets] = field(default_factory=list)
    examined: int = 0
    optimal: bool = True

    @property
    def count(self) -> int:
        return len(self.optima)

    def to_dict(self) -> dict:
        return {
            "v": self.v,
            "p": self.p,
            "value": self.value,
            "count": self.count,
            "optimal": self.optimal,
            "examined": self.examined,
            "optima": [s.to_dict() for s in self.optima],
        }


def _save_checkpoint(path: Path, result: SearchResult) -> None:
    state = {
        "v": result.v,
        "p": result.p,
        "examined": result.examined,
        "value": result.value,
        "optima": [list(canonical_flat(s)) for s in result.optima],
    }
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(state))
    os.replace(tmp, path)


def _load_checkpoint(path: Path, v: int, p: int) -> Optional[SearchResult]:
    if not path.exists():
        return None
    state = json.loads(path.read_text())
    if state.get("v") != v or state.get("p") != p:
        raise TradeError(f"checkpoint {path} belongs to v={state.get('v')}, p={state.get('p')}")
    return SearchResult(
        v=v,
        p=p,
        value=state["value"],
        optima=[flat_to_sets(tuple(f), v) for f in state["optima"]],
        examined=state["examined"],
    )


def search_optimal_pairings(
    v: int,
    p: int,
    *,
    max_pairings: Optional[int] = DEFAULT_MAX_PAIRINGS,
    batch_size: int = 4096,
    checkpoint: Optional[str | os.PathLike] = None,
    progress: Optional[Callable[[int, Optional[int], int], None]] = None,
) -> SearchResult:
    """Minimize worst-case discrepancy over all balanced pairings of ``[v]``.

    Pairings stream in canonical lexicographic order, so the optima list is
    in that order too.  A pairing is dropped as soon as its running
    worst case exceeds the incumbent.  When more than ``max_pairings``
    pairings would be needed, the result is returned with
    ``optimal=False``.  ``checkpoint`` names a JSON state file that is
    rewritten after every batch and resumed from when present.
    """
    _check_p(p)
    ckpt = Path(checkpoint) if checkpoint is not None else None
    result = (_load_checkpoint(ckpt, v, p) if ckpt else None) or SearchResult(v=v, p=p, value=None)
    stream = islice(iter_flat_pairings(v), result.examined, None)
    while True:
        want = batch_size
        if max_pairings is not None:
            want = min(want, max_pairings - result.examined)
        chunk = list(islice(stream, want)) if want > 0 else []
        if not chunk:
            if max_pairings is not None and result.examined >= max_pairings and next(stream, None) is not None:
                result.optimal = False
            break
        flats = np.array(chunk, dtype=np.int64)
        worst = batch_worst_case(flats, v, p, ceiling=result.value)
        low = int(worst.min())
        if result.value is None or low < result.value:
            result.value = low
            result.optima = []
        for row in np.flatnonzero(worst == result.value):
            result.optima.append(flat_to_sets(chunk[row], v))
        result.examined += len(chunk)
        if ckpt is not None:
            _save_checkpoint(ckpt, result)
        if progress is not None:
            progress(result.examined, result.value, result.count)
    return result


# ---------------------------------------------------------------------------
# swap digraph and lower bounds


@dataclass(frozen=True)
class SwapDigraph:
    """Vertices are the paired defining sets (1-based); arcs ``s in S_a, s+1 in S_b``."""

    n_vertices: int
    arcs: tuple[tuple[int, int], ...]

    @property
    def n_arcs(self) -> int:
        return len(self.arcs)


def build_swap_digraph(sets: DefiningSets) -> SwapDigraph:
    paired = [s for pair in sets.pairs for s in pair]
    where = {x: i for i, s in enumerate(paired, start=1) for x in s}
    arcs = []
    for s in range(1, sets.v):
        a, b = where.get(s), where.get(s + 1)
        if a is not None and b is not None and a != b:
            arcs.append((a, b))
    return SwapDigraph(len(paired), tuple(arcs))


@dataclass(frozen=True)
class LowerBounds:
    t: int
    general: Fraction
    divisible_19: Optional[Fraction]

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "general": float(self.general),
            "divisible_19": None if self.divisible_19 is None else float(self.divisible_19),
        }


def discrepancy_lower_bounds(t: int) -> LowerBounds:
    """Worst-case discrepancy lower bounds for ``v = 4(t+1)``, ``p = 1``.

    ``general = (2/3)(t + 2/3)`` always; ``(14/19)(t+1)`` only when 19 divides ``t+1``.
    """
    if t < 0:
        raise TradeError("t must be >= 0")
    general = Fraction(2, 3) * (t + Fraction(2, 3))
    sharp = Fraction(14, 19) * (t + 1) if (t + 1) % 19 == 0 else None
    return LowerBounds(t, general, sharp)


# ---------------------------------------------------------------------------
# concatenated constructions

GROUP_SIZE = {1: 24, 2: 20}
GROUP_COST = {1: 12, 2: 26}
DELTA = {
    1: {0: -2, 4: 2, 8: 4, 12: 6, 16: 6, 20: 8},
    2: {0: -4, 4: 4, 8: 8, 12: 12, 16: 18},
}


@dataclass(frozen=True)
class ConcatGuarantee:
    m: int
    m_prime: int
    delta: int
    guaranteed: int
    groups: tuple[int, ...]

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "m_prime": self.m_prime,
            "delta": self.delta,
            "guaranteed": self.guaranteed,
            "groups": list(self.groups),
        }


@lru_cache(maxsize=None)
def _pattern_table() -> dict:
    text = resources.files("balanced_trades").joinpath("data/optimal_patterns.json").read_text()
    return json.loads(text)


def cached_optimum(size: int, p: int) -> Optional[dict]:
    """Stored search result ``{"value", "count", "pattern"}`` for a group size, if any."""
    return _pattern_table().get(str(p), {}).get(str(size))


def optimal_pattern(size: int, p: int, use_cache: bool = True) -> DefiningSets:
    """Lexicographically first optimal pairing of ``[size]`` for magnitude ``p``."""
    entry = cached_optimum(size, p) if use_cache else None
    if entry is not None:
        return flat_to_sets(tuple(entry["pattern"]), size)
    result = search_optimal_pairings(size, p, max_pairings=None)
    return result.optima[0]


def shift_sets(sets: DefiningSets, offset: int, v: int) -> DefiningSets:
    pairs = tuple((tuple(x + offset for x in a), tuple(x + offset for x in b)) for a, b in sets.pairs)
    return DefiningSets(v=v, pairs=pairs, tail=tuple(x + offset for x in sets.tail))


def build_concatenated(v: int, p: int, use_cache: bool = True) -> tuple[DefiningSets, ConcatGuarantee]:
    """Balanced pairing of ``[v]`` glued from shifted optimal blocks.

    ``m`` full groups of 24 labels (``p = 1``) or 20 labels (``p = 2``) come
    first, then one remainder group of ``m'`` labels.
    """
    _check_p(p)
    if v < 12 or v % 4:
        raise TradeError(f"concatenation needs v >= 12 with v divisible by 4, got {v}")
    size = GROUP_SIZE[p]
    m = (v // 4) // (size // 4)
    rest = v - size * m
    if rest not in DELTA[p]:
        raise TradeError(f"no guarantee for remainder m'={rest} at p={p}")
    delta = DELTA[p][rest]
    groups = (size,) * m + ((rest,) if rest else ())
    pairs = []
    offset = 0
    for g in groups:
        pairs.extend(shift_sets(optimal_pattern(g, p, use_cache), offset, v).pairs)
        offset += g
    sets = DefiningSets(v=v, pairs=tuple(pairs))
    assert is_balanced_pairing(sets)
    return sets, ConcatGuarantee(m, rest, delta, GROUP_COST[p] * m + delta, groups)


def reflect_sets(sets: DefiningSets) -> DefiningSets:
    """Apply ``i -> v + 1 - i`` to every label."""
    v = sets.v
    pairs = tuple((tuple(v + 1 - x for x in a), tuple(v + 1 - x for x in b)) for a, b in sets.pairs)
    return DefiningSets(v=v, pairs=pairs, tail=tuple(v + 1 - x for x in sets.tail))


def stderr_progress(every: int = 50) -> Callable[[int, Optional[int], int], None]:
    """Progress callback that prints to stderr every ``every`` calls."""
    calls = 0

    def report(examined: int, value: Optional[int], count: int) -> None:
        nonlocal calls
        calls += 1
        if calls % every == 0:
            print(f"examined {examined} pairings; incumbent {value} ({count} optima)", file=sys.stderr, flush=True)

    return report
