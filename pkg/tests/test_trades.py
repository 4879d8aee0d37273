import random
from itertools import combinations

import pytest
from hypothesis import given, settings, strategies as st

from balanced_trades.pairings import flat_to_sets, iter_flat_pairings
from balanced_trades.errors import BudgetExceeded, InvalidDefiningSets, TradeError
from balanced_trades.trades import (
    DefiningSets,
    Trade,
    TradeParams,
    balanced_block_sum,
    block_discrepancy,
    block_sum,
    canonical_balanced_sets,
    construct_trade,
    mirror_balanced_sets,
    relabel_trade,
    validate_defining_sets,
    verify_trade,
)

LEMMA2_T3 = DefiningSets(
    v=16,
    pairs=(((1, 4), (2, 3)), ((5, 8), (6, 7)), ((9, 12), (10, 11)), ((13, 16), (14, 15))),
)


def test_validate_lemma2_sets():
    assert validate_defining_sets(LEMMA2_T3, TradeParams(16, 8, 3)).ok


def test_validate_reports_shared_element():
    sets = DefiningSets(v=4, pairs=(((1, 2), (2, 3)),))
    verdict = validate_defining_sets(sets, TradeParams(4, 2, 0))
    assert not verdict.ok
    props = {(x.prop, x.indices) for x in verdict.violations}
    assert ("disjointness", (1, 2)) in props


def test_validate_reports_unequal_pair():
    sets = DefiningSets(v=4, pairs=(((1,), (2, 3)),))
    verdict = validate_defining_sets(sets, TradeParams(4, 1, 0))
    assert [x.prop for x in verdict.violations] == ["pair-size"]
    assert verdict.violations[0].indices == (1, 2)


def test_validate_collects_every_violation():
    sets = DefiningSets(v=5, pairs=(((1, 2), (2,)), ((7,), (3,))), tail=(3,))
    verdict = validate_defining_sets(sets, TradeParams(5, 3, 1))
    props = sorted({x.prop for x in verdict.violations})
    assert props == ["disjointness", "pair-size", "range", "size-sum"]


def test_construct_rejects_invalid_sets():
    with pytest.raises(InvalidDefiningSets) as info:
        construct_trade(DefiningSets(v=6, pairs=(((1, 2), (2, 3)), ((4,), (5,)))))
    assert not info.value.verdict.ok


def test_construct_t3_contains_example_blocks():
    trade = construct_trade(LEMMA2_T3)
    assert (1, 4, 6, 7, 9, 12, 14, 15) in trade.side1
    assert (2, 3, 5, 8, 10, 11, 13, 16) in trade.side1
    assert trade.volume == 8 and len(trade.side2) == 8


def test_construct_t1_exact_order():
    # flip subsets 00, 11 -> side 1; 01, 10 -> side 2
    trade = construct_trade(canonical_balanced_sets(8))
    assert trade.side1 == ((1, 4, 5, 8), (2, 3, 6, 7))
    assert trade.side2 == ((2, 3, 5, 8), (1, 4, 6, 7))
    assert trade.params == TradeParams(8, 4, 1)


def test_construct_t0_single_pair_with_tail():
    trade = construct_trade(DefiningSets(v=3, pairs=(((1,), (2,)),), tail=(3,)))
    assert trade.side1 == ((1, 3),) and trade.side2 == ((2, 3),)
    assert verify_trade(trade)


def test_verify_t3_trade():
    assert verify_trade(construct_trade(LEMMA2_T3))


def test_verify_detects_exchanged_points():
    trade = construct_trade(LEMMA2_T3)
    side1 = [list(b) for b in trade.side1]
    i = next(n for n, b in enumerate(side1) if 6 in b and 5 not in b)
    j = next(n for n, b in enumerate(side1) if 5 in b and 6 not in b)
    side1[i][side1[i].index(6)] = 5
    side1[j][side1[j].index(5)] = 6
    broken = Trade(tuple(map(tuple, side1)), trade.side2, trade.params)
    assert not verify_trade(broken)


def test_verify_size_mismatch_and_overlap():
    params = TradeParams(4, 2, 1)
    assert not verify_trade(Trade(((1, 2),), ((3, 4), (1, 3)), params))
    assert not verify_trade(Trade(((1, 2),), ((1, 2),), params))
    assert not verify_trade(Trade(((1, 2, 3),), ((2, 4),), params))


def test_verify_refuses_over_cap():
    trade = construct_trade(canonical_balanced_sets(20))
    with pytest.raises(BudgetExceeded):
        verify_trade(trade, max_subsets=100)


def test_verify_rejects_out_of_range_points():
    with pytest.raises(TradeError):
        verify_trade(Trade(((1, 9),), ((2, 3),), TradeParams(4, 2, 0)))


def test_duplicate_blocks_rejected():
    with pytest.raises(TradeError):
        Trade(((1, 2), (2, 1)), ((3, 4), (1, 3)), TradeParams(4, 2, 1))


def test_params_invariant():
    with pytest.raises(TradeError):
        TradeParams(4, 4, 1)


def test_block_sum():
    assert block_sum((1, 4, 6, 7, 9, 12, 14, 15)) == 68
    assert block_sum((1, 2, 3)) == 6


def test_block_sums_t2_all_39():
    trade = construct_trade(canonical_balanced_sets(12))
    assert {block_sum(b) for b in trade.side1 + trade.side2} == {39} == {12 * 13 // 4}
    assert balanced_block_sum(2) == 39


def test_block_discrepancy():
    assert block_discrepancy([(1, 2), (3, 4)]) == 4
    trade = construct_trade(canonical_balanced_sets(16))
    assert block_discrepancy(trade.side1) == block_discrepancy(trade.side2) == 0
    with pytest.raises(TradeError):
        block_discrepancy([])


def test_block_discrepancy_after_example_swaps():
    # the example's six swaps turn B1, B2 into these two blocks
    b1, b2 = (2, 5, 6, 8, 10, 13, 14, 16), (1, 3, 4, 7, 9, 11, 12, 15)
    assert block_discrepancy([b1, b2]) == 12


def test_canonical_sets():
    assert canonical_balanced_sets(16).pairs == (
        ((1, 4), (2, 3)),
        ((5, 8), (6, 7)),
        ((9, 12), (10, 11)),
        ((13, 16), (14, 15)),
    )
    assert canonical_balanced_sets(4).pairs == (((1, 4), (2, 3)),)
    assert [sum(a) for a, b in canonical_balanced_sets(12).pairs] == [5, 13, 21]
    assert all(sum(a) == sum(b) for a, b in canonical_balanced_sets(12).pairs)
    with pytest.raises(TradeError):
        canonical_balanced_sets(10)


def test_mirror_sets():
    sets = mirror_balanced_sets(16)
    assert sets.sets[:4] == [(1, 16), (2, 15), (3, 14), (4, 13)]
    assert validate_defining_sets(sets, TradeParams(16, 8, 3)).ok
    with pytest.raises(TradeError):
        mirror_balanced_sets(6)


@pytest.mark.parametrize("v", [4, 8, 12, 16, 20])
def test_mirror_trade_balanced(v):
    trade = construct_trade(mirror_balanced_sets(v))
    # every set is {i, v+1-i}; each block takes v/4 of them
    assert {block_sum(b) for b in trade.side1 + trade.side2} == {v * (v + 1) // 4}
    assert verify_trade(trade)


def test_mirror_v8_block_sum_is_18():
    trade = construct_trade(mirror_balanced_sets(8))
    assert {block_sum(b) for b in trade.side1 + trade.side2} == {18}


def test_json_round_trip():
    trade = construct_trade(LEMMA2_T3)
    assert Trade.from_dict(trade.to_dict()) == trade
    assert DefiningSets.from_dict(LEMMA2_T3.to_dict()) == LEMMA2_T3
    with pytest.raises(TradeError):
        DefiningSets.from_dict({"v": 4, "t": 3, "pairs": [[[1, 4], [2, 3]]], "tail": []})


def _random_defining_sets(rng, v, t):
    """Random valid defining sets with t+1 pairs on at most v points."""
    n_pairs = t + 1
    sizes = [rng.randint(1, 2) for _ in range(n_pairs)]
    need = 2 * sum(sizes)
    if need > v:
        sizes = [1] * n_pairs
        need = 2 * n_pairs
    tail_size = rng.randint(0, min(2, v - need))
    pts = rng.sample(range(1, v + 1), need + tail_size)
    pairs, pos = [], 0
    for s in sizes:
        pairs.append((tuple(pts[pos : pos + s]), tuple(pts[pos + s : pos + 2 * s])))
        pos += 2 * s
    return DefiningSets(v=v, pairs=tuple(pairs), tail=tuple(pts[pos:]))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 4), st.integers(0, 10**6))
def test_every_valid_construction_is_a_trade(t, seed):
    rng = random.Random(seed)
    v = rng.randint(2 * (t + 1) + 1, 20)
    sets = _random_defining_sets(rng, v, t)
    if sets.k >= v:
        return
    trade = construct_trade(sets)
    assert trade.volume == len(trade.side2) == 2**t
    assert not set(trade.side1) & set(trade.side2)
    assert all(len(b) == sets.k for b in trade.side1 + trade.side2)
    assert verify_trade(trade)


_PAIRINGS = {v: list(iter_flat_pairings(v)) for v in (8, 12, 16)}


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([8, 12, 16]), st.integers(0, 10**6))
def test_equal_pair_sums_force_equal_block_sums(v, seed):
    flats = _PAIRINGS[v]
    sets = flat_to_sets(flats[seed % len(flats)], v)
    trade = construct_trade(sets)
    expected = sum(sum(a) for a, _ in sets.pairs)
    sums = {block_sum(b) for b in trade.side1 + trade.side2}
    assert sums == {expected} == {v * (v + 1) // 4}
    assert block_discrepancy(trade.side1) == 0


def test_block_discrepancy_zero_iff_equal_sums():
    assert block_discrepancy([(1, 4), (2, 3)]) == 0
    assert block_discrepancy([(1, 4), (2, 4)]) != 0


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([8, 12, 16]), st.randoms(use_true_random=False))
def test_verify_is_relabeling_invariant(v, rng):
    trade = construct_trade(canonical_balanced_sets(v))
    labels = list(range(1, v + 1))
    shuffled = labels[:]
    rng.shuffle(shuffled)
    assert verify_trade(relabel_trade(trade, dict(zip(labels, shuffled))))


@pytest.mark.parametrize("v", [8, 12, 16])
def test_single_point_mutation_breaks_trade(v):
    rng = random.Random(v)
    trade = construct_trade(canonical_balanced_sets(v))
    for _ in range(25):
        side = [list(b) for b in trade.side1]
        n = rng.randrange(len(side))
        old = rng.choice(side[n])
        new = rng.choice([x for x in range(1, v + 1) if x not in side[n]])
        side[n][side[n].index(old)] = new
        mutated = Trade(tuple(map(tuple, side)), trade.side2, trade.params)
        assert not verify_trade(mutated)


def test_verify_matches_direct_count_for_small_trade():
    # independent count over t-subsets, written out longhand
    trade = construct_trade(canonical_balanced_sets(8))
    for u in combinations(range(1, 9), 1):
        c1 = sum(set(u) <= set(b) for b in trade.side1)
        c2 = sum(set(u) <= set(b) for b in trade.side2)
        assert c1 == c2
