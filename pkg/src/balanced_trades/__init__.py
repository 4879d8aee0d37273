"""Balanced and swap-robust minimal trades."""
from .errors import BudgetExceeded, InvalidDefiningSets, InvalidSwapSet, TradeError
from .pairings import (
    CountBounds,
    count_bounds,
    enumerate_balanced_pairings,
    pairing_count_lower_bound,
    pairing_count_upper_asymptotic,
    partition_number_asymptotic,
)
from .robustness import (
    ConcatGuarantee,
    DiscrepancyReport,
    SearchResult,
    SwapDigraph,
    SwapSet,
    apply_swaps,
    build_concatenated,
    build_swap_digraph,
    discrepancy_lower_bounds,
    enumerate_swap_sets,
    search_optimal_pairings,
    set_discrepancy,
    worst_case_discrepancy,
)
from .trades import (
    DefiningSets,
    Trade,
    TradeParams,
    block_discrepancy,
    block_sum,
    canonical_balanced_sets,
    construct_trade,
    mirror_balanced_sets,
    validate_defining_sets,
    verify_trade,
)

__version__ = "0.1.0"
