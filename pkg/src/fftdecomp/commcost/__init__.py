"""Communication amounts of row-wise transposes and closed-form baselines."""
from .baselines import (
    BASELINE_METHODS,
    CompareRow,
    baseline_amount,
    baseline_limit,
    baseline_methods_for,
    compare_report,
    divisor_np_grid,
)
from .search import (
    SEARCH_RANK_MATCHING,
    CommProfile,
    PatternReport,
    analyze_patterns,
    hop_costs,
    known_worst,
    pair_cost_matrix,
    sampled_ids,
    search_best,
    sequence_cost,
    sequence_profile,
    worker_count,
)
from .transpose import (
    RANK_MATCHINGS,
    count_below,
    matched_transpose_cost,
    overlap_matrix,
    owner_grid,
    prefer_fast,
    rank_overlaps,
    reuse_assignment,
    traffic_matrix,
    transpose_amount,
    transpose_cost,
    transpose_cost_fast,
)

__all__ = [name for name in dir() if not name.startswith("_")]
