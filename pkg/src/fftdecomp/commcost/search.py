"""Sequence costs, pattern grouping and the order search.

Every sequence of ``M`` layouts is scored by the points moved at each hop.
Sequences with the same cost-versus-process-count profile form a pattern.

Sequence costs are sums of single-hop costs taken from a
``(M!, M!)`` pair matrix per process count. For cubic shapes, relabeling the
axes does not change a hop's cost, so ``C(L1, L2) = C(identity, tau o L2)``
with ``tau`` the inverse of ``L1``. Only the row leaving the identity is
evaluated and the rest of the matrix is gathered from it.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import permutations
from typing import Sequence

import numpy as np

from ..exceptions import CapacityError
from ..layout import Shape, _check_np
from ..orders import (
    MAX_ENUMERATION_M,
    TransposeSequence,
    as_sequence,
    best_orders,
    layouts_of,
    sample_sequences,
    sequence_from_ids,
    sequence_index_array,
)
from .transpose import RANK_MATCHINGS, transpose_amount

#: Rank matching used by the pattern analysis and order search.
SEARCH_RANK_MATCHING = "optimal"


def worker_count() -> int:
    """Worker threads for parallel sections, capped by ``FFTDECOMP_THREADS``."""
    cap = os.environ.get("FFTDECOMP_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            pass
    return n


def _check_matching(rank_matching: str):
    if rank_matching not in RANK_MATCHINGS:
        raise ValueError(f"rank_matching must be one of {RANK_MATCHINGS}, got {rank_matching!r}")


def hop_costs(shape: Shape, seq, np_: int, include_final_restore: bool = False,
              method: str = "auto", rank_matching: str = "identity") -> list[int]:
    """Points moved by each transpose of ``seq`` at ``np_`` ranks."""
    seq = as_sequence(seq)
    _check_np(shape, np_)
    _check_matching(rank_matching)
    return [
        transpose_amount(shape, a, b, np_, rank_matching, method)
        for a, b in seq.hops(include_final_restore)
    ]


def sequence_cost(shape: Shape, seq, np_: int, include_final_restore: bool = False,
                  method: str = "auto", rank_matching: str = "identity") -> int:
    """Total points moved over all transposes of ``seq``."""
    return sum(hop_costs(shape, seq, np_, include_final_restore, method, rank_matching))


@dataclass(frozen=True)
class CommProfile:
    """Communication amount per process count."""

    np_values: tuple[int, ...]
    amounts: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "np_values", tuple(int(p) for p in self.np_values))
        object.__setattr__(self, "amounts", tuple(int(a) for a in self.amounts))
        if len(self.np_values) != len(self.amounts):
            raise ValueError("np_values and amounts differ in length")

    def at(self, np_: int) -> int:
        return self.amounts[self.np_values.index(np_)]


def sequence_profile(shape: Shape, seq, np_values: Sequence[int], *,
                     include_final_restore: bool = False,
                     rank_matching: str = "identity") -> CommProfile:
    amounts = [
        sequence_cost(shape, seq, p, include_final_restore, rank_matching=rank_matching)
        for p in np_values
    ]
    return CommProfile(tuple(np_values), tuple(amounts))


# --------------------------------------------------------------------------
# pair matrices


def _is_cubic(shape: Shape) -> bool:
    return len(set(shape.dims)) == 1


@lru_cache(maxsize=None)
def _relabel_table(m: int) -> np.ndarray:
    """``table[i, j]``: id of layout ``j`` after relabeling axes by the inverse of layout ``i``."""
    perms = list(permutations(range(m)))
    index = {p: k for k, p in enumerate(perms)}
    table = np.empty((len(perms), len(perms)), dtype=np.int64)
    for i, p in enumerate(perms):
        tau = np.argsort(p)
        for j, q in enumerate(perms):
            table[i, j] = index[tuple(int(tau[a]) for a in q)]
    table.setflags(write=False)
    return table


def pair_cost_matrix(shape: Shape, np_: int, rank_matching: str = "identity") -> np.ndarray:
    """Hop cost between every ordered pair of layouts, ids as in :func:`layouts_of`."""
    _check_np(shape, np_)
    _check_matching(rank_matching)
    return _pair_cost_matrix(shape, int(np_), rank_matching)


@lru_cache(maxsize=256)
def _pair_cost_matrix(shape: Shape, np_: int, rank_matching: str) -> np.ndarray:
    lays = layouts_of(shape.m)
    n = len(lays)
    if _is_cubic(shape):
        row = np.array(
            [transpose_amount(shape, lays[0], b, np_, rank_matching) for b in lays],
            dtype=np.int64,
        )
        mat = row[_relabel_table(shape.m)]
    else:
        mat = np.zeros((n, n), dtype=np.int64)
        for i, a in enumerate(lays):
            for j, b in enumerate(lays):
                if i != j:
                    mat[i, j] = transpose_amount(shape, a, b, np_, rank_matching)
    mat.setflags(write=False)
    return mat


def _pair_matrices(shape: Shape, np_values, rank_matching: str) -> list[np.ndarray]:
    workers = min(worker_count(), len(np_values))
    if workers <= 1:
        return [pair_cost_matrix(shape, p, rank_matching) for p in np_values]
    with ThreadPoolExecutor(workers) as pool:
        return list(pool.map(lambda p: pair_cost_matrix(shape, p, rank_matching), np_values))


def _costs_for_ids(ids: np.ndarray, mat: np.ndarray, include_final_restore: bool) -> np.ndarray:
    cost = np.zeros(len(ids), dtype=np.int64)
    for k in range(ids.shape[1] - 1):
        cost += mat[ids[:, k], ids[:, k + 1]]
    if include_final_restore:
        cost += mat[ids[:, -1], 0]
    return cost


# --------------------------------------------------------------------------
# pattern analysis


@dataclass
class PatternReport:
    """Sequences grouped by communication profile.

    ``groups`` maps each profile (a tuple of amounts, one per ``np_values``
    entry) to its member sequences, possibly truncated to ``member_limit``;
    ``sizes`` holds the true member counts.
    """

    np_values: tuple[int, ...]
    groups: dict[tuple[int, ...], list[TransposeSequence]]
    sizes: dict[tuple[int, ...], int]
    mode: str = "exhaustive"
    evaluated: int = 0
    rank_matching: str = SEARCH_RANK_MATCHING

    @property
    def profiles(self) -> list[CommProfile]:
        """Distinct profiles, smallest total first."""
        keys = sorted(self.groups, key=lambda k: (sum(k), k))
        return [CommProfile(self.np_values, k) for k in keys]

    @property
    def best(self) -> CommProfile:
        """Per-np minimum over all evaluated sequences."""
        arr = np.array(list(self.groups), dtype=np.int64)
        return CommProfile(self.np_values, tuple(arr.min(axis=0)))

    @property
    def worst(self) -> CommProfile:
        arr = np.array(list(self.groups), dtype=np.int64)
        return CommProfile(self.np_values, tuple(arr.max(axis=0)))

    @property
    def extremes(self) -> tuple[CommProfile, CommProfile]:
        return self.best, self.worst

    def exact_ratio(self, np_: int) -> Fraction | None:
        """Worst over best at ``np_``; ``None`` when the best moves nothing."""
        b, w = self.best.at(np_), self.worst.at(np_)
        if b == 0:
            return Fraction(1) if w == 0 else None
        return Fraction(w, b)

    @property
    def ratios(self) -> dict[int, float]:
        out = {}
        for p in self.np_values:
            r = self.exact_ratio(p)
            out[p] = float("inf") if r is None else float(r)
        return out

    def always_best(self) -> list[TransposeSequence]:
        """Members of the profile that is minimal at every np, if there is one."""
        best = self.best.amounts
        return list(self.groups.get(best, []))


def _check_search_m(m: int, exhaustive: bool) -> str:
    if m < 2:
        raise ValueError(f"m must be >= 2, got {m}")
    if m > MAX_ENUMERATION_M:
        raise CapacityError(
            f"order search for m={m} is not supported; at most m={MAX_ENUMERATION_M}"
        )
    if m == MAX_ENUMERATION_M and not exhaustive:
        return "sampled"
    return "exhaustive"


_WORST = {
    2: "ab,ba",
    3: "abc,bca,cab",
    4: "abcd,cdab,abdc,cdba",
    5: "abcde,cdaeb,abced,cdbea,abdec",
}


def known_worst(m: int) -> TransposeSequence:
    """A sequence with the largest cost for cubic data and small ``np``.

    Up to ``np = N`` for ``m = 3`` and ``np = N**2`` for ``m = 4, 5`` it is
    the worst under both rank matchings and costs ``m - 1`` times a catalog
    order.
    """
    try:
        return TransposeSequence.parse(_WORST[m])
    except KeyError:
        raise CapacityError(f"no known worst sequence for m={m}") from None


def _ids_of(seqs, m: int) -> np.ndarray:
    index = {lay: i for i, lay in enumerate(layouts_of(m))}
    return np.array([[index[lay] for lay in as_sequence(s).layouts] for s in seqs], dtype=np.int64)


def sampled_ids(m: int, sample: int, seed: int, extra=()) -> np.ndarray:
    """Ids of ``sample`` seeded random sequences followed by ``extra`` ones."""
    rng = np.random.default_rng(seed)
    seqs = sample_sequences(m, sample, rng) + [as_sequence(s) for s in extra]
    return _ids_of(seqs, m)


def _group_keys(columns: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """Group rows by their cost columns; returns ``(first_row, label)`` per row.

    Rows are hashed to one 64-bit key first; the grouping is then checked
    against the real columns and redone exactly if two profiles collided.
    """
    n = len(columns[0])
    key = np.zeros(n, dtype=np.uint64)
    mult = np.uint64(0x9E3779B97F4A7C15)
    with np.errstate(over="ignore"):
        for col in columns:
            key = key * mult + col.astype(np.uint64) + np.uint64(1)
    _, first, label = np.unique(key, return_index=True, return_inverse=True)
    label = label.ravel()
    for col in columns:
        if np.any(col != col[first][label]):
            stacked = np.stack(columns, axis=1)
            _, first, label = np.unique(stacked, axis=0, return_index=True, return_inverse=True)
            return first, label.ravel()
    return first, label


def _evaluate(shape: Shape, np_values, ids: np.ndarray, include_final_restore: bool,
              rank_matching: str) -> list[np.ndarray]:
    mats = _pair_matrices(shape, list(np_values), rank_matching)
    return [_costs_for_ids(ids, mat, include_final_restore) for mat in mats]


def _resolve(shape: Shape, m: int | None, np_values) -> tuple[int, tuple[int, ...]]:
    if m is None:
        m = shape.m
    if m != shape.m:
        raise ValueError(f"m={m} does not match shape {shape}")
    np_values = tuple(int(p) for p in np_values)
    if not np_values:
        raise ValueError("np_values is empty")
    for p in np_values:
        _check_np(shape, p)
    return m, np_values


def analyze_patterns(shape: Shape, m: int | None, np_values: Sequence[int], *,
                     exhaustive: bool = False, sample: int = 10000, seed: int = 0,
                     include_final_restore: bool = False,
                     rank_matching: str = SEARCH_RANK_MATCHING,
                     member_limit: int | None = None) -> PatternReport:
    """Group sequences by their communication profile over ``np_values``.

    Parameters
    ----------
    shape : Shape
        Data sizes; ``m`` must equal ``shape.m`` (``None`` takes it from the shape).
    np_values : sequence of int
        Process counts forming the profile.
    exhaustive : bool
        For ``m == 5`` evaluate all 7,962,624 sequences instead of a sample.
        Smaller ``m`` is always exhaustive.
    sample, seed : int
        Sample size and seed of the sampled mode. The catalog and the known
        worst sequence are always evaluated as well.
    rank_matching : {"optimal", "identity"}
        How destination blocks are assigned to ranks at each hop.
    member_limit : int, optional
        Keep at most this many member sequences per group.

    Raises
    ------
    CapacityError
        For ``m >= 6``.
    """
    m, np_values = _resolve(shape, m, np_values)
    _check_matching(rank_matching)
    mode = _check_search_m(m, exhaustive)
    if mode == "sampled":
        ids = sampled_ids(m, sample, seed, best_orders(m).best + [known_worst(m)])
    else:
        ids = sequence_index_array(m)
    cols = _evaluate(shape, np_values, ids, include_final_restore, rank_matching)
    first, label = _group_keys(cols)
    counts = np.bincount(label, minlength=len(first))
    order = np.argsort(label, kind="stable")
    starts = np.concatenate([[0], np.cumsum(counts)])
    groups, sizes = {}, {}
    for g, row in enumerate(first):
        key = tuple(int(c[row]) for c in cols)
        members = order[starts[g]:starts[g + 1]]
        if member_limit is not None:
            members = members[:member_limit]
        groups[key] = [sequence_from_ids(ids[i], m) for i in members]
        sizes[key] = int(counts[g])
    return PatternReport(np_values, groups, sizes, mode, len(ids), rank_matching)


def search_best(shape: Shape, m: int | None, np_values: Sequence[int], *,
                exhaustive: bool = False, sample: int = 10000, seed: int = 0,
                include_final_restore: bool = False,
                rank_matching: str = SEARCH_RANK_MATCHING) -> list[TransposeSequence]:
    """Sequences whose cost is minimal at every ``np`` simultaneously.

    Minimality is relative to the evaluated set (all sequences, or the
    sample plus catalog in sampled mode). Returns an empty list when no
    sequence is best at every np at once. Results follow enumeration order
    (sampled mode: first occurrence, duplicates removed).
    """
    m, np_values = _resolve(shape, m, np_values)
    _check_matching(rank_matching)
    mode = _check_search_m(m, exhaustive)
    if mode == "sampled":
        ids = sampled_ids(m, sample, seed, best_orders(m).best + [known_worst(m)])
    else:
        ids = sequence_index_array(m)
    mask = np.ones(len(ids), dtype=bool)
    for mat in _pair_matrices(shape, list(np_values), rank_matching):
        cost = _costs_for_ids(ids, mat, include_final_restore)
        mask &= cost == cost.min()
    rows = ids[mask]
    if mode == "sampled" and len(rows):
        _, keep = np.unique(rows, axis=0, return_index=True)
        rows = rows[np.sort(keep)]
    return [sequence_from_ids(r, m) for r in rows]
