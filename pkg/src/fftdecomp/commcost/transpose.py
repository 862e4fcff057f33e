"""Cost of one transpose between two row-wise layouts.

One unit of communication is one complex data point that changes owner.
Points that stay on the same rank are reused and cost nothing.

Two independent routes compute the cost when rank ``r`` owns block ``r``
in both layouts:

* :func:`transpose_cost` labels every point with its owner under both
  layouts and counts the points whose owner changes.
* :func:`transpose_cost_fast` never touches individual points. For each rank
  it counts lattice points whose index lies in the rank's interval under one
  layout and in the rank's interval under the other, by splitting each
  "index below X" set into at most ``M`` axis-aligned boxes.

:func:`matched_transpose_cost` drops the fixed block-to-rank binding: each
destination block goes to whichever rank already holds most of it (an
optimal assignment), which is the reuse the order search is about.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from ..layout import (
    Layout,
    Shape,
    _check_np,
    _strides,
    boundaries,
    layout_index_grid,
    permuted_dims,
)

RANK_MATCHINGS = ("identity", "optimal")

_QUERY_CHUNK = 1 << 15


def owner_grid(shape: Shape, layout: Layout, np_: int) -> np.ndarray:
    """Block (rank) id of every point, as an array in natural axis order."""
    idx = layout_index_grid(shape, layout)
    return np.searchsorted(boundaries(shape, layout, np_), idx, side="right") - 1


def transpose_cost(shape: Shape, src: Layout, dst: Layout, np_: int) -> int:
    """Points whose owner differs between ``src`` and ``dst`` (point scan)."""
    _check_np(shape, np_)
    if src == dst or np_ == 1:
        return 0
    return _brute_cached(shape, src, dst, np_)


@lru_cache(maxsize=1 << 12)
def _brute_cached(shape: Shape, src: Layout, dst: Layout, np_: int) -> int:
    return int(np.count_nonzero(owner_grid(shape, src, np_) != owner_grid(shape, dst, np_)))


def _prefix_boxes(shape: Shape, layout: Layout, x: np.ndarray):
    """Boxes whose disjoint union is ``{p : index_layout(p) < x}``.

    Returns ``(lo, hi)`` of shape ``(M, len(x), M)``: box, query, natural axis.
    Box ``k`` fixes the first ``k`` layout digits to those of ``x`` and takes
    digit ``k`` strictly below ``x``'s.
    """
    m = shape.m
    dims = permuted_dims(shape, layout)
    strides = _strides(dims)
    nq = len(x)
    digits = np.empty((m, nq), dtype=np.int64)
    digits[0] = x // strides[0]  # equals dims[0] when x == total
    for j in range(1, m):
        digits[j] = (x // strides[j]) % dims[j]
    lo = np.zeros((m, nq, m), dtype=np.int64)
    hi = np.empty((m, nq, m), dtype=np.int64)
    hi[:] = np.asarray(shape.dims, dtype=np.int64)
    for k in range(m):
        for j in range(k):
            ax = layout.perm[j]
            lo[k, :, ax] = digits[j]
            hi[k, :, ax] = digits[j] + 1
        hi[k, :, layout.perm[k]] = digits[k]
    return lo, hi


def count_below(shape: Shape, src: Layout, x, dst: Layout, y) -> np.ndarray:
    """Number of points with ``index_src < x`` and ``index_dst < y``, elementwise."""
    x = np.atleast_1d(np.asarray(x, dtype=np.int64))
    y = np.atleast_1d(np.asarray(y, dtype=np.int64))
    if x.shape != y.shape:
        raise ValueError("x and y must have the same length")
    out = np.empty(len(x), dtype=np.int64)
    for s in range(0, len(x), _QUERY_CHUNK):
        xs, ys = x[s:s + _QUERY_CHUNK], y[s:s + _QUERY_CHUNK]
        lo_a, hi_a = _prefix_boxes(shape, src, xs)
        lo_b, hi_b = _prefix_boxes(shape, dst, ys)
        lo = np.maximum(lo_a[:, None], lo_b[None, :])
        hi = np.minimum(hi_a[:, None], hi_b[None, :])
        vol = np.clip(hi - lo, 0, None).prod(axis=-1)
        out[s:s + _QUERY_CHUNK] = vol.sum(axis=(0, 1))
    return out


def rank_overlaps(shape: Shape, src: Layout, dst: Layout, np_: int) -> np.ndarray:
    """Points each rank owns under both layouts, by interval counting."""
    bs = boundaries(shape, src, np_)
    bd = boundaries(shape, dst, np_)
    xs = np.concatenate([bs[1:], bs[:-1], bs[1:], bs[:-1]])
    ys = np.concatenate([bd[1:], bd[1:], bd[:-1], bd[:-1]])
    f = count_below(shape, src, xs, dst, ys).reshape(4, np_)
    return f[0] - f[1] - f[2] + f[3]


def transpose_cost_fast(shape: Shape, src: Layout, dst: Layout, np_: int) -> int:
    """Same contract as :func:`transpose_cost`, computed by interval counting."""
    _check_np(shape, np_)
    if src == dst or np_ == 1:
        return 0
    return _fast_cached(shape, src, dst, np_)


@lru_cache(maxsize=1 << 16)
def _fast_cached(shape: Shape, src: Layout, dst: Layout, np_: int) -> int:
    return int(shape.total - rank_overlaps(shape, src, dst, np_).sum())


def prefer_fast(shape: Shape, np_: int) -> bool:
    # interval counting costs ~np * M^3 per pair, the point scan ~total
    return 4 * np_ * shape.m ** 3 < shape.total


# --------------------------------------------------------------------------
# optimal block-to-rank assignment


def overlap_matrix(shape: Shape, src: Layout, dst: Layout, np_: int):
    """Sparse ``(np, np)`` matrix of points shared by source and destination blocks."""
    a = owner_grid(shape, src, np_).ravel()
    b = owner_grid(shape, dst, np_).ravel()
    ones = np.ones(a.size, dtype=np.int64)
    return coo_matrix((ones, (a, b)), shape=(np_, np_)).tocsr()


def reuse_assignment(shape: Shape, src: Layout, dst: Layout, np_: int):
    """Assign destination blocks to source ranks so reuse is maximal.

    Returns ``(holder, reused)``: ``holder[j]`` is the source block whose
    rank takes destination block ``j``; ``reused`` is the number of points
    that stay put. The bipartite overlap graph is split into connected
    components and each is solved as a dense assignment problem; blocks left
    unmatched are paired in ascending order at zero reuse.
    """
    _check_np(shape, np_)
    return _reuse_cached(shape, src, dst, np_)


@lru_cache(maxsize=1 << 10)
def _reuse_cached(shape: Shape, src: Layout, dst: Layout, np_: int):
    if src == dst or np_ == 1:
        holder = np.arange(np_)
        holder.setflags(write=False)
        return holder, shape.total
    ov = overlap_matrix(shape, src, dst, np_).tocoo()
    rows, cols, vals = ov.row, ov.col, ov.data
    # rows are nodes 0..np-1, cols are nodes np..2np-1
    graph = coo_matrix(
        (np.ones_like(vals), (rows, cols + np_)), shape=(2 * np_, 2 * np_)
    )
    ncomp, label = connected_components(graph, directed=False)
    order = np.argsort(label[rows], kind="stable")
    rows, cols, vals = rows[order], cols[order], vals[order]
    starts = np.searchsorted(label[rows], np.arange(ncomp + 1))
    holder = np.full(np_, -1, dtype=np.int64)
    reused = 0
    for c in range(ncomp):
        lo, hi = starts[c], starts[c + 1]
        if lo == hi:
            continue
        r, k, v = rows[lo:hi], cols[lo:hi], vals[lo:hi]
        ur, ri = np.unique(r, return_inverse=True)
        uc, ci = np.unique(k, return_inverse=True)
        dense = np.zeros((len(ur), len(uc)), dtype=np.int64)
        dense[ri, ci] = v
        mr, mc = linear_sum_assignment(dense, maximize=True)
        holder[uc[mc]] = ur[mr]
        reused += int(dense[mr, mc].sum())
    free_rows = np.setdiff1d(np.arange(np_), holder[holder >= 0])
    holder[holder < 0] = free_rows
    holder.setflags(write=False)
    return holder, reused


def matched_transpose_cost(shape: Shape, src: Layout, dst: Layout, np_: int) -> int:
    """Points moved when destination blocks are assigned for maximal reuse."""
    _, reused = reuse_assignment(shape, src, dst, np_)
    return int(shape.total - reused)


def transpose_amount(shape: Shape, src: Layout, dst: Layout, np_: int,
                     rank_matching: str = "identity", method: str = "auto") -> int:
    """Dispatch to the cost route selected by ``rank_matching`` and ``method``.

    ``method`` applies to identity matching only: ``"fast"`` (interval
    counting), ``"brute"`` (point scan) or ``"auto"`` (the cheaper one).
    """
    if rank_matching == "optimal":
        return matched_transpose_cost(shape, src, dst, np_)
    if rank_matching != "identity":
        raise ValueError(f"rank_matching must be one of {RANK_MATCHINGS}, got {rank_matching!r}")
    if method == "auto":
        method = "fast" if prefer_fast(shape, np_) else "brute"
    if method == "fast":
        return transpose_cost_fast(shape, src, dst, np_)
    if method == "brute":
        return transpose_cost(shape, src, dst, np_)
    raise ValueError(f"unknown method {method!r}")


def traffic_matrix(shape: Shape, src: Layout, dst: Layout, np_: int,
                   holder: np.ndarray | None = None) -> np.ndarray:
    """``sent[i, j]``: points moving from rank ``i`` to rank ``j`` (diagonal zero).

    Ranks are source-block ids; ``holder`` maps destination blocks to them
    (identity when omitted).
    """
    a = owner_grid(shape, src, np_).ravel()
    b = owner_grid(shape, dst, np_).ravel()
    if holder is not None:
        b = np.asarray(holder)[b]
    moved = a != b
    mat = np.zeros((np_, np_), dtype=np.int64)
    np.add.at(mat, (a[moved], b[moved]), 1)
    return mat
