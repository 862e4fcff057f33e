"""Parallel M-D FFT over simulated ranks with a counting transport.

Each logical rank holds the points of one contiguous index block under the
current layout, in ascending index order. A transpose is carried out as an
explicit exchange: every rank packs one message per destination rank from
its local buffer and every destination rank unpacks the messages it receives.
The ledger counts every point that crosses between two different ranks.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .commcost.search import worker_count
from .commcost.transpose import RANK_MATCHINGS, reuse_assignment
from .exceptions import InfeasibleParallelismError, InvalidLayoutError
from .fftcore import _as_buffer, fft_1d
from .layout import (
    DecompContext,
    Layout,
    Shape,
    boundaries,
    layout_index_grid,
    permuted_dims,
)
from .orders import TransposeSequence, as_sequence, validate_sequence


@dataclass
class DistTensor:
    """Data distributed over ``ctx.np`` ranks under ``ctx.layout``.

    ``buffers[r]`` belongs to rank ``r`` and holds index block
    ``block_of_rank[r]``. With the default identity matching rank ``r``
    always holds block ``r``.
    """

    ctx: DecompContext
    buffers: list[np.ndarray]
    block_of_rank: np.ndarray

    @property
    def np(self) -> int:
        return self.ctx.np

    @property
    def layout(self) -> Layout:
        return self.ctx.layout

    def block_buffers(self) -> list[np.ndarray]:
        """Buffers listed in block order (ascending index ranges)."""
        out = [None] * self.np
        for r, b in enumerate(self.block_of_rank):
            out[int(b)] = self.buffers[r]
        return out

    def rank_of_block(self) -> np.ndarray:
        return np.argsort(self.block_of_rank)


@dataclass
class HopRecord:
    src: Layout
    dst: Layout
    sent: np.ndarray  # sent[i, j]: points rank i sent to rank j

    @property
    def total(self) -> int:
        return int(self.sent.sum())


@dataclass
class TrafficLedger:
    """Per-transpose traffic matrices; self-retained points are never recorded."""

    hops: list[HopRecord] = field(default_factory=list)

    def record(self, src: Layout, dst: Layout, sent: np.ndarray):
        sent = np.array(sent, dtype=np.int64)
        np.fill_diagonal(sent, 0)
        self.hops.append(HopRecord(src, dst, sent))

    @property
    def hop_totals(self) -> list[int]:
        return [h.total for h in self.hops]

    @property
    def total(self) -> int:
        return sum(self.hop_totals)


def _layout_linear(shape: Shape, layout: Layout, natural: np.ndarray) -> np.ndarray:
    """Natural row-major buffer reordered to ascending ``layout`` index."""
    return natural.reshape(shape.dims).transpose(layout.perm).ravel()


def _natural(shape: Shape, layout: Layout, linear: np.ndarray) -> np.ndarray:
    dims = permuted_dims(shape, layout)
    return linear.reshape(dims).transpose(np.argsort(layout.perm)).ravel()


def scatter(shape: Shape, layout: Layout, np_: int, values) -> DistTensor:
    """Distribute a natural-order buffer over ``np_`` ranks under ``layout``."""
    ctx = DecompContext(shape, layout, np_)
    flat = _as_buffer(values).ravel()
    if flat.size != shape.total:
        raise ValueError(f"input has {flat.size} values, shape {shape} needs {shape.total}")
    lin = _layout_linear(shape, layout, flat)
    b = ctx.boundaries
    buffers = [lin[b[r]:b[r + 1]].copy() for r in range(np_)]
    return DistTensor(ctx, buffers, np.arange(np_))


def gather(t: DistTensor) -> np.ndarray:
    """Collect all ranks back into one natural row-major buffer."""
    lin = np.concatenate(t.block_buffers())
    return _natural(t.ctx.shape, t.layout, lin)


def _source_index_map(shape: Shape, src: Layout, dst: Layout) -> np.ndarray:
    """``m[y]``: ``src`` index of the point whose ``dst`` index is ``y``."""
    out = np.empty(shape.total, dtype=np.int64)
    out[layout_index_grid(shape, dst).ravel()] = layout_index_grid(shape, src).ravel()
    return out


def transpose(t: DistTensor, to: Layout, ledger: TrafficLedger | None = None,
              rank_matching: str = "identity") -> DistTensor:
    """Redistribute ``t`` to layout ``to`` by explicit rank-to-rank messages.

    ``rank_matching="identity"`` gives destination block ``r`` to rank ``r``;
    ``"optimal"`` gives each destination block to the rank that already holds
    most of it.
    """
    if rank_matching not in RANK_MATCHINGS:
        raise ValueError(f"rank_matching must be one of {RANK_MATCHINGS}")
    shape, np_, src = t.ctx.shape, t.np, t.layout
    ctx = DecompContext(shape, to, np_)
    bs, bd = t.ctx.boundaries, ctx.boundaries
    src_rank_of_block = t.rank_of_block()
    if rank_matching == "optimal":
        holder, _ = reuse_assignment(shape, src, to, np_)
        dst_rank_of_block = src_rank_of_block[np.asarray(holder)]
    else:
        dst_rank_of_block = np.arange(np_)
    block_of_rank = np.argsort(dst_rank_of_block)

    need = _source_index_map(shape, src, to)
    src_block = np.searchsorted(bs, need, side="right") - 1
    sent = np.zeros((np_, np_), dtype=np.int64)
    new_buffers = []
    for r in range(np_):
        j = int(block_of_rank[r])
        want = need[bd[j]:bd[j + 1]]
        owners = src_rank_of_block[src_block[bd[j]:bd[j + 1]]]
        out = np.empty(want.size, dtype=np.complex128)
        # one message per source rank, unpacked into place
        for q in np.unique(owners):
            sel = owners == q
            sblk = int(t.block_of_rank[q])
            out[sel] = t.buffers[q][want[sel] - bs[sblk]]
            if q != r:
                sent[q, r] += int(sel.sum())
        new_buffers.append(out)
    if ledger is not None:
        ledger.record(src, to, sent)
    return DistTensor(ctx, new_buffers, block_of_rank)


def check_feasible(shape: Shape, seq: TransposeSequence, np_: int):
    """Raise unless every rank owns whole 1-D FFT lines at every stage."""
    for lay in seq.layouts:
        line = shape.dims[lay.last_axis]
        if np.any(boundaries(shape, lay, np_) % line):
            raise InfeasibleParallelismError(
                f"np={np_} splits lines of length {line} along axis "
                f"{'abcdefghijklmnopqrstuvwxyz'[lay.last_axis]} in layout {lay}"
            )


def _local_fft(buf: np.ndarray, line: int) -> np.ndarray:
    if buf.size == 0:
        return buf
    return fft_1d(buf.reshape(-1, line)).ravel()


def run_parallel_fft(shape: Shape, seq, np_: int, values, restore_output: bool = False,
                     rank_matching: str = "identity", workers: int | None = None):
    """Run the transpose-based parallel FFT of ``values`` on ``np_`` simulated ranks.

    Parameters
    ----------
    shape : Shape
    seq : TransposeSequence or str
        Transpose order; stage ``k`` transforms along ``seq.layouts[k].last_axis``.
    np_ : int
        Number of ranks.
    values : array_like
        Input in natural row-major order.
    restore_output : bool
        Add a final transpose back to the identity layout (recorded in the ledger).
    rank_matching : {"identity", "optimal"}
    workers : int, optional
        Threads for the per-rank FFT phase; defaults to :func:`worker_count`.

    Returns
    -------
    output : ndarray
        Transform in natural row-major order, whatever the final layout.
    ledger : TrafficLedger

    Raises
    ------
    InfeasibleParallelismError
        If some rank would own part of a 1-D FFT line.
    """
    seq = as_sequence(seq)
    problems = validate_sequence(seq, shape.m)
    if problems:
        raise InvalidLayoutError("; ".join(problems))
    check_feasible(shape, seq, np_)
    workers = worker_count() if workers is None else max(1, int(workers))
    ledger = TrafficLedger()
    t = scatter(shape, seq.layouts[0], np_, values)
    pool = ThreadPoolExecutor(workers) if workers > 1 and np_ > 1 else None
    try:
        for k, lay in enumerate(seq.layouts):
            if k:
                t = transpose(t, lay, ledger, rank_matching)
            line = shape.dims[lay.last_axis]
            if pool is None:
                t.buffers = [_local_fft(b, line) for b in t.buffers]
            else:
                t.buffers = list(pool.map(lambda b: _local_fft(b, line), t.buffers))
    finally:
        if pool is not None:
            pool.shutdown()
    if restore_output:
        t = transpose(t, seq.restore_layout(), ledger, rank_matching)
    return gather(t), ledger
