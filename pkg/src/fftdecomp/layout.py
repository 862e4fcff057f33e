"""Row-wise mapping between M-D coordinates and 1-D indices.

Data of shape ``(N_1, ..., N_M)`` is flattened in the dimension order given
by a :class:`Layout` and the resulting 1-D index range is split into
contiguous per-rank intervals. The split point for rank ``myid`` is chosen so
that only the leading dimensions needed for ``np`` processes are divided,
which makes the degree of decomposition adapt to the process count.

Axes are written as letters: ``a`` is the first dimension, ``b`` the second,
and so on. A layout string such as ``"cab"`` lists axes from the
slowest-varying to the fastest-varying one; the fastest axis is the one that
is local to every rank and along which 1-D FFTs run.
"""
from __future__ import annotations

import string
from bisect import bisect_right
from dataclasses import dataclass
from functools import cached_property
from math import prod
from typing import Iterable, Sequence

import numpy as np

from .exceptions import (
    InvalidCoordinateError,
    InvalidLayoutError,
    UnsupportedProcessCountError,
)

AXIS_LETTERS = string.ascii_lowercase


@dataclass(frozen=True)
class Shape:
    """Per-dimension sizes of the FFT data, each point one complex number."""

    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if len(dims) < 2:
            raise ValueError(f"need at least 2 dimensions, got {len(dims)}")
        if any(d < 1 for d in dims):
            raise ValueError(f"dimension sizes must be positive, got {dims}")
        object.__setattr__(self, "dims", dims)

    @classmethod
    def cube(cls, n: int, m: int) -> "Shape":
        return cls((n,) * m)

    @classmethod
    def parse(cls, text: str) -> "Shape":
        """Parse ``"4,4,4"`` (or ``"4x4x4"``)."""
        parts = text.replace("x", ",").split(",")
        try:
            return cls(tuple(int(p) for p in parts if p.strip()))
        except ValueError as exc:
            raise ValueError(f"invalid shape {text!r}: {exc}") from None

    @property
    def m(self) -> int:
        return len(self.dims)

    @cached_property
    def total(self) -> int:
        return prod(self.dims)

    def __str__(self):
        return ",".join(map(str, self.dims))


@dataclass(frozen=True)
class Layout:
    """Storage order of the axes; ``perm[0]`` varies slowest."""

    perm: tuple[int, ...]

    def __post_init__(self):
        perm = tuple(int(p) for p in self.perm)
        if sorted(perm) != list(range(len(perm))):
            raise InvalidLayoutError(f"{perm} is not a permutation of 0..{len(perm) - 1}")
        object.__setattr__(self, "perm", perm)

    @classmethod
    def identity(cls, m: int) -> "Layout":
        return cls(tuple(range(m)))

    @classmethod
    def parse(cls, text: str) -> "Layout":
        """Build a layout from a letter string such as ``"cab"``."""
        text = text.strip()
        m = len(text)
        if m < 2:
            raise InvalidLayoutError(f"layout {text!r} needs at least two axes")
        letters = AXIS_LETTERS[:m]
        if sorted(text) != list(letters):
            raise InvalidLayoutError(
                f"layout {text!r} must use each of {letters!r} exactly once"
            )
        return cls(tuple(letters.index(ch) for ch in text))

    @property
    def m(self) -> int:
        return len(self.perm)

    @property
    def last_axis(self) -> int:
        """The fastest-varying axis, i.e. the local FFT axis."""
        return self.perm[-1]

    def __str__(self):
        return "".join(AXIS_LETTERS[p] for p in self.perm)

    def __repr__(self):
        return f"Layout({str(self)!r})"


@dataclass(frozen=True)
class RankRange:
    """Inclusive 1-D interval ``[start, end]``; empty when ``end == start - 1``."""

    start: int
    end: int

    @property
    def size(self) -> int:
        return self.end - self.start + 1

    def __contains__(self, index) -> bool:
        return self.start <= index <= self.end

    def __iter__(self):
        return iter(range(self.start, self.end + 1))


@dataclass(frozen=True)
class DecompContext:
    """A shape distributed over ``np`` ranks in a given layout."""

    shape: Shape
    layout: Layout
    np: int

    def __post_init__(self):
        _check_layout(self.shape, self.layout)
        _check_np(self.shape, self.np)

    def rank_range(self, myid: int) -> RankRange:
        return rank_range(self, myid)

    def owner_of(self, index: int) -> int:
        return owner_of(self, index)

    @cached_property
    def boundaries(self) -> np.ndarray:
        return boundaries(self.shape, self.layout, self.np)


def _check_layout(shape: Shape, layout: Layout):
    if layout.m != shape.m:
        raise InvalidLayoutError(
            f"layout {layout} has {layout.m} axes but shape has {shape.m}"
        )


def _check_np(shape: Shape, np_: int):
    if not 1 <= np_ <= shape.total:
        raise UnsupportedProcessCountError(
            f"process count {np_} outside [1, {shape.total}] for shape {shape}"
        )


def permuted_dims(shape: Shape, layout: Layout) -> tuple[int, ...]:
    """Dimension sizes listed in layout order."""
    _check_layout(shape, layout)
    return tuple(shape.dims[p] for p in layout.perm)


def _strides(dims: Sequence[int]) -> tuple[int, ...]:
    out = [1] * len(dims)
    for i in range(len(dims) - 2, -1, -1):
        out[i] = out[i + 1] * dims[i + 1]
    return tuple(out)


def linearize(shape: Shape, layout: Layout, coord: Sequence[int]) -> int:
    """Row-major index of ``coord`` (given in layout order) under ``layout``.

    >>> linearize(Shape((4, 4, 4)), Layout.parse("abc"), (1, 2, 3))
    27
    """
    dims = permuted_dims(shape, layout)
    if len(coord) != len(dims):
        raise InvalidCoordinateError(f"coordinate {tuple(coord)} has wrong length")
    index = 0
    for c, n in zip(coord, dims):
        if not 0 <= c < n:
            raise InvalidCoordinateError(
                f"coordinate {tuple(coord)} out of range for sizes {dims}"
            )
        index = index * n + int(c)
    return index


def delinearize(shape: Shape, layout: Layout, index: int) -> tuple[int, ...]:
    """Inverse of :func:`linearize`; returns the coordinate in layout order."""
    dims = permuted_dims(shape, layout)
    if not 0 <= index < shape.total:
        raise InvalidCoordinateError(f"index {index} outside [0, {shape.total})")
    coord = []
    rest = int(index)
    for stride in _strides(dims):
        digit, rest = divmod(rest, stride)
        coord.append(digit)
    return tuple(coord)


def to_natural(layout: Layout, coord: Sequence[int]) -> tuple[int, ...]:
    """Reorder a layout-order coordinate to natural ``(a, b, c, ...)`` order."""
    out = [0] * layout.m
    for pos, axis in enumerate(layout.perm):
        out[axis] = coord[pos]
    return tuple(out)


def from_natural(layout: Layout, coord: Sequence[int]) -> tuple[int, ...]:
    return tuple(coord[axis] for axis in layout.perm)


def bracket(shape: Shape, layout: Layout, np_: int) -> int:
    """Number of leading layout dimensions split among ``np_`` ranks.

    Returns the smallest ``k`` with ``np_ <= N_1 * ... * N_k`` (sizes in layout
    order), so a prefix product equal to ``np_`` selects the lower bracket.
    """
    _check_np(shape, np_)
    acc = 1
    for k, n in enumerate(permuted_dims(shape, layout), start=1):
        acc *= n
        if np_ <= acc:
            return k
    raise AssertionError("unreachable: np <= total was checked")


def granularity(shape: Shape, layout: Layout, np_: int) -> int:
    """Points per indivisible ownership unit for ``np_`` ranks."""
    dims = permuted_dims(shape, layout)
    return prod(dims[bracket(shape, layout, np_):])


def f_md(shape: Shape, layout: Layout, np_: int, myid: int) -> int:
    """First 1-D index owned by rank ``myid`` (``myid == np_`` gives ``total``).

    Evaluates ``floor(P_k * myid / np_) * (total / P_k)`` where ``P_k`` is the
    product of the first ``k`` layout-order sizes and ``k`` is the
    :func:`bracket` containing ``np_``.
    """
    k = bracket(shape, layout, np_)
    dims = permuted_dims(shape, layout)
    head = prod(dims[:k])
    return (head * myid // np_) * (shape.total // head)


def boundaries(shape: Shape, layout: Layout, np_: int) -> np.ndarray:
    """All ``np_ + 1`` values of :func:`f_md` as an int64 array."""
    k = bracket(shape, layout, np_)
    dims = permuted_dims(shape, layout)
    head = prod(dims[:k])
    ids = np.arange(np_ + 1, dtype=np.int64)
    return (head * ids // np_) * (shape.total // head)


def rank_range(ctx: DecompContext, myid: int) -> RankRange:
    if not 0 <= myid < ctx.np:
        raise ValueError(f"myid {myid} outside [0, {ctx.np})")
    start = f_md(ctx.shape, ctx.layout, ctx.np, myid)
    end = f_md(ctx.shape, ctx.layout, ctx.np, myid + 1) - 1
    return RankRange(start, end)


def rank_corner_coords(ctx: DecompContext, myid: int):
    """Layout-order coordinates of the first and last point owned by ``myid``.

    Returns ``None`` for a rank whose range is empty.
    """
    r = rank_range(ctx, myid)
    if r.size == 0:
        return None
    return (
        delinearize(ctx.shape, ctx.layout, r.start),
        delinearize(ctx.shape, ctx.layout, r.end),
    )


def owner_of(ctx: DecompContext, index: int) -> int:
    if not 0 <= index < ctx.shape.total:
        raise InvalidCoordinateError(f"index {index} outside [0, {ctx.shape.total})")
    bounds = ctx.boundaries
    # Largest rank whose start is <= index; empty ranks share a start with
    # their successor, so this lands on the non-empty one.
    return bisect_right(bounds.tolist(), index) - 1


def owners(ctx: DecompContext, indices: np.ndarray) -> np.ndarray:
    """Vectorized :func:`owner_of`."""
    return np.searchsorted(ctx.boundaries, indices, side="right") - 1


def layout_index_grid(shape: Shape, layout: Layout) -> np.ndarray:
    """Array of shape ``shape.dims`` holding each point's index under ``layout``."""
    _check_layout(shape, layout)
    idx = np.arange(shape.total, dtype=np.int64).reshape(permuted_dims(shape, layout))
    # idx is indexed in layout order; move axes back to natural order.
    return np.transpose(idx, np.argsort(layout.perm))


def rank_ranges(ctx: DecompContext) -> list[RankRange]:
    b = ctx.boundaries.tolist()
    return [RankRange(b[r], b[r + 1] - 1) for r in range(ctx.np)]


def all_layouts(m: int) -> Iterable[Layout]:
    from itertools import permutations

    for p in permutations(range(m)):
        yield Layout(p)
