"""Transpose-order sequences for row-wise parallel M-D FFTs.

A sequence is a list of ``M`` layouts starting at the identity. Stage ``k``
runs 1-D FFTs along ``layouts[k].last_axis``, so every axis must appear as the
last axis exactly once. Between stages the data is redistributed
(transposed) from one layout to the next.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations
from math import factorial
from typing import Iterator, Sequence

import numpy as np

from .exceptions import CapacityError, InvalidLayoutError, NoCatalogError
from .layout import Layout

#: Largest M for which full enumeration is allowed.
MAX_ENUMERATION_M = 5


@dataclass(frozen=True)
class TransposeSequence:
    layouts: tuple[Layout, ...]

    def __post_init__(self):
        object.__setattr__(self, "layouts", tuple(self.layouts))

    @classmethod
    def parse(cls, text: str) -> "TransposeSequence":
        """Parse ``"abc,cab,cba"`` or ``"abc->cab->cba"``."""
        parts = text.replace("->", ",").replace("→", ",").split(",")
        return cls(tuple(Layout.parse(p) for p in parts if p.strip()))

    @property
    def m(self) -> int:
        return self.layouts[0].m

    @property
    def fft_axes(self) -> tuple[int, ...]:
        return tuple(lay.last_axis for lay in self.layouts)

    def hops(self, include_final_restore: bool = False):
        """Consecutive ``(from, to)`` layout pairs."""
        pairs = list(zip(self.layouts[:-1], self.layouts[1:]))
        if include_final_restore:
            pairs.append((self.layouts[-1], self.restore_layout()))
        return pairs

    def restore_layout(self) -> Layout:
        """Layout in which the output is back in natural ``(k_1, ..., k_M)`` order."""
        return Layout.identity(self.m)

    def __str__(self):
        return "->".join(str(lay) for lay in self.layouts)


@dataclass
class OrderCatalog:
    m: int
    best: list[TransposeSequence] = field(default_factory=list)


_CATALOG = {
    3: [
        "abc,acb,bca",
        "abc,acb,cba",
        "abc,cba,cab",
        "abc,cab,cba",
    ],
    4: [
        "abcd,abdc,dcba,dcab",
        "abcd,abdc,dcab,dcba",
        "abcd,abdc,cdab,cdba",
        "abcd,abdc,cdba,cdab",
    ],
    5: [
        "abcde,abced,abedc,cedba,cedab",
        "abcde,abced,abedc,ecdba,ecdab",
        "abcde,abced,abedc,cdeba,cdeab",
        "abcde,abced,abedc,cdeab,cdeba",
    ],
}


def count_orders(m: int) -> int:
    """Number of valid transpose sequences, ``((m - 1)!) ** m``."""
    if m < 2:
        raise ValueError(f"m must be >= 2, got {m}")
    return factorial(m - 1) ** m


def validate_sequence(seq, m: int | None = None) -> list[str]:
    """Return a list of violations; an empty list means the sequence is valid.

    ``seq`` may be a :class:`TransposeSequence` or any sequence of layouts.
    ``m`` fixes the expected dimension count (defaults to the first layout's).
    """
    layouts = tuple(seq.layouts if isinstance(seq, TransposeSequence) else seq)
    problems = []
    if not layouts:
        return ["empty sequence"]
    if m is None:
        m = layouts[0].m
    if any(lay.m != m for lay in layouts):
        problems.append(f"layouts must all have {m} axes")
        return problems
    if len(layouts) != m:
        problems.append(f"wrong length: expected {m} layouts, got {len(layouts)}")
    if layouts[0] != Layout.identity(m):
        problems.append(f"first layout must be the identity, got {layouts[0]}")
    lasts = [str(lay)[-1] for lay in layouts]
    repeated = sorted({ch for ch in lasts if lasts.count(ch) > 1})
    if repeated:
        problems.append(
            f"final axes ({','.join(lasts)}) repeat {','.join(repr(c) for c in repeated)}"
        )
    return problems


def is_valid(seq, m: int | None = None) -> bool:
    return not validate_sequence(seq, m)


def _perms_ending_with(m: int, axis: int) -> list[tuple[int, ...]]:
    return [p for p in permutations(range(m)) if p[-1] == axis]


def enumerate_sequences(m: int) -> Iterator[TransposeSequence]:
    """Yield every valid sequence once, ordered by the concatenated layout strings."""
    if m < 2:
        raise ValueError(f"m must be >= 2, got {m}")
    if m > MAX_ENUMERATION_M:
        raise CapacityError(
            f"full enumeration for m={m} has {count_orders(m):,} sequences; "
            "use sample_sequences instead"
        )
    all_perms = list(permutations(range(m)))  # lexicographic
    first = Layout.identity(m)

    def extend(prefix: list[Layout], used: frozenset):
        if len(prefix) == m:
            yield TransposeSequence(tuple(prefix))
            return
        for p in all_perms:
            if p[-1] not in used:
                prefix.append(Layout(p))
                yield from extend(prefix, used | {p[-1]})
                prefix.pop()

    yield from extend([first], frozenset({first.last_axis}))


def sequence_index_array(m: int) -> np.ndarray:
    """All valid sequences as an ``(count, m)`` array of layout ids.

    Layout ids index ``itertools.permutations(range(m))`` in lexicographic
    order, so rows come out in the same order as :func:`enumerate_sequences`.
    """
    if m > MAX_ENUMERATION_M:
        raise CapacityError(f"m={m} is too large for full enumeration")
    perms = list(permutations(range(m)))
    last = np.array([p[-1] for p in perms])
    dtype = np.int16 if len(perms) < 2**15 else np.int32
    rows = np.zeros((1, 1), dtype=dtype)  # identity has id 0
    used = np.zeros((1, m), dtype=bool)
    used[0, m - 1] = True
    for _ in range(m - 1):
        # candidate[i, j]: may row i be extended by layout j
        ok = ~used[:, last]
        ri, lj = np.nonzero(ok)
        rows = np.concatenate([rows[ri], lj[:, None].astype(dtype)], axis=1)
        used = used[ri].copy()
        used[np.arange(len(lj)), last[lj]] = True
    return rows


def sample_sequences(m: int, count: int, rng: np.random.Generator) -> list[TransposeSequence]:
    """Draw ``count`` sequences uniformly at random (with replacement).

    A sequence is fixed by the order in which the remaining axes become last
    and by an independent arrangement of the other axes in each layout, so
    drawing those pieces uniformly gives a uniform sequence.
    """
    if m < 2:
        raise ValueError(f"m must be >= 2, got {m}")
    out = []
    for _ in range(count):
        rest = list(rng.permutation(m - 1))  # order of last axes after axis m-1
        layouts = [Layout.identity(m)]
        for axis in rest:
            others = [a for a in range(m) if a != axis]
            head = [others[i] for i in rng.permutation(m - 1)]
            layouts.append(Layout(tuple(head) + (int(axis),)))
        out.append(TransposeSequence(tuple(layouts)))
    return out


def best_orders(m: int) -> OrderCatalog:
    """Known minimum-communication sequences for cubic data."""
    try:
        texts = _CATALOG[m]
    except KeyError:
        raise NoCatalogError(f"no catalog of best orders for m={m}") from None
    return OrderCatalog(m, [TransposeSequence.parse(t) for t in texts])


def parse_sequence(text: str, m: int | None = None) -> TransposeSequence:
    """Parse and validate; raises :class:`InvalidLayoutError` on violations."""
    seq = TransposeSequence.parse(text)
    problems = validate_sequence(seq, m)
    if problems:
        raise InvalidLayoutError(f"invalid order {text!r}: " + "; ".join(problems))
    return seq


def as_sequence(obj) -> TransposeSequence:
    if isinstance(obj, TransposeSequence):
        return obj
    if isinstance(obj, str):
        return TransposeSequence.parse(obj)
    return TransposeSequence(tuple(l if isinstance(l, Layout) else Layout.parse(l) for l in obj))


def layouts_of(m: int) -> list[Layout]:
    """Layouts in id order used by :func:`sequence_index_array`."""
    return [Layout(p) for p in permutations(range(m))]


def sequence_from_ids(ids: Sequence[int], m: int) -> TransposeSequence:
    lays = layouts_of(m)
    return TransposeSequence(tuple(lays[int(i)] for i in ids))
