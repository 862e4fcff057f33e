"""Closed-form communication amounts of conventional decompositions.

These model slab, pencil and volumetric decompositions of ``n``-cubed
(or hypercubic) data and serve as the comparison points for the row-wise
transpose orders.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import isqrt
from typing import Sequence

from ..exceptions import MethodInapplicableError
from ..layout import Shape
from ..orders import TransposeSequence, best_orders
from .search import SEARCH_RANK_MATCHING, sequence_cost

BASELINE_METHODS = ("1D", "1.5D", "2D", "3D", "4D", "5D")


def baseline_limit(method: str, n: int) -> int:
    """Largest process count the method supports on ``n``-cubed data."""
    if method == "1D":
        return n
    if method == "1.5D":
        return _floor_pow_half(n)
    if method in ("2D", "3D", "4D", "5D"):
        return n ** int(method[0])
    raise ValueError(f"unknown method {method!r}; choose from {BASELINE_METHODS}")


def _floor_pow_half(n: int) -> int:
    """``floor(n ** 1.5)`` in integer arithmetic."""
    return isqrt(n ** 3)


def _exact_root(value: int, k: int) -> int | None:
    r = round(value ** (1.0 / k))
    for c in (r - 1, r, r + 1):
        if c >= 0 and c ** k == value:
            return c
    return None


def baseline_amount(method: str, n: int, np_: int):
    """Closed-form communication amount of a conventional decomposition.

    ``1D``, ``1.5D``, ``2D`` and ``3D`` apply to ``n**3`` data, ``4D`` and
    ``5D`` to ``n**4`` and ``n**5``. Results are exact :class:`Fraction`
    values when every root involved is exact and ``float`` otherwise.
    ``1.5D`` follows ``1D`` for ``np <= n`` and ``2D`` above it.

    Raises :class:`MethodInapplicableError` beyond the method's limit.
    """
    if n < 1 or np_ < 1:
        raise ValueError("n and np must be positive")
    limit = baseline_limit(method, n)
    if np_ > limit:
        raise MethodInapplicableError(
            f"{method} method supports at most {limit} processes for n={n}, got {np_}"
        )
    if method == "1D":
        return Fraction(n ** 3) - Fraction(n ** 3, np_)
    if method == "1.5D":
        return baseline_amount("1D" if np_ <= n else "2D", n, np_)
    if method == "2D":
        # 2N^3 - 2 np (N^2/np)^(3/2) == 2N^3 (1 - 1/sqrt(np))
        root = _exact_root(np_, 2)
        if root is not None:
            return 2 * Fraction(n ** 3) - 2 * np_ * Fraction(n ** 2, np_) * Fraction(n, root)
        return 2.0 * n ** 3 - 2.0 * np_ * (n ** 2 / np_) ** 1.5
    k = int(method[0])
    vol = n ** k
    # k N^k (N / (N^k/np)^(1/k) - 1); the edge (N^k/np)^(1/k) equals N / np^(1/k)
    root = _exact_root(np_, k)
    if root is not None:
        return k * vol * (Fraction(root) - 1)
    edge = (vol / np_) ** (1.0 / k)
    return k * vol * (n / edge - 1.0)


def baseline_methods_for(m: int) -> tuple[str, ...]:
    if m == 3:
        return ("1D", "1.5D", "2D", "3D")
    if m in (4, 5):
        return (f"{m}D",)
    raise ValueError(f"no baselines for m={m}")


@dataclass
class CompareRow:
    np: int
    ours: int
    baselines: dict[str, object]  # amount, or None when inapplicable

    def ratio(self, method: str) -> float | None:
        """Baseline amount divided by ours."""
        v = self.baselines.get(method)
        if v is None or self.ours == 0:
            return None
        return float(v) / self.ours

    def gain_percent(self, method: str) -> float | None:
        """How much larger the baseline is than ours, in percent of ours."""
        r = self.ratio(method)
        return None if r is None else (r - 1.0) * 100.0


def compare_report(n: int, m: int, np_values: Sequence[int],
                   order: TransposeSequence | None = None,
                   include_final_restore: bool = False,
                   rank_matching: str = SEARCH_RANK_MATCHING) -> list[CompareRow]:
    """Our catalog order against the closed-form baselines, one row per np.

    The default order is ``abc -> cab -> cba`` for ``m == 3`` and the first
    catalog entry otherwise. Baselines beyond their limit are ``None``.
    """
    shape = Shape.cube(n, m)
    seq = order if order is not None else best_orders(m).best[-1 if m == 3 else 0]
    methods = baseline_methods_for(m)
    rows = []
    for p in np_values:
        ours = sequence_cost(shape, seq, int(p), include_final_restore,
                             rank_matching=rank_matching)
        base = {}
        for meth in methods:
            try:
                base[meth] = baseline_amount(meth, n, int(p))
            except MethodInapplicableError:
                base[meth] = None
        rows.append(CompareRow(int(p), ours, base))
    return rows


def divisor_np_grid(shape: Shape, upto: int | None = None) -> list[int]:
    """Powers of two up to ``upto`` (default: total) that divide ``total``."""
    upto = shape.total if upto is None else upto
    out, p = [], 1
    while p <= upto and shape.total % p == 0:
        out.append(p)
        p *= 2
    return out


