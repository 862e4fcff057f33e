"""Sequential 1-D FFT kernels and the direct M-D DFT used as a reference.

All transforms are forward and unnormalized:
``X[k] = sum_j x[j] * exp(-2 pi i j k / N)``.
"""
from __future__ import annotations

from functools import lru_cache
from typing import Sequence

import numpy as np


def _as_buffer(values, name: str = "input") -> np.ndarray:
    buf = np.asarray(values, dtype=np.complex128)
    if buf.size == 0:
        raise ValueError(f"{name} is empty")
    if not np.all(np.isfinite(buf)):
        raise ValueError(f"{name} contains NaN or Inf")
    return buf


@lru_cache(maxsize=None)
def twiddles(n: int) -> np.ndarray:
    """Read-only table of ``exp(-2 pi i k / n)`` for ``k`` in ``[0, n)``."""
    if n < 1:
        raise ValueError("twiddle length must be positive")
    k = np.arange(n)
    table = np.exp(-2j * np.pi * k / n)
    table[0] = 1.0
    table.setflags(write=False)
    return table


def dft_1d(values) -> np.ndarray:
    """Direct O(N^2) evaluation of the DFT along the last axis.

    Exponents are reduced modulo ``N`` before the table lookup so no phase
    is ever computed from a large product.
    """
    x = _as_buffer(values)
    n = x.shape[-1]
    jk = np.outer(np.arange(n), np.arange(n)) % n
    return x @ twiddles(n)[jk]


def _is_pow2(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


@lru_cache(maxsize=None)
def _bit_reverse(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    rev = np.zeros(n, dtype=np.intp)
    for i in range(n):
        rev[i] = int(format(i, f"0{bits}b")[::-1], 2) if bits else 0
    rev.setflags(write=False)
    return rev


def fft_1d(values) -> np.ndarray:
    """FFT along the last axis.

    Iterative radix-2 decimation in time for power-of-two lengths; other
    lengths fall back to :func:`dft_1d`. Leading axes are batched.
    """
    x = _as_buffer(values)
    n = x.shape[-1]
    if not _is_pow2(n):
        return dft_1d(x)
    if n == 1:
        return x.copy()
    out = x[..., _bit_reverse(n)].copy()
    lead = out.shape[:-1]
    w = twiddles(n)
    half = 1
    while half < n:
        span = 2 * half
        tw = w[:: n // span][:half]
        blocks = out.reshape(lead + (n // span, span))
        even = blocks[..., :half].copy()
        odd = blocks[..., half:] * tw
        blocks[..., :half] = even + odd
        blocks[..., half:] = even - odd
        half = span
    return out


def ifft_1d_unnormalized(values) -> np.ndarray:
    """Conjugate transform (no ``1/N`` factor); for round-trip checks only."""
    return np.conj(fft_1d(np.conj(_as_buffer(values))))


def dft_md(dims: Sequence[int], values) -> np.ndarray:
    """Direct nested-sum M-D DFT over a row-major buffer.

    Each output point sums over every input point with phase
    ``sum_r j_r k_r / N_r``; no per-axis factorization is used. Returns a
    flat buffer in the same natural row-major order.
    """
    dims = tuple(int(d) for d in dims)
    x = _as_buffer(values).ravel()
    total = int(np.prod(dims))
    if x.size != total:
        raise ValueError(f"input has {x.size} values, shape {dims} needs {total}")
    grids = np.indices(dims).reshape(len(dims), total)
    # Phase in integer units of 1/lcm turn, so the table lookup is exact.
    lcm = int(np.lcm.reduce(np.asarray(dims, dtype=np.int64)))
    table = twiddles(lcm)
    out = np.empty(total, dtype=np.complex128)
    step = max(1, (1 << 22) // total)
    for k0 in range(0, total, step):
        k1 = min(total, k0 + step)
        turns = np.zeros((k1 - k0, total), dtype=np.int64)
        for r, n in enumerate(dims):
            turns += (np.outer(grids[r, k0:k1], grids[r]) % n) * (lcm // n)
        out[k0:k1] = table[turns % lcm] @ x
    return out


def dft_along_axes(dims: Sequence[int], values, fft=dft_1d) -> np.ndarray:
    """Apply a 1-D transform along every axis in turn (last axis first)."""
    a = _as_buffer(values).reshape(tuple(dims))
    for axis in range(a.ndim - 1, -1, -1):
        a = np.moveaxis(fft(np.moveaxis(a, axis, -1)), -1, axis)
    return a.ravel()


def max_relative_error(actual, expected) -> float:
    """``max |actual - expected| / max |expected|`` (absolute when expected is zero)."""
    actual = np.asarray(actual)
    expected = np.asarray(expected)
    scale = np.max(np.abs(expected)) if expected.size else 0.0
    err = np.max(np.abs(actual - expected)) if expected.size else 0.0
    return float(err / scale) if scale > 0 else float(err)
