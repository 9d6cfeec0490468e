"""Normalized Walsh-Hadamard transform and the Forrelation statistic."""
from __future__ import annotations

from functools import lru_cache

import numpy as np


class DimensionError(ValueError):
    """Raised when a vector length is not a power of two or lengths disagree."""


_RADIX = 64


@lru_cache(maxsize=None)
def _sylvester(b: int) -> np.ndarray:
    """Unnormalized +-1 Sylvester matrix of order ``b``."""
    out = np.ones((1, 1))
    while out.shape[0] < b:
        out = np.block([[out, out], [out, -out]])
    out.setflags(write=False)
    return out


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def _check_length(n: int) -> None:
    if not is_power_of_two(n):
        raise DimensionError(f"length {n} is not a power of two")


def fwht(v, *, normalized: bool = True) -> np.ndarray:
    """Apply the Sylvester-ordered Hadamard matrix along the last axis.

    With ``normalized=True`` (the default) this is the orthonormal ``H_n``,
    an involution. Leading axes are treated as a batch. The butterfly runs
    unscaled and a single ``1/sqrt(n)`` pass is applied at the end.
    """
    a = np.array(v, dtype=np.float64, order="C")
    if a.ndim == 0:
        raise DimensionError("fwht needs at least one axis")
    n = a.shape[-1]
    _check_length(n)
    shape = a.shape
    # innermost stages as one small +-1 matrix product (H_n = H_{n/b} kron H_b)
    b = min(n, _RADIX)
    if b > 1:
        a = np.matmul(a.reshape(-1, b), _sylvester(b)).reshape(shape)
    h = b
    while h < n:
        view = a.reshape(-1, n // (2 * h), 2, h)
        lo = view[:, :, 0, :]
        hi = view[:, :, 1, :]
        lo += hi
        hi *= -2.0
        hi += lo
        h *= 2
    a = a.reshape(shape)
    if normalized and n > 1:
        a *= 1.0 / np.sqrt(n)
    return a


def hadamard_matrix(n: int) -> np.ndarray:
    """Dense orthonormal ``H_n``; entry ``(a, b)`` is ``(-1)^popcount(a & b) / sqrt(n)``."""
    _check_length(n)
    idx = np.arange(n)
    bits = np.bitwise_and.outer(idx, idx)
    parity = np.zeros_like(bits)
    while bits.any():
        parity ^= bits & 1
        bits >>= 1
    return np.where(parity == 1, -1.0, 1.0) / np.sqrt(n)


def hadamard_entry(a: int, b: int, n: int) -> float:
    sign = -1.0 if bin(a & b).count("1") % 2 else 1.0
    return sign / np.sqrt(n)


def phi(x, y) -> float | np.ndarray:
    """Forrelation ``(1/n) <x, H_n y>``; batched over leading axes."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape[-1:] != y.shape[-1:]:
        raise DimensionError(f"mismatched lengths {x.shape[-1:]} and {y.shape[-1:]}")
    n = x.shape[-1]
    out = np.einsum("...i,...i->...", x, fwht(y)) / n
    return float(out) if out.ndim == 0 else out
