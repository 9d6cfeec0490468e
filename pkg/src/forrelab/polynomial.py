"""Multilinear polynomials indexed by variable subsets (bitmasks).

A polynomial over ``m`` variables is stored sparsely as ``{mask: coeff}``
where bit ``i`` of ``mask`` marks variable ``i``. For a Boolean function the
coefficients are its Fourier coefficients, and ``coeffs[S] == d_S f(0)``.

Restrictions keep the ambient variable indexing: ``f_rho`` is a polynomial
over the same ``m`` variables that simply does not depend on fixed ones.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping

import numpy as np

from .wht import DimensionError, fwht

STAR = 0
MAX_TABLE_VARS = 20
MAX_SUP_VARS = 12
MAX_EXACT_VARS = 8


class CapacityError(ValueError):
    """Raised when an exhaustive enumeration would be too large."""


def mask_of(indices: Iterable[int]) -> int:
    mask = 0
    for i in indices:
        mask |= 1 << int(i)
    return mask


def indices_of(mask: int) -> tuple[int, ...]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def popcount(mask: int) -> int:
    return bin(mask).count("1")


@dataclass(frozen=True)
class MultilinearPoly:
    m: int
    coeffs: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.m < 0:
            raise ValueError("m must be non-negative")
        clean = {}
        for mask, c in dict(self.coeffs).items():
            mask = int(mask)
            c = float(c)
            if mask < 0 or mask >> self.m:
                raise ValueError(f"subset {mask:#x} is not inside [{self.m}]")
            if not np.isfinite(c):
                raise ValueError("coefficients must be finite")
            if c != 0.0:
                clean[mask] = clean.get(mask, 0.0) + c
        object.__setattr__(self, "coeffs", MappingProxyType(clean))

    @classmethod
    def monomial(cls, m: int, indices: Iterable[int], coeff: float = 1.0) -> "MultilinearPoly":
        return cls(m, {mask_of(indices): coeff})

    @classmethod
    def constant(cls, m: int, value: float) -> "MultilinearPoly":
        return cls(m, {0: value})

    def __reduce__(self):
        return (MultilinearPoly, (self.m, dict(self.coeffs)))

    def __getitem__(self, mask: int) -> float:
        return self.coeffs.get(mask, 0.0)

    def __len__(self) -> int:
        return len(self.coeffs)

    def __add__(self, other: "MultilinearPoly") -> "MultilinearPoly":
        if self.m != other.m:
            raise DimensionError("variable counts differ")
        out = dict(self.coeffs)
        for mask, c in other.coeffs.items():
            out[mask] = out.get(mask, 0.0) + c
        return MultilinearPoly(self.m, out)

    def scale(self, factor: float) -> "MultilinearPoly":
        return MultilinearPoly(self.m, {s: factor * c for s, c in self.coeffs.items()})

    @property
    def degree(self) -> int:
        return max((popcount(s) for s in self.coeffs), default=0)

    def __call__(self, x):
        return evaluate(self, x)

    def to_dict(self) -> dict:
        return {"m": self.m, "coeffs": [[s, c] for s, c in sorted(self.coeffs.items())]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: Mapping) -> "MultilinearPoly":
        return cls(int(data["m"]), {int(s): float(c) for s, c in data["coeffs"]})

    @classmethod
    def from_json(cls, text: str) -> "MultilinearPoly":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class Restriction:
    """A pattern in {-1, +1, *}^m; ``*`` (free) is encoded as 0."""

    pattern: tuple[int, ...]

    def __post_init__(self):
        pattern = tuple(int(v) for v in self.pattern)
        if any(v not in (-1, 0, 1) for v in pattern):
            raise ValueError("restriction entries must be -1, +1 or 0 (free)")
        object.__setattr__(self, "pattern", pattern)

    @classmethod
    def parse(cls, text: str) -> "Restriction":
        table = {"+": 1, "-": -1, "*": STAR}
        return cls(tuple(table[ch] for ch in text))

    def __str__(self) -> str:
        return "".join({1: "+", -1: "-", 0: "*"}[v] for v in self.pattern)

    def __len__(self) -> int:
        return len(self.pattern)

    @property
    def free_mask(self) -> int:
        return mask_of(i for i, v in enumerate(self.pattern) if v == STAR)


def _as_points(p: MultilinearPoly, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0 or x.shape[-1] != p.m:
        raise DimensionError(f"expected points with {p.m} coordinates, got shape {x.shape}")
    return x


_DENSE_TERMS = 64
_DENSE_BATCH = 2**22


def _evaluate_dense(p: MultilinearPoly, x: np.ndarray) -> np.ndarray:
    # contract one variable at a time: bit 0 is the fastest-varying mask digit
    coeffs = dense_coefficients(p)
    flat = x.reshape(-1, p.m)
    out = np.empty(len(flat))
    rows = max(1, _DENSE_BATCH // coeffs.size)
    for start in range(0, len(flat), rows):
        pts = flat[start:start + rows]
        acc = np.broadcast_to(coeffs, (len(pts), coeffs.size))
        for i in range(p.m):
            acc = acc.reshape(len(pts), -1, 2)
            acc = acc[:, :, 0] + acc[:, :, 1] * pts[:, i, None]
        out[start:start + rows] = acc.reshape(len(pts))
    return out.reshape(x.shape[:-1])


def evaluate(p: MultilinearPoly, x):
    """Evaluate ``sum_S c_S prod_{i in S} x_i``; ``x`` may carry leading batch axes."""
    x = _as_points(p, x)
    if len(p.coeffs) > _DENSE_TERMS and p.m <= 16:
        out = _evaluate_dense(p, x)
        return float(out) if out.ndim == 0 else out
    out = np.zeros(x.shape[:-1])
    for mask, c in p.coeffs.items():
        idx = indices_of(mask)
        if idx:
            out = out + c * np.prod(x[..., list(idx)], axis=-1)
        else:
            out = out + c
    return float(out) if out.ndim == 0 else out


def cube_points(m: int) -> np.ndarray:
    """All of {-1,1}^m as rows; row ``c`` has ``x_i = -1`` exactly when bit ``i`` of ``c`` is set."""
    c = np.arange(2**m)[:, None]
    bits = (c >> np.arange(m)[None, :]) & 1
    return 1.0 - 2.0 * bits


def from_truth_table(values) -> MultilinearPoly:
    """Exact Fourier expansion of a +-1 valued table ordered as in :func:`cube_points`."""
    vals = np.asarray(values, dtype=np.float64).ravel()
    size = vals.size
    m = size.bit_length() - 1
    if size == 0 or size != 2**m:
        raise DimensionError(f"table size {size} is not a power of two")
    if m > MAX_TABLE_VARS:
        raise CapacityError(f"m={m} exceeds the enumeration limit {MAX_TABLE_VARS}")
    if not np.all(np.abs(vals) == 1.0):
        raise ValueError("truth table values must be +1 or -1")
    # Unnormalized Sylvester matrix entry (S, c) is chi_S at cube point c; exact in binary.
    coeffs = fwht(vals, normalized=False) / size
    return MultilinearPoly(m, {int(s): float(c) for s, c in enumerate(coeffs) if c != 0.0})


def dense_coefficients(p: MultilinearPoly) -> np.ndarray:
    if p.m > MAX_TABLE_VARS:
        raise CapacityError(f"m={p.m} too large for a dense coefficient table")
    out = np.zeros(2**p.m)
    for s, c in p.coeffs.items():
        out[s] = c
    return out


def partial_derivative(p: MultilinearPoly, S) -> MultilinearPoly:
    """``d_S p``: the coefficient table ``{T \\ S: c_T for T containing S}``."""
    S = S if isinstance(S, int) else mask_of(S)
    return MultilinearPoly(p.m, {t & ~S: c for t, c in p.coeffs.items() if t & S == S})


def restrict(p: MultilinearPoly, rho: Restriction) -> MultilinearPoly:
    if len(rho) != p.m:
        raise DimensionError(f"restriction has length {len(rho)}, polynomial has {p.m} variables")
    free = rho.free_mask
    out: dict[int, float] = {}
    for t, c in p.coeffs.items():
        for i in indices_of(t & ~free):
            c *= rho.pattern[i]
        key = t & free
        out[key] = out.get(key, 0.0) + c
    return MultilinearPoly(p.m, out)


def level_weight(p: MultilinearPoly, ell: int) -> float:
    if ell < 0:
        raise ValueError("level must be non-negative")
    return float(sum(abs(c) for s, c in p.coeffs.items() if popcount(s) == ell))


def sup_restricted_level_weight(p: MultilinearPoly, ell: int) -> float:
    """Max of ``level_weight(restrict(p, rho), ell)`` over all 3^m restrictions.

    For each free set F the restricted coefficients, as functions of the
    fixed assignment, form a Hadamard transform over the fixed coordinates;
    every assignment is handled by one batched transform.
    """
    if ell < 0:
        raise ValueError("level must be non-negative")
    m = p.m
    if m > MAX_SUP_VARS:
        raise CapacityError(f"m={m} exceeds {MAX_SUP_VARS}; supply the level bound externally")
    if ell > m or not p.coeffs:
        return 0.0
    # axis j of the tensor carries variable m-1-j
    tensor = dense_coefficients(p).reshape((2,) * m) if m else dense_coefficients(p)
    best = 0.0
    for free in range(2**m):
        f = popcount(free)
        if f < ell:
            continue
        free_axes = [m - 1 - i for i in range(m) if free >> i & 1]
        fixed_axes = [m - 1 - i for i in range(m) if not free >> i & 1]
        block = np.transpose(tensor, free_axes + fixed_axes).reshape(2**f, 2 ** (m - f))
        if m - f:
            block = fwht(block, normalized=False)
        rows = np.array([popcount(r) == ell for r in range(2**f)])
        weights = np.abs(block[rows]).sum(axis=0)
        best = max(best, float(weights.max()))
    return best


def _check_box(x, m: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (m,):
        raise DimensionError(f"expected a point with {m} coordinates, got shape {x.shape}")
    if np.any(np.abs(x) > 0.5 + 1e-12) or not np.all(np.isfinite(x)):
        raise ValueError("restriction distribution needs every |x_i| <= 1/2")
    return np.clip(x, -0.5, 0.5)


def restriction_probabilities(x) -> np.ndarray:
    """Per-coordinate law of R_x as columns (P[*], P[+1], P[-1])."""
    x = np.asarray(x, dtype=np.float64)
    return np.stack([np.full_like(x, 0.5), (1 + 2 * x) / 4, (1 - 2 * x) / 4], axis=-1)


def sample_restriction(x, rng: np.random.Generator) -> Restriction:
    """Draw rho ~ R_x: free w.p. 1/2, else +1 w.p. (1+2x_i)/4 and -1 w.p. (1-2x_i)/4."""
    x = np.asarray(x, dtype=np.float64)
    x = _check_box(x, x.size if x.ndim == 1 else -1)
    u = rng.random(x.size)
    pattern = np.where(u < 0.5, STAR, np.where(u < 0.5 + (1 + 2 * x) / 4, 1, -1))
    return Restriction(tuple(int(v) for v in pattern))


def sample_restrictions(x, rng: np.random.Generator, size: int) -> np.ndarray:
    """Vectorized draws from R_x as an int8 array of shape (size, m), 0 marking free."""
    x = np.asarray(x, dtype=np.float64)
    x = _check_box(x, x.size if x.ndim == 1 else -1)
    u = rng.random((size, x.size))
    return np.where(u < 0.5, STAR, np.where(u < 0.5 + (1 + 2 * x) / 4, 1, -1)).astype(np.int8)


def restricted_derivative_at_zero(p: MultilinearPoly, S, patterns: np.ndarray) -> np.ndarray:
    """``d_S f_rho(0)`` for each row of ``patterns`` (0 = free, +-1 = fixed)."""
    S = S if isinstance(S, int) else mask_of(S)
    patterns = np.asarray(patterns)
    s_idx = list(indices_of(S))
    s_free = np.all(patterns[:, s_idx] == STAR, axis=1) if s_idx else np.ones(len(patterns), bool)
    out = np.zeros(len(patterns))
    for t, c in p.coeffs.items():
        if t & S != S:
            continue
        rest = list(indices_of(t & ~S))
        # a free variable outside S contributes a factor 0
        term = np.prod(patterns[:, rest], axis=1) if rest else 1.0
        out += c * term
    return np.where(s_free, out, 0.0)


def exact_restriction_expectation(p: MultilinearPoly, S, x) -> float:
    """E_{rho ~ R_x}[d_S f_rho(0)], summing over all 3^m restrictions."""
    if p.m > MAX_EXACT_VARS:
        raise CapacityError(f"m={p.m} exceeds {MAX_EXACT_VARS} for exact enumeration")
    x = _check_box(x, p.m)
    probs = restriction_probabilities(x)
    values = np.array([STAR, 1, -1])
    choice = np.array(list(itertools.product(range(3), repeat=p.m)), dtype=np.int64).reshape(-1, p.m)
    patterns = values[choice]
    weight = np.prod(probs[np.arange(p.m), choice], axis=1) if p.m else np.ones(1)
    return float(weight @ restricted_derivative_at_zero(p, S, patterns))
