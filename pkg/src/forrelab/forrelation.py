"""Block distributions D_S, D_odd^k, D_even^k, cube rounding, and the decisions F, F^(k).

A sample over ``k`` copies is a ``(k, N)`` array; block ``i`` is ``(x, y)`` with
``x`` the first ``n = N/2`` coordinates. Decisions are ints: ``-1``, ``+1``,
or ``UNDEFINED = 0`` for the gap of the partial function, so a product of
decisions is undefined as soon as one factor is.
"""
from __future__ import annotations

import io
import struct
from dataclasses import dataclass

import numpy as np

from .stochastic import CovarianceSpec, HadamardBlock, SimParams, sample_endpoint, simulate
from .wht import DimensionError, is_power_of_two, phi

UNDEFINED = 0
_MAGIC_BLOCK = b"FRLB"
_MAGIC_CUBE = b"FRLC"
_HEADER = struct.Struct("<4sIIQ")


def subset_mask(S) -> int:
    if isinstance(S, (int, np.integer)):
        return int(S)
    mask = 0
    for i in S:
        mask |= 1 << int(i)
    return mask


def parity_subsets(k: int, parity: str) -> list[int]:
    want = {"even": 0, "odd": 1}[parity]
    return [s for s in range(2**k) if bin(s).count("1") % 2 == want]


@dataclass
class BlockSample:
    k: int
    S: int
    values: np.ndarray

    @property
    def N(self) -> int:
        return self.values.shape[1]

    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    def dump(self, fp) -> None:
        fp.write(_HEADER.pack(_MAGIC_BLOCK, self.k, self.N, self.S))
        fp.write(np.ascontiguousarray(self.values, dtype="<f8").tobytes())

    @classmethod
    def load(cls, fp) -> "BlockSample":
        magic, k, N, S = _HEADER.unpack(fp.read(_HEADER.size))
        if magic != _MAGIC_BLOCK:
            raise ValueError("not a block sample dump")
        values = np.frombuffer(fp.read(8 * k * N), dtype="<f8").reshape(k, N).copy()
        return cls(k, S, values)

    def to_bytes(self) -> bytes:
        buf = io.BytesIO()
        self.dump(buf)
        return buf.getvalue()


@dataclass
class CubePoint:
    bits: np.ndarray
    k: int = 1

    def __post_init__(self):
        bits = np.asarray(self.bits)
        if not np.all(np.abs(bits) == 1):
            raise ValueError("cube points have +-1 entries")
        self.bits = bits.astype(np.int8).reshape(-1)

    @property
    def N(self) -> int:
        return self.bits.size // self.k

    def blocks(self) -> np.ndarray:
        return self.bits.reshape(self.k, -1)

    def dump(self, fp) -> None:
        fp.write(_HEADER.pack(_MAGIC_CUBE, self.k, self.N, 0))
        fp.write(self.bits.tobytes())

    @classmethod
    def load(cls, fp) -> "CubePoint":
        magic, k, N, _ = _HEADER.unpack(fp.read(_HEADER.size))
        if magic != _MAGIC_CUBE:
            raise ValueError("not a cube point dump")
        return cls(np.frombuffer(fp.read(k * N), dtype=np.int8).copy(), k)


def _live_endpoints(count, cov, params, rng, endpoint_only):
    if endpoint_only:
        point, _ = sample_endpoint(cov, params.epsilon, rng, size=count, half_width=params.half_width)
    else:
        point = simulate(cov, params, rng, count)[0].endpoints
    # grid-detected exits overshoot the box slightly
    return np.clip(point, -params.half_width, params.half_width)


def sample_D_S(k: int, S, cov: CovarianceSpec, params: SimParams, rng: np.random.Generator,
               *, endpoint_only: bool = False) -> BlockSample:
    """Independent stopped endpoints on the blocks in ``S``, zeros elsewhere."""
    S = subset_mask(S)
    if S >> k:
        raise ValueError(f"subset {S:#x} is not inside [{k}]")
    values = np.zeros((k, cov.N))
    live = [i for i in range(k) if S >> i & 1]
    if live:
        values[live] = _live_endpoints(len(live), cov, params, rng, endpoint_only)
    return BlockSample(k, S, values)


def sample_D_parity(k: int, parity: str, cov: CovarianceSpec, params: SimParams,
                    rng: np.random.Generator, *, endpoint_only: bool = False) -> BlockSample:
    """Uniform ``S`` of the given parity (``"odd"`` or ``"even"``), then :func:`sample_D_S`."""
    if k < 1:
        raise ValueError("k must be at least 1")
    choices = parity_subsets(k, parity)
    S = choices[int(rng.integers(len(choices)))]
    return sample_D_S(k, S, cov, params, rng, endpoint_only=endpoint_only)


def round_to_cube(z, rng: np.random.Generator) -> np.ndarray:
    """Set each coordinate to +1 w.p. (1+z_i)/2, else -1. Returns int8."""
    z = np.asarray(z, dtype=np.float64)
    if np.any(np.abs(z) > 0.5 + 1e-12):
        raise ValueError("rounding needs every |z_i| <= 1/2")
    return np.where(rng.random(z.shape) < (1 + z) / 2, 1, -1).astype(np.int8)


def _split(v):
    v = np.asarray(v)
    n = v.shape[-1] // 2
    return v[..., :n], v[..., n:]


def decide(phi_value, epsilon: float):
    """Threshold rule: -1 if phi >= eps/2, +1 if phi <= eps/4, else UNDEFINED."""
    p = np.asarray(phi_value)
    out = np.where(p >= epsilon / 2, -1, np.where(p <= epsilon / 4, 1, UNDEFINED))
    return int(out) if out.ndim == 0 else out.astype(np.int8)


def forrelation_decision(x, y, epsilon: float):
    x = np.asarray(x)
    if not is_power_of_two(x.shape[-1]):
        raise DimensionError(f"block half-length {x.shape[-1]} is not a power of two")
    return decide(phi(x, y), epsilon)


def forrelation_k(z, k: int, epsilon: float):
    """Product of the ``k`` block decisions; batched over leading axes of ``z``."""
    z = np.asarray(z)
    if z.shape[-1] % (2 * k):
        raise DimensionError(f"length {z.shape[-1]} is not k*N with even N")
    blocks = z.reshape(*z.shape[:-1], k, z.shape[-1] // k)
    x, y = _split(blocks)
    out = np.prod(forrelation_decision(x, y, epsilon), axis=-1)
    return int(out) if np.ndim(out) == 0 else out


def block_phi(z, k: int = 1):
    """phi of each block of a flat ``kN`` vector (or a ``(..., k, N)`` array)."""
    z = np.asarray(z, dtype=np.float64)
    if z.shape[-1] % (2 * k):
        raise DimensionError(f"length {z.shape[-1]} is not k*N with even N")
    blocks = z.reshape(*z.shape[:-1], k, z.shape[-1] // k)
    return phi(*_split(blocks))


def hadamard_cov(N: int) -> HadamardBlock:
    if N % 2:
        raise DimensionError("N must be even")
    return HadamardBlock(N // 2)
