"""Correlated Brownian motion with box-exit stopping, simulated on a time grid.

Two covariance forms are supported. ``HadamardBlock(n)`` is
``[[I_n, H_n], [H_n, I_n]]`` on ``N = 2n`` coordinates and is simulated as an
``n``-dimensional standard Brownian motion ``X`` exposed as ``(X, H_n X)``.
``DenseCovariance`` takes an explicit small matrix and draws increments via a
symmetric square root.

Exits are detected at grid points only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .wht import DimensionError, fwht, hadamard_entry, hadamard_matrix, is_power_of_two

PSD_TOL = 1e-10
BLOCK_ELEMENTS = 4_000_000


class FactorizationError(ValueError):
    """Raised for a dense covariance that is not symmetric PSD with unit diagonal."""


class CovarianceSpec:
    N: int
    latent_dim: int

    @property
    def gamma(self) -> float:
        raise NotImplementedError

    def entry(self, i: int, j: int) -> float:
        raise NotImplementedError

    def matrix(self) -> np.ndarray:
        raise NotImplementedError

    def correlate(self, g: np.ndarray) -> np.ndarray:
        """Map i.i.d. standard normals (last axis ``latent_dim``) to latent increments."""
        raise NotImplementedError

    def expose(self, latent: np.ndarray) -> np.ndarray:
        """Latent state(s) to the ``N``-dimensional process."""
        raise NotImplementedError

    def exceeds(self, latent: np.ndarray, half_width: float) -> np.ndarray:
        return np.any(np.abs(self.expose(latent)) > half_width, axis=-1)


@dataclass(frozen=True)
class HadamardBlock(CovarianceSpec):
    n: int

    def __post_init__(self):
        if not is_power_of_two(self.n):
            raise DimensionError(f"half-dimension {self.n} is not a power of two")

    @property
    def N(self) -> int:
        return 2 * self.n

    @property
    def latent_dim(self) -> int:
        return self.n

    @property
    def gamma(self) -> float:
        return 1.0 / math.sqrt(self.n)

    def entry(self, i: int, j: int) -> float:
        n = self.n
        if not (0 <= i < 2 * n and 0 <= j < 2 * n):
            raise IndexError((i, j))
        if i == j:
            return 1.0
        if (i < n) == (j < n):
            return 0.0
        return hadamard_entry(i % n, j % n, n)

    def matrix(self) -> np.ndarray:
        h = hadamard_matrix(self.n)
        eye = np.eye(self.n)
        return np.block([[eye, h], [h, eye]])

    def correlate(self, g):
        return g

    def expose(self, latent):
        return np.concatenate([latent, fwht(latent)], axis=-1)

    def exceeds(self, latent, half_width):
        if not np.isfinite(half_width):
            return np.zeros(latent.shape[:-1], dtype=bool)
        out = np.any(np.abs(latent) > half_width, axis=-1)
        out |= np.any(np.abs(fwht(latent)) > half_width, axis=-1)
        return out


class DenseCovariance(CovarianceSpec):
    def __init__(self, matrix):
        a = np.array(matrix, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionError(f"covariance must be square, got {a.shape}")
        if not np.allclose(a, a.T, atol=PSD_TOL):
            raise FactorizationError("covariance is not symmetric")
        if not np.allclose(np.diag(a), 1.0, atol=PSD_TOL):
            raise FactorizationError("covariance must have unit diagonal")
        w, v = np.linalg.eigh((a + a.T) / 2)
        if w.min() < -PSD_TOL * max(1.0, abs(w).max()):
            raise FactorizationError(f"covariance is not PSD (min eigenvalue {w.min():.3g})")
        self._matrix = a
        self._root = v * np.sqrt(np.clip(w, 0.0, None))

    @property
    def N(self) -> int:
        return self._matrix.shape[0]

    @property
    def latent_dim(self) -> int:
        return self.N

    @property
    def gamma(self) -> float:
        off = self._matrix - np.diag(np.diag(self._matrix))
        return float(np.abs(off).max()) if self.N > 1 else 0.0

    def entry(self, i, j):
        return float(self._matrix[i, j])

    def matrix(self):
        return self._matrix.copy()

    def correlate(self, g):
        return g @ self._root.T

    def expose(self, latent):
        return latent

    def __repr__(self):
        return f"DenseCovariance(N={self.N})"


def hadamard_or_dense(n: int | None = None, matrix=None) -> CovarianceSpec:
    if (n is None) == (matrix is None):
        raise ValueError("give exactly one of n or matrix")
    return HadamardBlock(n) if matrix is None else DenseCovariance(matrix)


def default_epsilon(N: float, k: int) -> float:
    """Horizon ``1 / (28 k^2 ln N)``."""
    if N < 2:
        raise ValueError("N must be at least 2")
    if k < 1:
        raise ValueError("k must be at least 1")
    return 1.0 / (28.0 * k * k * math.log(N))


@dataclass(frozen=True)
class SimParams:
    epsilon: float
    delta: float | None = None
    half_width: float = 0.5

    def __post_init__(self):
        delta = self.epsilon / 64 if self.delta is None else self.delta
        object.__setattr__(self, "delta", float(delta))
        if not (0 < self.epsilon <= 1):
            raise ValueError("epsilon must lie in (0, 1]")
        if not (0 < self.delta <= self.epsilon):
            raise ValueError("need 0 < delta <= epsilon")

    @property
    def steps(self) -> int:
        return max(1, math.ceil(self.epsilon / self.delta - 1e-9))

    def times(self) -> np.ndarray:
        """Grid ``0, delta, 2 delta, ..., epsilon``; the last step may be partial."""
        t = np.arange(self.steps + 1) * self.delta
        t[-1] = self.epsilon
        return t


@dataclass
class StoppedPath:
    times: np.ndarray
    points: np.ndarray
    tau: float
    hit_boundary: bool

    @property
    def endpoint(self) -> np.ndarray:
        return self.points[-1]


@dataclass
class PathBatch:
    endpoints: np.ndarray
    tau: np.ndarray
    hit: np.ndarray
    integral: np.ndarray | None = None


def sample_path(cov: CovarianceSpec, params: SimParams, rng: np.random.Generator) -> StoppedPath:
    t = params.times()
    dt = np.diff(t)
    g = rng.standard_normal((len(dt), cov.latent_dim))
    latent = np.cumsum(cov.correlate(g) * np.sqrt(dt)[:, None], axis=0)
    latent = np.vstack([np.zeros(cov.latent_dim), latent])
    out = cov.exceeds(latent, params.half_width)
    stop = int(np.argmax(out)) if out.any() else len(t) - 1
    return StoppedPath(t[: stop + 1], cov.expose(latent[: stop + 1]), float(t[stop]), bool(out.any()))


def integrate_along_path(path: StoppedPath, integrand: Callable[[np.ndarray], float]) -> float:
    """Left-endpoint Riemann sum of ``integrand`` over ``[0, tau]``."""
    if len(path.times) < 2:
        return 0.0
    values = np.asarray(integrand(path.points[:-1]), dtype=np.float64)
    if values.ndim == 0:
        values = np.full(len(path.times) - 1, float(values))
    return float(values @ np.diff(path.times))


class _Tracker:
    """Stopping and integral bookkeeping for one observation stride."""

    def __init__(self, stride, steps, size, N, t, integrand_at_zero):
        obs = set(range(stride, steps + 1, stride)) | {steps}
        self.obs = sorted(obs)
        self.t = t
        self.alive = np.ones(size, dtype=bool)
        self.tau = np.full(size, t[-1])
        self.hit = np.zeros(size, dtype=bool)
        self.endpoints = np.zeros((size, N))
        self.integral = None if integrand_at_zero is None else np.zeros_like(integrand_at_zero)
        self.last_val = integrand_at_zero
        self.last_t = 0.0
        self.cursor = 0

    def observe(self, block_start, block_stop, exposed, exceed, integ):
        steps = len(self.t) - 1
        while self.cursor < len(self.obs) and self.obs[self.cursor] <= block_stop:
            idx = self.obs[self.cursor]
            j = idx - block_start
            if self.integral is not None:
                live = self.alive.reshape(self.alive.shape + (1,) * (np.ndim(self.last_val) - 1))
                self.integral += np.where(live, self.last_val * (self.t[idx] - self.last_t), 0.0)
                self.last_val = integ[j]
            self.last_t = self.t[idx]
            stop = self.alive & exceed[j]
            if idx == steps:
                final = self.alive & ~stop
                self.endpoints[final] = exposed[j][final]
            self.endpoints[stop] = exposed[j][stop]
            self.tau[stop] = self.t[idx]
            self.hit |= stop
            self.alive &= ~stop
            self.cursor += 1

    def result(self) -> PathBatch:
        return PathBatch(self.endpoints, self.tau, self.hit, self.integral)


def simulate(cov: CovarianceSpec, params: SimParams, rng: np.random.Generator, size: int,
             integrand: Callable[[np.ndarray], np.ndarray] | None = None,
             strides: Sequence[int] = (1,)) -> list[PathBatch]:
    """Simulate ``size`` stopped paths on the grid of ``params``.

    Each stride ``s`` observes the same noise every ``s`` grid steps (plus the
    final time), giving results at step ``s * delta`` with common random numbers.
    ``integrand`` maps exposed states ``(..., N)`` to values of shape ``(...)``
    or ``(..., P)`` and is integrated by left-endpoint sums up to the stopping
    time.
    """
    t = params.times()
    dt = np.diff(t)
    steps = len(dt)
    d, N = cov.latent_dim, cov.N
    zero_val = None
    if integrand is not None:
        at_zero = np.asarray(integrand(np.zeros(N)), dtype=np.float64)
        zero_val = np.broadcast_to(at_zero, (size,) + at_zero.shape).copy()
    trackers = [_Tracker(s, steps, size, N, t, zero_val) for s in strides]
    block = max(1, BLOCK_ELEMENTS // max(1, size * N))
    state = np.zeros((size, d))
    for start in range(0, steps, block):
        stop = min(steps, start + block)
        g = rng.standard_normal((stop - start, size, d))
        incr = cov.correlate(g) * np.sqrt(dt[start:stop])[:, None, None]
        latent = state + np.cumsum(incr, axis=0)
        state = latent[-1]
        exposed = cov.expose(latent)
        if np.isfinite(params.half_width):
            exceed = np.any(np.abs(exposed) > params.half_width, axis=-1)
        else:
            exceed = np.zeros((stop - start, size), dtype=bool)
        integ = None if integrand is None else np.asarray(integrand(exposed))
        for tr in trackers:
            tr.observe(start + 1, stop, exposed, exceed, integ)
    return [tr.result() for tr in trackers]


def sample_endpoint(cov: HadamardBlock, epsilon: float, rng: np.random.Generator,
                    size: int | None = None, half_width: float = 0.5):
    """Draw ``(X, H_n X)`` with ``X ~ N(0, epsilon I_n)`` without path simulation.

    Returns ``(point, hit)`` where ``hit`` flags an endpoint outside the box.
    Early exits along the way are not seen.
    """
    if not isinstance(cov, HadamardBlock):
        raise TypeError("sample_endpoint needs the Hadamard-block covariance")
    shape = (cov.n,) if size is None else (size, cov.n)
    x = math.sqrt(epsilon) * rng.standard_normal(shape)
    point = cov.expose(x)
    hit = np.any(np.abs(point) > half_width, axis=-1)
    return point, (bool(hit) if size is None else hit)
