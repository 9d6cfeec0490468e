"""Deterministic chunked Monte Carlo: stream derivation, worker fan-out, moment merging.

Trials are split into fixed-size chunks. Chunk ``j`` of a run labelled ``key``
draws from ``SeedSequence(master, spawn_key=(key, j))``, so results depend
only on the master seed and the chunk size, never on the worker count.
"""
from __future__ import annotations

import os
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

WORKERS_ENV = "FORRELAB_WORKERS"
DEFAULT_CHUNK = 1000


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def stream_key(label: str) -> int:
    return zlib.crc32(label.encode())


def as_entropy(seed) -> int:
    """Collapse an int, SeedSequence or Generator into a master entropy value."""
    if isinstance(seed, np.random.Generator):
        return int(seed.integers(0, 2**63))
    if isinstance(seed, np.random.SeedSequence):
        return int(seed.generate_state(2, np.uint64)[0])
    if seed is None:
        raise ValueError("an explicit seed or Generator is required")
    return int(seed)


def chunk_rng(entropy: int, key: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy, spawn_key=(key, index)))


def chunk_sizes(trials: int, chunk: int = DEFAULT_CHUNK) -> list[int]:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    full, rem = divmod(trials, chunk)
    return [chunk] * full + ([rem] if rem else [])


def _call(args):
    fn, entropy, key, index, size = args
    return fn(chunk_rng(entropy, key, index), size)


def map_chunks(fn: Callable[[np.random.Generator, int], object], seed, label: str,
               trials: int, *, workers: int | None = None, chunk: int = DEFAULT_CHUNK) -> list:
    """Run ``fn(rng, size)`` over every chunk; results come back in chunk order.

    ``fn`` must be picklable when ``workers > 1``.
    """
    entropy = as_entropy(seed)
    key = stream_key(label)
    jobs = [(fn, entropy, key, j, size) for j, size in enumerate(chunk_sizes(trials, chunk))]
    workers = default_workers() if workers is None else workers
    if workers <= 1 or len(jobs) == 1:
        return [_call(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_call, jobs))


@dataclass
class Moments:
    """Count, mean and centred sum of squares, per component."""

    count: int
    mean: np.ndarray
    m2: np.ndarray

    @classmethod
    def of(cls, samples) -> "Moments":
        a = np.asarray(samples, dtype=np.float64)
        mean = a.mean(axis=0)
        return cls(len(a), mean, ((a - mean) ** 2).sum(axis=0))

    def merge(self, other: "Moments") -> "Moments":
        n = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * (other.count / n)
        m2 = self.m2 + other.m2 + delta**2 * (self.count * other.count / n)
        return Moments(n, mean, m2)

    @property
    def variance(self):
        return self.m2 / (self.count - 1) if self.count > 1 else np.zeros_like(self.m2)

    @property
    def se(self):
        return np.sqrt(self.variance / self.count)


def merge_all(parts: Sequence[Moments]) -> Moments:
    """Pairwise (tree) merge in a fixed order."""
    parts = list(parts)
    if not parts:
        raise ValueError("nothing to merge")
    while len(parts) > 1:
        nxt = [parts[i].merge(parts[i + 1]) for i in range(0, len(parts) - 1, 2)]
        if len(parts) % 2:
            nxt.append(parts[-1])
        parts = nxt
    return parts[0]
