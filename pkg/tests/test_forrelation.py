import io
import itertools

import numpy as np
import pytest

from forrelab.forrelation import (UNDEFINED, BlockSample, CubePoint, block_phi, decide, forrelation_decision,
                                  forrelation_k, hadamard_cov, parity_subsets, round_to_cube, sample_D_parity,
                                  sample_D_S, subset_mask)
from forrelab.polynomial import MultilinearPoly, evaluate
from forrelab.stochastic import SimParams
from forrelab.wht import DimensionError, fwht


PARAMS = SimParams(0.05, 0.005)


def test_empty_subset_is_zero(rng):
    s = sample_D_S(3, [], hadamard_cov(8), PARAMS, rng)
    assert s.values.shape == (3, 8) and not s.values.any()


def test_subset_placement(rng):
    s = sample_D_S(3, [0, 2], hadamard_cov(8), PARAMS, rng)
    assert s.S == 0b101
    assert s.values[0].any() and s.values[2].any() and not s.values[1].any()
    assert np.all(np.abs(s.values) <= 0.5)
    with pytest.raises(ValueError):
        sample_D_S(2, [3], hadamard_cov(8), PARAMS, rng)


def test_parity_draws(rng):
    assert parity_subsets(1, "odd") == [1] and parity_subsets(1, "even") == [0]
    assert not sample_D_parity(1, "even", hadamard_cov(4), PARAMS, rng).values.any()
    assert sample_D_parity(1, "odd", hadamard_cov(4), PARAMS, rng).S == 1
    counts = {1: 0, 2: 0}
    for _ in range(4000):
        counts[sample_D_parity(2, "odd", hadamard_cov(2), PARAMS, rng, endpoint_only=True).S] += 1
    # binomial(4000, 1/2), 4 SD ~ 126
    assert abs(counts[1] - 2000) < 130
    assert sample_D_parity(2, "even", hadamard_cov(2), PARAMS, rng).S in (0, 3)


def test_blocks_are_independent(rng):
    x = np.array([sample_D_S(2, 3, hadamard_cov(4), SimParams(0.05, 0.01), rng).values[:, 0] for _ in range(4000)])
    r = np.corrcoef(x[:, 0], x[:, 1])[0, 1]
    assert abs(r) < 4 / np.sqrt(4000)


def test_round_probability(rng):
    bits = round_to_cube(np.full(200_000, 0.5), rng)
    assert bits.dtype == np.int8
    assert abs((bits == 1).mean() - 0.75) < 4 * np.sqrt(0.75 * 0.25 / 200_000)
    with pytest.raises(ValueError):
        round_to_cube([0.7], rng)


def test_rounding_is_unbiased_for_multilinear():
    # exact average over all 2^m roundings with their probabilities
    gen = np.random.default_rng(3)
    m = 5
    p = MultilinearPoly(m, {int(s): float(gen.normal()) for s in gen.choice(2**m, 12, replace=False)})
    z = gen.uniform(-0.5, 0.5, m)
    total = 0.0
    for bits in itertools.product((1, -1), repeat=m):
        b = np.array(bits)
        weight = np.prod(np.where(b == 1, (1 + z) / 2, (1 - z) / 2))
        total += weight * evaluate(p, b)
    assert total == pytest.approx(evaluate(p, z), abs=1e-12)


def test_rounding_monte_carlo(rng):
    z = np.array([0.3, -0.2, 0.1])
    b = round_to_cube(np.broadcast_to(z, (100_000, 3)), rng)
    prod = b.prod(axis=1).astype(float)
    assert abs(prod.mean() - z.prod()) < 4 * prod.std() / np.sqrt(len(prod))


def test_decisions():
    n = 4
    y = np.ones(n) * 0.5
    x = fwht(y) * 0.5
    assert block_phi(np.concatenate([x, y]))[0] == pytest.approx(0.125)
    assert forrelation_decision(x, y, 0.1) == -1
    assert forrelation_decision(np.array([0.5, -0.5, 0.5, -0.5]), np.array([0.5, -0.5, 0, 0]), 0.1) == 1
    assert decide(0.03, 0.1) == UNDEFINED
    assert decide(0.05, 0.1) == -1 and decide(0.025, 0.1) == 1
    assert list(decide(np.array([0.0, 0.04, 0.9]), 0.1)) == [1, 0, -1]
    with pytest.raises(DimensionError):
        forrelation_decision(np.ones(3), np.ones(3), 0.1)


def test_forrelated_pair_decision():
    # phi(H y, y) = |y|^2 / n; here 0.707 with ||y|| = sqrt(0.707 n)
    n = 16
    y = np.full(n, np.sqrt(0.707))
    x = fwht(y)
    assert block_phi(np.concatenate([x, y]))[0] == pytest.approx(0.707)
    assert forrelation_decision(x, y, 0.5) == -1


def test_product_decision():
    n = 2
    hi = np.concatenate([np.full(n, 0.5), np.full(n, 0.5)])  # phi = 0.25 / sqrt(2)
    lo = np.zeros(2 * n)
    eps = 0.1
    assert block_phi(hi)[0] == pytest.approx(0.25 / np.sqrt(2))
    assert forrelation_k(np.concatenate([lo, lo]), 2, eps) == 1
    assert forrelation_k(np.concatenate([hi, lo]), 2, eps) == -1
    assert forrelation_k(np.concatenate([hi, hi]), 2, eps) == 1
    gap = np.concatenate([np.full(n, 0.2), np.full(n, 0.2)])
    assert block_phi(gap)[0] == pytest.approx(0.04 / np.sqrt(2))
    assert forrelation_k(np.concatenate([gap, hi]), 2, eps) == UNDEFINED
    batch = np.stack([np.concatenate([hi, lo]), np.concatenate([gap, lo])])
    assert list(forrelation_k(batch, 2, eps)) == [-1, 0]


def test_dump_round_trip(rng):
    s = sample_D_S(2, 2, hadamard_cov(8), PARAMS, rng)
    back = BlockSample.load(io.BytesIO(s.to_bytes()))
    assert back.k == 2 and back.S == 2 and np.array_equal(back.values, s.values)
    c = CubePoint(round_to_cube(s.flat().clip(-0.5, 0.5), rng), k=2)
    buf = io.BytesIO()
    c.dump(buf)
    buf.seek(0)
    c2 = CubePoint.load(buf)
    assert c2.k == 2 and np.array_equal(c2.bits, c.bits)
    with pytest.raises(ValueError):
        CubePoint.load(io.BytesIO(s.to_bytes()))
    with pytest.raises(ValueError):
        CubePoint(np.array([1, 0]))


def test_subset_mask():
    assert subset_mask([0, 3]) == 9 and subset_mask(5) == 5
