import numpy as np
import pytest

from forrelab.polynomial import CapacityError, MultilinearPoly, evaluate
from forrelab.stochastic import DenseCovariance, HadamardBlock, SimParams
from forrelab.verifiers import (block_cov_entry, difference_identity_check, dynkin_check, dynkin_family,
                                generator_polynomial, mean_stopping_time, monomial_poly,
                                product_monomial_check, product_monomial_closed_form, second_moment_check,
                                subset_points, subset_signs, advantage_estimate)
from forrelab.wht import DimensionError


def _random_poly(m, terms, gen):
    return MultilinearPoly(m, {int(s): float(gen.normal()) for s in gen.choice(2**m, terms, replace=False)})


def test_generator_matches_finite_difference_hessian():
    gen = np.random.default_rng(0)
    cov = DenseCovariance([[1, 0.3, -0.2], [0.3, 1, 0.1], [-0.2, 0.1, 1]])
    p = _random_poly(3, 6, gen)
    g = generator_polynomial(p, cov)
    sigma = cov.matrix()
    h = 1e-4
    for _ in range(5):
        z = gen.uniform(-0.5, 0.5, 3)
        hess = np.zeros((3, 3))
        for i in range(3):
            for j in range(3):
                ei, ej = np.eye(3)[i] * h, np.eye(3)[j] * h
                hess[i, j] = (evaluate(p, z + ei + ej) - evaluate(p, z + ei - ej)
                              - evaluate(p, z - ei + ej) + evaluate(p, z - ei - ej)) / (4 * h * h)
        assert evaluate(g, z) == pytest.approx(0.5 * np.sum(sigma * hess), abs=1e-6)


def test_linear_polynomial_has_zero_generator():
    p = MultilinearPoly(8, {1: 1.0, 2: -0.5, 0: 3.0})
    assert not generator_polynomial(p, HadamardBlock(4)).coeffs
    with pytest.raises(DimensionError):
        generator_polynomial(p, HadamardBlock(8))


def test_dynkin_linear_and_bilinear():
    cov = HadamardBlock(4)
    params = SimParams(0.2, 0.01)
    lin = MultilinearPoly.monomial(8, [2])
    bil = MultilinearPoly.monomial(8, [0, 4])
    lin_r, bil_r = dynkin_family([lin, bil], cov, params, 20_000, 5, workers=1)
    assert lin_r.rhs == 0.0 and lin_r.verdict
    assert bil_r.verdict
    assert set(bil_r.extra) >= {"bias_allowance", "refinement_stable", "lhs_shift"}


def test_dense_bilinear_example():
    """Sigma_12 = 0.3, eps = 0.02: both sides near 0.3 * E[tau]."""
    cov = DenseCovariance([[1, 0.3], [0.3, 1]])
    params = SimParams(0.02)
    r = dynkin_check(MultilinearPoly.monomial(2, [0, 1]), cov, params, 50_000, 7, workers=1)
    tau, tau_se = mean_stopping_time(cov, params, 50_000, 7, workers=1)
    assert r.verdict
    assert r.rhs == pytest.approx(0.3 * tau, abs=4 * (r.rhs_se + 0.3 * tau_se))
    assert abs(r.lhs - 0.3 * tau) < 4 * (r.lhs_se + 0.3 * tau_se)
    assert tau <= 0.02


def test_block_cov_entry():
    cov = HadamardBlock(2)
    assert block_cov_entry(cov, 2, 0, 2) == pytest.approx(cov.entry(0, 2))
    assert block_cov_entry(cov, 2, 0, 6) == 0.0
    assert block_cov_entry(cov, 2, 5, 7) == pytest.approx(cov.entry(1, 3))


def test_subset_points_layout():
    blocks = np.arange(1, 9, dtype=float).reshape(1, 2, 4)
    pts = subset_points(blocks)
    assert pts.shape == (1, 4, 8)
    assert not pts[0, 0].any()
    assert np.array_equal(pts[0, 1], [1, 2, 3, 4, 0, 0, 0, 0])
    assert np.array_equal(pts[0, 2], [0, 0, 0, 0, 5, 6, 7, 8])
    assert list(subset_signs(2)) == [1, -1, -1, 1]


def test_constant_function_has_zero_advantage():
    f = MultilinearPoly.constant(8, 0.7)
    r = advantage_estimate(f, 2, HadamardBlock(2), SimParams(0.05, 0.005), 500, 1, workers=1)
    assert r.lhs == 0.0 and r.lhs_se == 0.0 and r.verdict


def test_advantage_capacity():
    f = MultilinearPoly.monomial(16, [0])
    with pytest.raises(CapacityError):
        advantage_estimate(f, 2, HadamardBlock(4), SimParams(0.05, 0.005), 10, 1)
    r = advantage_estimate(f, 2, HadamardBlock(4), SimParams(0.05, 0.005), 200, 1, L=1.0, workers=1)
    assert r.params["L"] == 1.0


def test_difference_identity():
    gen = np.random.default_rng(2)
    cov = HadamardBlock(2)
    params = SimParams(0.05, 0.005)
    f = _random_poly(8, 20, gen)
    sampled = difference_identity_check(f, 2, cov, params, 5000, 3, workers=1)
    assert sampled.verdict and sampled.lhs != sampled.rhs
    exact = difference_identity_check(f, 2, cov, params, 500, 3, stratified=True, workers=1)
    assert abs(exact.lhs - exact.rhs) < 1e-12 and exact.verdict


def test_closed_form_vanishes_without_cross_covariance():
    cov = DenseCovariance([[1, 0, 0.4, 0], [0, 1, 0, 0.2], [0.4, 0, 1, 0], [0, 0.2, 0, 1]])
    assert product_monomial_closed_form(1, [(0, 1)], cov, 0.01) == 0.0
    assert product_monomial_closed_form(1, [(0, 0)], cov, 0.01) == pytest.approx(-0.5 * 0.4 * 0.01)
    assert product_monomial_closed_form(2, [(0, 0), (1, 1)], cov, 0.01) == pytest.approx(0.25 * 0.4 * 0.2 * 1e-4)


def test_monomial_poly_indices():
    p = monomial_poly(2, [(0, 1), (1, 0)], 4)
    assert list(p.coeffs) == [(1 << 0) | (1 << 3) | (1 << 5) | (1 << 6)]
    with pytest.raises(ValueError):
        monomial_poly(2, [(0, 0)], 4)
    with pytest.raises(IndexError):
        monomial_poly(1, [(2, 0)], 4)


def test_single_block_monomial_tightness():
    cov = HadamardBlock(2)
    params = SimParams(0.05)
    r = product_monomial_check(1, [(0, 0)], cov, params, 20_000, 4, workers=1)
    assert r.verdict
    # |E| ~ 1/2 gamma E[tau] and E[tau] ~ eps here
    assert abs(r.lhs) >= 0.25 * params.epsilon * cov.gamma


def test_second_moment():
    reports = second_moment_check(HadamardBlock(4), SimParams(0.05, 0.005), 20_000, 8, [(0, 4), (1, 1), (2, 3)],
                                  workers=1)
    assert all(r.verdict for r in reports)
    assert reports[2].rhs == 0.0
