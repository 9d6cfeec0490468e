import math

import numpy as np
import pytest

from forrelab.stochastic import (DenseCovariance, FactorizationError, HadamardBlock, SimParams,
                                 default_epsilon, integrate_along_path, sample_endpoint, sample_path,
                                 simulate)
from forrelab.wht import DimensionError, phi

from conftest import naive_hadamard


def test_default_epsilon():
    assert default_epsilon(math.e**2, 1) == pytest.approx(1 / 56)
    # 28 * 20 * ln 2 = 388.162...
    assert default_epsilon(2**20, 1) == pytest.approx(0.0025762, rel=1e-4)
    assert default_epsilon(2**20, 2) == pytest.approx(default_epsilon(2**20, 1) / 4)
    with pytest.raises(ValueError):
        default_epsilon(1, 1)


def test_hadamard_covariance_structure():
    cov = HadamardBlock(4)
    sigma = cov.matrix()
    h = naive_hadamard(4)
    assert np.allclose(sigma, np.block([[np.eye(4), h], [h, np.eye(4)]]))
    assert cov.gamma == pytest.approx(0.5)
    assert cov.entry(1, 4 + 3) == pytest.approx(sigma[1, 7])
    assert np.linalg.eigvalsh(sigma).min() > -1e-12
    with pytest.raises(DimensionError):
        HadamardBlock(6)


def test_dense_validation():
    cov = DenseCovariance([[1, 0.3], [0.3, 1]])
    assert cov.gamma == pytest.approx(0.3)
    with pytest.raises(FactorizationError):
        DenseCovariance([[1, 1.5], [1.5, 1]])
    with pytest.raises(FactorizationError):
        DenseCovariance([[1, 0.2], [0.1, 1]])
    with pytest.raises(FactorizationError):
        DenseCovariance([[2, 0.0], [0.0, 1]])


def test_params_grid():
    p = SimParams(0.01)
    assert p.delta == pytest.approx(0.01 / 64)
    t = SimParams(1.0, 0.3).times()
    assert t == pytest.approx([0, 0.3, 0.6, 0.9, 1.0])
    with pytest.raises(ValueError):
        SimParams(0.1, 0.2)
    with pytest.raises(ValueError):
        SimParams(2.0)


def test_single_step_path(rng):
    path = sample_path(HadamardBlock(4), SimParams(0.01, 0.01), rng)
    assert len(path.times) == 2 and path.points.shape == (2, 8)


@pytest.mark.parametrize("cov", [HadamardBlock(4), DenseCovariance([[1, 0.3, 0], [0.3, 1, -0.5], [0, -0.5, 1]])])
def test_unstopped_covariance(cov, rng):
    eps = 0.05
    res = simulate(cov, SimParams(eps, eps / 8, half_width=np.inf), rng, 100_000)[0]
    x = res.endpoints
    assert not res.hit.any()
    prod = x[:, :, None] * x[:, None, :]
    mean = prod.mean(axis=0)
    se = prod.std(axis=0, ddof=1) / np.sqrt(len(x))
    assert np.all(np.abs(mean - eps * cov.matrix()) < 4 * se + 1e-15)
    inc_se = x.std(axis=0, ddof=1) / np.sqrt(len(x))
    assert np.all(np.abs(x.mean(axis=0)) < 4 * inc_se)


def test_covariance_at_grid_time(rng):
    """Spot-check t * Sigma at an intermediate grid time via a shorter horizon on the same grid."""
    cov = HadamardBlock(8)
    t = 0.02
    x = simulate(cov, SimParams(t, 0.005, half_width=np.inf), rng, 100_000)[0].endpoints
    sigma = cov.matrix()
    pick = rng.integers(0, cov.N, (10, 2))
    for i, j in pick:
        v = x[:, i] * x[:, j]
        assert abs(v.mean() - t * sigma[i, j]) < 4 * v.std(ddof=1) / np.sqrt(len(v))


def test_rare_exit_regime(rng):
    res = simulate(HadamardBlock(128), SimParams(0.01), rng, 5000)[0]
    assert res.hit.mean() < 1e-3


def test_tau_invariants(rng):
    params = SimParams(0.2, 0.01)
    res = simulate(HadamardBlock(4), params, rng, 2000)[0]
    assert np.all(res.tau <= params.epsilon)
    assert np.all(res.tau[~res.hit] == params.epsilon)
    assert np.all(res.hit[res.tau < params.epsilon])
    assert res.hit.any()
    for _ in range(50):
        path = sample_path(HadamardBlock(4), params, rng)
        if not path.hit_boundary:
            assert path.tau == params.epsilon
            assert np.all(np.abs(path.points) <= 0.5)
        else:
            assert np.all(np.abs(path.points[:-1]) <= 0.5)
            assert np.any(np.abs(path.points[-1]) > 0.5)


def test_stopping_monotone_in_box():
    params = SimParams(0.3, 0.01)
    wide = simulate(HadamardBlock(4), params, np.random.default_rng(3), 500)[0]
    narrow = simulate(HadamardBlock(4), SimParams(0.3, 0.01, half_width=0.3), np.random.default_rng(3), 500)[0]
    assert np.all(narrow.tau <= wide.tau)


def test_stopping_monotone_in_horizon():
    short = simulate(HadamardBlock(4), SimParams(0.1, 0.01), np.random.default_rng(4), 500)[0]
    long = simulate(HadamardBlock(4), SimParams(0.3, 0.01), np.random.default_rng(4), 500)[0]
    assert long.hit.mean() >= short.hit.mean()
    assert np.all(long.hit[short.hit])


def test_strides_share_noise(rng):
    fine, coarse = SimParams(0.04, 0.0025), SimParams(0.04, 0.005)
    pair = simulate(HadamardBlock(4), fine, np.random.default_rng(9), 300, strides=(2, 1))
    assert np.all(pair[0].tau >= pair[1].tau)
    assert np.allclose(pair[0].endpoints[~pair[0].hit & ~pair[1].hit], pair[1].endpoints[~pair[0].hit & ~pair[1].hit])
    direct = simulate(HadamardBlock(4), coarse, np.random.default_rng(9), 300)[0]
    assert direct.tau.shape == pair[0].tau.shape


def test_sample_path_matches_batch_engine():
    params = SimParams(0.1, 0.01)
    path = sample_path(HadamardBlock(2), params, np.random.default_rng(5))
    batch = simulate(HadamardBlock(2), params, np.random.default_rng(5), 1)[0]
    assert path.tau == pytest.approx(batch.tau[0])
    assert np.allclose(path.endpoint, batch.endpoints[0])


def test_integrate_along_path(rng):
    path = sample_path(HadamardBlock(4), SimParams(0.05, 0.005), rng)
    assert integrate_along_path(path, lambda s: np.ones(len(s))) == pytest.approx(path.tau)
    assert integrate_along_path(path, lambda s: 2.5) == pytest.approx(2.5 * path.tau)
    sigma = HadamardBlock(4).entry(0, 4)
    assert integrate_along_path(path, lambda s: sigma) == pytest.approx(sigma * path.tau)


def test_batch_integral_matches_single_path():
    params = SimParams(0.2, 0.01)
    f = lambda s: s[..., 0] ** 2 + s[..., 5]
    path = sample_path(HadamardBlock(4), params, np.random.default_rng(11))
    batch = simulate(HadamardBlock(4), params, np.random.default_rng(11), 1, integrand=f)[0]
    assert batch.integral[0] == pytest.approx(integrate_along_path(path, f))


def test_endpoint_sampler(rng):
    point, hit = sample_endpoint(HadamardBlock(16), 1e-12, rng)
    assert np.abs(point).max() < 1e-4 and not hit
    eps = 0.01
    pts, _ = sample_endpoint(HadamardBlock(64), eps, rng, size=10_000)
    sq = (pts[:, :64] ** 2).mean(axis=1)
    assert abs(sq.mean() - eps) < 4 * sq.std(ddof=1) / np.sqrt(len(sq))
    with pytest.raises(TypeError):
        sample_endpoint(DenseCovariance(np.eye(2)), eps, rng)


def test_endpoint_sampler_agrees_with_paths():
    cov = HadamardBlock(2**13)
    eps = 0.005
    full = simulate(cov, SimParams(eps), np.random.default_rng(1), 300)[0]
    assert not full.hit.any()
    phi_full = phi(full.endpoints[:, :cov.n], full.endpoints[:, cov.n:])
    pts, _ = sample_endpoint(cov, eps, np.random.default_rng(2), size=300)
    phi_end = phi(pts[:, :cov.n], pts[:, cov.n:])
    se = np.hypot(phi_full.std(ddof=1), phi_end.std(ddof=1)) / np.sqrt(300)
    assert abs(phi_full.mean() - phi_end.mean()) < 4 * se
    assert phi_full.std() == pytest.approx(phi_end.std(), rel=0.25)
