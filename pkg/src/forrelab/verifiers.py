"""Monte Carlo checks of the stopped-process identities and the advantage bound.

Polynomials over ``k`` blocks use variables ``[i*N, (i+1)*N)`` for block ``i``;
inside a block the first ``n = N/2`` variables are ``x`` and the rest ``y``.
"""
from __future__ import annotations

import functools
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .parallel import Moments, map_chunks, merge_all
from .polynomial import (CapacityError, MultilinearPoly, evaluate, indices_of, partial_derivative,
                         sup_restricted_level_weight)
from .stochastic import CovarianceSpec, SimParams, simulate
from .wht import DimensionError

SE_MULTIPLIER = 3.0


@dataclass
class VerifierReport:
    name: str
    lhs: float
    lhs_se: float
    rhs: float
    rhs_se: float
    trials: int
    threshold: float
    verdict: bool
    params: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def generator_polynomial(p: MultilinearPoly, cov: CovarianceSpec) -> MultilinearPoly:
    """``1/2 <Sigma, Hess p>`` as a multilinear polynomial.

    The Hessian of a multilinear polynomial has zero diagonal, so this is
    ``sum_{i<j} Sigma_ij d_{ij} p``.
    """
    if p.m != cov.N:
        raise DimensionError(f"polynomial has {p.m} variables, covariance has N={cov.N}")
    pairs = set()
    for t in p.coeffs:
        idx = indices_of(t)
        pairs.update((a, b) for pos, a in enumerate(idx) for b in idx[pos + 1:])
    out = MultilinearPoly(p.m)
    for i, j in sorted(pairs):
        s = cov.entry(i, j)
        if s != 0.0:
            out = out + partial_derivative(p, (1 << i) | (1 << j)).scale(s)
    return out


def block_cov_entry(cov: CovarianceSpec, k: int, i: int, j: int) -> float:
    """Entry of ``I_k kron Sigma``: independent blocks."""
    N = cov.N
    return cov.entry(i % N, j % N) if i // N == j // N else 0.0


def _dynkin_chunk(polys, gens, cov, params, strides, rng, size):
    def integrand(states):
        return np.stack([np.broadcast_to(evaluate(g, states), states.shape[:-1]) for g in gens], axis=-1)

    results = simulate(cov, params, rng, size, integrand=integrand, strides=strides)
    zero = np.zeros(cov.N)
    cols = []
    for r in results:
        for e, p in enumerate(polys):
            cols += [evaluate(p, r.endpoints) - evaluate(p, zero), r.integral[:, e]]
    return Moments.of(np.column_stack(cols))


def dynkin_family(polys, cov: CovarianceSpec, params: SimParams, trials: int, seed,
                  *, refine: bool = True, workers: int | None = None) -> list[VerifierReport]:
    """Compare ``E[p(X_tau)] - p(0)`` with ``E[int_0^tau 1/2 <Sigma, Hess p(X_s)> ds]``.

    All polynomials share the same simulated paths. With ``refine`` the same
    noise is also observed on a grid of step ``delta/2``; twice the resulting
    shift in ``LHS - RHS`` is the discretization allowance added to the
    ``3 (SE_L + SE_R)`` threshold.
    """
    polys = list(polys)
    gens = [generator_polynomial(p, cov) for p in polys]
    if refine:
        run_params = SimParams(params.epsilon, params.delta / 2, params.half_width)
        strides = (2, 1)
    else:
        run_params, strides = params, (1,)
    fn = functools.partial(_dynkin_chunk, polys, gens, cov, run_params, strides)
    mom = merge_all(map_chunks(fn, seed, "dynkin", trials, workers=workers))
    P = len(polys)
    reports = []
    for e in range(P):
        lhs, rhs = mom.mean[2 * e], mom.mean[2 * e + 1]
        lhs_se, rhs_se = mom.se[2 * e], mom.se[2 * e + 1]
        extra = {}
        allowance = 0.0
        if refine:
            fine_lhs, fine_rhs = mom.mean[2 * P + 2 * e], mom.mean[2 * P + 2 * e + 1]
            allowance = 2 * abs((lhs - rhs) - (fine_lhs - fine_rhs))
            combined = lhs_se + rhs_se
            extra = {
                "fine_lhs": float(fine_lhs), "fine_rhs": float(fine_rhs),
                "lhs_shift": float(abs(lhs - fine_lhs)), "rhs_shift": float(abs(rhs - fine_rhs)),
                "refinement_stable": bool(max(abs(lhs - fine_lhs), abs(rhs - fine_rhs)) <= combined),
                "bias_allowance": float(allowance),
            }
        threshold = SE_MULTIPLIER * (lhs_se + rhs_se) + allowance
        reports.append(VerifierReport(
            "dynkin", float(lhs), float(lhs_se), float(rhs), float(rhs_se), trials, float(threshold),
            bool(abs(lhs - rhs) <= threshold),
            {"epsilon": params.epsilon, "delta": params.delta, "N": cov.N, "seed": _seed_repr(seed),
             "polynomial": polys[e].to_dict()},
            extra,
        ))
    return reports


def dynkin_check(p: MultilinearPoly, cov: CovarianceSpec, params: SimParams, trials: int, seed,
                 *, refine: bool = True, workers: int | None = None) -> VerifierReport:
    """Single-polynomial form of :func:`dynkin_family`."""
    return dynkin_family([p], cov, params, trials, seed, refine=refine, workers=workers)[0]


def _seed_repr(seed):
    return seed if isinstance(seed, (int, np.integer)) else repr(seed)


def subset_points(blocks: np.ndarray) -> np.ndarray:
    """``(trials, k, N)`` block endpoints to ``(trials, 2^k, kN)`` points ``X^S``."""
    trials, k, N = blocks.shape
    masks = (np.arange(2**k)[:, None] >> np.arange(k)[None, :]) & 1
    pts = blocks[:, None, :, :] * masks[None, :, :, None]
    return pts.reshape(trials, 2**k, k * N)


def subset_signs(k: int) -> np.ndarray:
    return np.array([(-1) ** bin(s).count("1") for s in range(2**k)], dtype=np.float64)


def _block_endpoints(k, cov, params, rng, size):
    r = simulate(cov, params, rng, size * k)[0]
    return r.endpoints.reshape(size, k, cov.N), r.tau.reshape(size, k)


def _difference_chunk(f, k, cov, params, stratified, rng, size):
    blocks, _ = _block_endpoints(k, cov, params, rng, size)
    vals = evaluate(f, subset_points(blocks))
    signs = subset_signs(k)
    rhs = 2 * vals @ signs / 2**k
    if stratified:
        lhs = vals[:, signs > 0].mean(axis=1) - vals[:, signs < 0].mean(axis=1)
    else:
        even = np.flatnonzero(signs > 0)
        odd = np.flatnonzero(signs < 0)
        rows = np.arange(size)
        lhs = vals[rows, even[rng.integers(len(even), size=size)]] - vals[rows, odd[rng.integers(len(odd), size=size)]]
    return Moments.of(np.column_stack([lhs, rhs, lhs - rhs]))


def difference_identity_check(f: MultilinearPoly, k: int, cov: CovarianceSpec, params: SimParams,
                              trials: int, seed, *, stratified: bool = False,
                              workers: int | None = None) -> VerifierReport:
    """``E f(D_even) - E f(D_odd)`` against ``2 E_S[(-1)^|S| f(D_S)]`` on shared block samples.

    ``stratified=False`` draws the even and odd subsets at random, so the two
    sides differ by sampling noise. ``stratified=True`` averages over every
    subset and the sides agree per trial.
    """
    _check_blocks(f, k, cov)
    fn = functools.partial(_difference_chunk, f, k, cov, params, stratified)
    mom = merge_all(map_chunks(fn, seed, f"difference-{int(stratified)}", trials, workers=workers))
    (lhs, rhs, diff), (lse, rse, dse) = mom.mean, mom.se
    threshold = SE_MULTIPLIER * (lse + rse)
    if stratified:
        threshold = max(threshold, 1e-12)
    return VerifierReport(
        "difference_identity", float(lhs), float(lse), float(rhs), float(rse), trials,
        float(threshold), bool(abs(lhs - rhs) <= threshold),
        {"k": k, "N": cov.N, "epsilon": params.epsilon, "delta": params.delta,
         "stratified": stratified, "seed": _seed_repr(seed)},
        {"paired_difference_se": float(dse)},
    )


def _check_blocks(f, k, cov):
    if f.m != k * cov.N:
        raise DimensionError(f"polynomial has {f.m} variables, expected k*N = {k * cov.N}")


def _advantage_chunk(f, k, cov, params, rng, size):
    blocks, tau = _block_endpoints(k, cov, params, rng, size)
    adv = evaluate(f, subset_points(blocks)) @ subset_signs(k) / 2**k
    return Moments.of(np.column_stack([adv, tau.mean(axis=1)]))


def advantage_estimate(f: MultilinearPoly, k: int, cov: CovarianceSpec, params: SimParams,
                       trials: int, seed, *, L: float | None = None,
                       workers: int | None = None) -> VerifierReport:
    """Stratified estimate of ``E_S[(-1)^|S| f(D_S)]`` against ``(eps gamma)^k L``.

    Each trial draws one stopped endpoint per block and evaluates ``f`` on all
    ``2^k`` points ``X^S``. ``L`` defaults to the supremum over restrictions of
    the level-``2k`` weight, which needs ``f.m <= 12``.
    """
    _check_blocks(f, k, cov)
    if L is None:
        try:
            L = sup_restricted_level_weight(f, 2 * k)
        except CapacityError as exc:
            raise CapacityError(f"{exc}; pass L explicitly") from None
    fn = functools.partial(_advantage_chunk, f, k, cov, params)
    mom = merge_all(map_chunks(fn, seed, f"advantage-{k}", trials, workers=workers))
    est, se = float(mom.mean[0]), float(mom.se[0])
    bound = (params.epsilon * cov.gamma) ** k * L
    return VerifierReport(
        "advantage", est, se, float(bound), 0.0, trials, float(bound + SE_MULTIPLIER * se),
        bool(abs(est) <= bound + SE_MULTIPLIER * se),
        {"k": k, "N": cov.N, "epsilon": params.epsilon, "delta": params.delta,
         "gamma": cov.gamma, "L": float(L), "seed": _seed_repr(seed)},
        {"mean_tau": float(mom.mean[1]), "mean_tau_se": float(mom.se[1])},
    )


def monomial_poly(k: int, pairs, N: int) -> MultilinearPoly:
    """``prod_i x^{(i)}_{a_i} y^{(i)}_{b_i}`` over ``k`` blocks of size ``N``."""
    if len(pairs) != k:
        raise ValueError("need one (a, b) pair per block")
    n = N // 2
    idx = []
    for i, (a, b) in enumerate(pairs):
        if not (0 <= a < n and 0 <= b < n):
            raise IndexError((a, b))
        idx += [i * N + a, i * N + n + b]
    return MultilinearPoly.monomial(k * N, idx)


def product_monomial_closed_form(k: int, pairs, cov: CovarianceSpec, mean_tau: float) -> float:
    """``(-1/2)^k prod_i Sigma_{a_i, n+b_i} E[tau]``; only ``S = [k]`` contributes."""
    n = cov.N // 2
    value = (-0.5) ** k
    for a, b in pairs:
        value *= cov.entry(a, n + b) * mean_tau
    return float(value)


def _tau_chunk(cov, params, rng, size):
    return Moments.of(simulate(cov, params, rng, size)[0].tau[:, None])


def mean_stopping_time(cov: CovarianceSpec, params: SimParams, trials: int, seed,
                       *, workers: int | None = None) -> tuple[float, float]:
    fn = functools.partial(_tau_chunk, cov, params)
    mom = merge_all(map_chunks(fn, seed, "mean-tau", trials, workers=workers))
    return float(mom.mean[0]), float(mom.se[0])


def product_monomial_check(k: int, pairs, cov: CovarianceSpec, params: SimParams, trials: int,
                           seed, *, workers: int | None = None) -> VerifierReport:
    """Stratified advantage of a product monomial against its closed form.

    ``E[tau]`` comes from an independent stream; its error enters the
    closed-form SE through the delta method.
    """
    f = monomial_poly(k, pairs, cov.N)
    adv = advantage_estimate(f, k, cov, params, trials, seed, L=1.0, workers=workers)
    tau, tau_se = mean_stopping_time(cov, params, trials, seed, workers=workers)
    value = product_monomial_closed_form(k, pairs, cov, tau)
    value_se = abs(value) * k * tau_se / tau if tau > 0 else 0.0
    threshold = SE_MULTIPLIER * (adv.lhs_se + value_se)
    return VerifierReport(
        "product_monomial", adv.lhs, adv.lhs_se, value, float(value_se), trials, float(threshold),
        bool(abs(adv.lhs - value) <= threshold),
        {**adv.params, "pairs": [list(p) for p in pairs]},
        {"mean_tau": tau, "mean_tau_se": tau_se},
    )


def _moment_chunk(cov, params, entries, rng, size):
    r = simulate(cov, params, rng, size)[0]
    i, j = entries[:, 0], entries[:, 1]
    sigma = np.array([cov.entry(a, b) for a, b in entries])
    resid = r.endpoints[:, i] * r.endpoints[:, j] - sigma[None, :] * r.tau[:, None]
    return Moments.of(np.column_stack([r.endpoints[:, i] * r.endpoints[:, j], r.tau, resid]))


def second_moment_check(cov: CovarianceSpec, params: SimParams, trials: int, seed, entries,
                        *, multiplier: float = 4.0, workers: int | None = None) -> list[VerifierReport]:
    """``E[X_i X_j]`` at the stopping time against ``Sigma_ij E[tau]``, per entry.

    Each verdict uses the SE of the paired residual ``X_i X_j - Sigma_ij tau``.
    """
    entries = np.asarray(entries, dtype=np.int64).reshape(-1, 2)
    fn = functools.partial(_moment_chunk, cov, params, entries)
    mom = merge_all(map_chunks(fn, seed, "second-moment", trials, workers=workers))
    m = len(entries)
    tau, tau_se = mom.mean[m], mom.se[m]
    reports = []
    for e, (a, b) in enumerate(entries):
        s = cov.entry(int(a), int(b))
        resid, resid_se = mom.mean[m + 1 + e], mom.se[m + 1 + e]
        reports.append(VerifierReport(
            f"second_moment[{a},{b}]", float(mom.mean[e]), float(mom.se[e]), float(s * tau),
            float(abs(s) * tau_se), trials, float(multiplier * resid_se),
            bool(abs(resid) <= multiplier * resid_se),
            {"N": cov.N, "epsilon": params.epsilon, "delta": params.delta, "seed": _seed_repr(seed)},
            {"residual": float(resid), "residual_se": float(resid_se)},
        ))
    return reports
