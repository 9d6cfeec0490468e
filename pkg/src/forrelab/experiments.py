"""Seeded experiment runner: concentration, stopping-time tail, rounding, and the verifier suite.

Every check returns :class:`Row` objects. A row's verdict is a pure function
of ``(estimate, threshold, rule)``, so emitted tables can be re-audited.
Headers never record the worker count: output bytes depend only on the
configuration and seed.
"""
from __future__ import annotations

import csv
import functools
import io
import json
import math
from dataclasses import asdict, dataclass, field
from importlib import resources
from typing import Any, Callable

import numpy as np
import yaml

from . import __version__
from .forrelation import block_phi, forrelation_k, parity_subsets, round_to_cube
from .parallel import chunk_rng, default_workers, map_chunks, stream_key
from .polynomial import (MultilinearPoly, cube_points, evaluate, exact_restriction_expectation,
                         from_truth_table, indices_of, mask_of, partial_derivative, restricted_derivative_at_zero,
                         sample_restrictions, sup_restricted_level_weight)
from .stochastic import DenseCovariance, HadamardBlock, SimParams, default_epsilon, sample_endpoint, simulate
from .verifiers import (advantage_estimate, difference_identity_check, dynkin_family, monomial_poly,
                        product_monomial_check, second_moment_check)
from .wht import DimensionError, fwht, hadamard_matrix, is_power_of_two

RULES = ("ge", "le", "abs_le", "info")
ENDPOINT_ONLY_MIN_N = 2**16


@dataclass
class Row:
    check: str
    metric: str
    estimate: float
    se: float
    threshold: float
    rule: str
    verdict: bool | None = None

    def __post_init__(self):
        if self.rule not in RULES:
            raise ValueError(f"unknown rule {self.rule!r}")
        self.estimate = float(self.estimate)
        self.se = float(self.se)
        self.threshold = float(self.threshold)
        self.verdict = recompute_verdict(self.estimate, self.threshold, self.rule)


def recompute_verdict(estimate: float, threshold: float, rule: str) -> bool | None:
    if rule == "ge":
        return bool(estimate >= threshold)
    if rule == "le":
        return bool(estimate <= threshold)
    if rule == "abs_le":
        return bool(abs(estimate) <= threshold)
    return None


@dataclass
class ResultTable:
    header: dict
    rows: list[Row] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.verdict is not False for r in self.rows)

    def failures(self) -> list[Row]:
        return [r for r in self.rows if r.verdict is False]

    def to_csv(self) -> str:
        buf = io.StringIO()
        for key in sorted(self.header):
            buf.write(f"# {key}: {json.dumps(self.header[key], sort_keys=True)}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["check", "metric", "estimate", "se", "threshold", "rule", "verdict"])
        for r in self.rows:
            verdict = "" if r.verdict is None else ("pass" if r.verdict else "fail")
            w.writerow([r.check, r.metric, _g17(r.estimate), _g17(r.se), _g17(r.threshold), r.rule, verdict])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"header": self.header, "rows": [asdict(r) for r in self.rows]},
                          sort_keys=True, indent=1) + "\n"

    def render(self, fmt: str) -> str:
        if fmt == "csv":
            return self.to_csv()
        if fmt == "json":
            return self.to_json()
        raise ValueError(f"unknown format {fmt!r}")


def _g17(x: float) -> str:
    return format(x, ".17g")


def read_csv_rows(text: str) -> list[Row]:
    body = "\n".join(line for line in text.splitlines() if not line.startswith("#"))
    rows = []
    for rec in csv.DictReader(io.StringIO(body)):
        rows.append(Row(rec["check"], rec["metric"], float(rec["estimate"]), float(rec["se"]),
                        float(rec["threshold"]), rec["rule"]))
    return rows


# --- configuration -----------------------------------------------------------------

@dataclass
class ExperimentConfig:
    experiment: str = "suite"
    N: int | None = None
    k: int | None = None
    epsilon: float | str | None = None
    delta: float | None = None
    trials: int | None = None
    seed: int = 42
    workers: int = field(default_factory=default_workers)
    output: str | None = None
    format: str = "csv"
    sections: dict = field(default_factory=dict)

    def section(self, name: str | None = None) -> dict:
        """The named config section with top-level overrides applied."""
        name = name or self.experiment
        sec = dict(self.sections.get(name, {}))
        for key in ("N", "k", "epsilon", "delta", "trials"):
            val = getattr(self, key)
            if val is not None:
                sec[key] = val
        return sec


def packaged_config(name: str = "acceptance") -> dict:
    text = resources.files("forrelab").joinpath("configs", f"{name}.yaml").read_text()
    return yaml.safe_load(text)


def load_config(path: str | None = None, *, profile: str = "acceptance", **overrides) -> ExperimentConfig:
    """Read a YAML config (or a packaged profile) and apply keyword overrides."""
    if path is None:
        data = packaged_config(profile)
    else:
        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
    top = {k: data[k] for k in ("seed", "workers", "format", "output") if k in data}
    sections = {k: v for k, v in data.items() if isinstance(v, dict)}
    cfg = ExperimentConfig(sections=sections, **top)
    for key, val in overrides.items():
        if val is not None:
            setattr(cfg, key, val)
    return cfg


def resolve_epsilon(value, N: int, k: int) -> float:
    if value is None or value == "default":
        return default_epsilon(N, k)
    eps = float(value)
    if not 0 < eps <= 1:
        raise ValueError("epsilon must lie in (0, 1]")
    return eps


def _check_N(N: int) -> int:
    N = int(N)
    if N < 2 or N % 2 or not is_power_of_two(N // 2):
        raise DimensionError(f"N={N} must be 2n with n a power of two")
    return N


def _seed_for(seed: int, label: str) -> np.random.Generator:
    return chunk_rng(int(seed), stream_key(label), 0)


# --- transform, Fourier and restriction checks -----------------------------------

def check_transform(sec: dict, seed: int, workers: int) -> list[Row]:
    rng = _seed_for(seed, "transform")
    vectors = int(sec.get("vectors", 100))
    worst_naive = worst_parseval = 0.0
    n = 2
    while n <= int(sec.get("max_n", 1024)):
        v = rng.standard_normal((vectors, n))
        out = fwht(v)
        worst_naive = max(worst_naive, float(np.abs(out - v @ hadamard_matrix(n)).max()))
        ratio = np.linalg.norm(out, axis=1) / np.linalg.norm(v, axis=1)
        worst_parseval = max(worst_parseval, float(np.abs(ratio - 1).max()))
        n *= 2
    return [Row("transform", "max_abs_error_vs_naive", worst_naive, 0, 1e-10, "le"),
            Row("transform", "parseval_max_rel_error", worst_parseval, 0, 1e-12, "le")]


def random_boolean(m: int, rng: np.random.Generator) -> MultilinearPoly:
    return from_truth_table(np.where(rng.random(2**m) < 0.5, 1.0, -1.0))


def check_fourier(sec: dict, seed: int, workers: int) -> list[Row]:
    rng = _seed_for(seed, "fourier")
    worst = 0.0
    for _ in range(int(sec.get("functions", 50))):
        m = int(rng.integers(1, int(sec.get("max_m", 10)) + 1))
        table = np.where(rng.random(2**m) < 0.5, 1.0, -1.0)
        worst = max(worst, float(np.abs(evaluate(from_truth_table(table), cube_points(m)) - table).max()))
    return [Row("fourier", "roundtrip_max_abs_error", worst, 0, 1e-12, "le")]


def random_sparse_poly(m: int, rng: np.random.Generator, max_terms: int = 12) -> MultilinearPoly:
    terms = int(rng.integers(1, max_terms + 1))
    return MultilinearPoly(m, {int(rng.integers(0, 2**m)): float(rng.standard_normal()) for _ in range(terms)})


def check_restriction(sec: dict, seed: int, workers: int) -> list[Row]:
    rng = _seed_for(seed, "restriction")
    max_m = int(sec.get("max_m", 8))
    worst = 0.0
    cases = []
    for _ in range(int(sec.get("cases", 100))):
        m = int(rng.integers(1, max_m + 1))
        p = random_sparse_poly(m, rng)
        term = list(p.coeffs)[int(rng.integers(len(p)))] if len(p) else 0
        S = term & int(rng.integers(0, 2**m))
        x = rng.uniform(-0.5, 0.5, m)
        lhs = 2 ** bin(S).count("1") * exact_restriction_expectation(p, S, x)
        rhs = evaluate(partial_derivative(p, S), x)
        worst = max(worst, abs(lhs - rhs))
        cases.append((p, S, x))
    rows = [Row("restriction", "exact_identity_max_abs_error", worst, 0, 1e-9, "le")]
    draws = int(sec.get("mc_draws", 100_000))
    worst_z = 0.0
    for p, S, x in cases[: int(sec.get("mc_cases", 10))]:
        vals = restricted_derivative_at_zero(p, S, sample_restrictions(x, rng, draws))
        se = vals.std(ddof=1) / math.sqrt(draws)
        exact = exact_restriction_expectation(p, S, x)
        z = abs(vals.mean() - exact) / se if se > 0 else (0.0 if vals.mean() == exact else math.inf)
        worst_z = max(worst_z, z)
    rows.append(Row("restriction", "monte_carlo_max_z", worst_z, 0, 4.0, "le"))
    return rows


# --- stochastic identity checks ------------------------------------------------------

def _dense_sigma(sec: dict) -> np.ndarray:
    return np.array(sec.get("dense_sigma", [[1, 0.3, -0.2, 0.0], [0.3, 1, 0.1, 0.25],
                                            [-0.2, 0.1, 1, 0.4], [0.0, 0.25, 0.4, 1]]), dtype=float)


def bilinear_family(N: int) -> list[MultilinearPoly]:
    n = N // 2
    return [
        MultilinearPoly.monomial(N, [0, n]),
        MultilinearPoly.monomial(N, [1, n + 1]),
        MultilinearPoly.monomial(N, [0, n + 1]),
        MultilinearPoly.monomial(N, [0, 1]),
        MultilinearPoly(N, {mask_of([2, n + 3]): 0.5, mask_of([1, n + 2]): -2.0, 0: 1.0}),
    ]


def dense_bilinear_family(N: int) -> list[MultilinearPoly]:
    return [MultilinearPoly.monomial(N, [i, j]) for i in range(N) for j in range(i + 1, N)]


def extra_dynkin_family(N: int) -> list[MultilinearPoly]:
    n = N // 2
    return [
        MultilinearPoly(N, {mask_of([0]): 1.0, mask_of([n]): -0.5}),
        MultilinearPoly.monomial(N, [0, 1, n, n + 1]),
    ]


def bilinear_closed_form(p: MultilinearPoly, cov, epsilon: float) -> float:
    total = 0.0
    for mask, c in p.coeffs.items():
        idx = indices_of(mask)
        if len(idx) == 2:
            total += c * cov.entry(*idx) * epsilon
        elif len(idx) > 2:
            raise ValueError("closed form covers degree <= 2")
    return total


def _dynkin_rows(label, cov, polys, params, trials, seed, workers, closed_form: bool) -> list[Row]:
    rows = []
    floor = 1e-15
    for e, rep in enumerate(dynkin_family(polys, cov, params, trials, seed, workers=workers)):
        tag = f"{label}[{e}]"
        comb = rep.lhs_se + rep.rhs_se
        rows.append(Row("dynkin", f"{tag}.lhs_minus_rhs", rep.lhs - rep.rhs, comb, rep.threshold, "abs_le"))
        rows.append(Row("dynkin", f"{tag}.refine_shift_lhs", rep.extra["lhs_shift"], comb, comb + floor, "le"))
        rows.append(Row("dynkin", f"{tag}.refine_shift_rhs", rep.extra["rhs_shift"], comb, comb + floor, "le"))
        if closed_form:
            cf = bilinear_closed_form(polys[e], cov, params.epsilon)
            tol = 3 * comb + floor * max(1.0, abs(cf))
            rows.append(Row("dynkin", f"{tag}.lhs_minus_closed_form", rep.lhs - cf, comb, tol, "abs_le"))
            rows.append(Row("dynkin", f"{tag}.rhs_minus_closed_form", rep.rhs - cf, comb, tol, "abs_le"))
    return rows


def check_dynkin(sec: dict, seed: int, workers: int) -> list[Row]:
    N = _check_N(sec.get("N", 128))
    trials = int(sec.get("trials", 100_000))
    eps = resolve_epsilon(sec.get("epsilon", 0.005), N, 1)
    params = SimParams(eps, sec.get("delta"))
    rows = _dynkin_rows("hadamard", HadamardBlock(N // 2), bilinear_family(N), params, trials, seed,
                        workers, True)
    dense = DenseCovariance(_dense_sigma(sec))
    rows += _dynkin_rows("dense", dense, dense_bilinear_family(dense.N), params, trials, seed + 1,
                         workers, True)
    if sec.get("extended", False):
        rows += _dynkin_rows("hadamard_extra", HadamardBlock(N // 2), extra_dynkin_family(N), params,
                             trials, seed + 2, workers, False)
        rows += _dynkin_rows("dense_extra", dense, [MultilinearPoly.monomial(dense.N, range(dense.N))],
                             params, trials, seed + 3, workers, False)
    return rows


def check_second_moment(sec: dict, seed: int, workers: int) -> list[Row]:
    N = _check_N(sec.get("N", 64))
    cov = HadamardBlock(N // 2)
    params = SimParams(resolve_epsilon(sec.get("epsilon", 0.02), N, 1), sec.get("delta"))
    rng = _seed_for(seed, "second-moment-entries")
    count = int(sec.get("entries", 10))
    n = N // 2
    # mix diagonal, cross-half (nonzero) and unrestricted entries
    entries = [(int(i), int(i)) for i in rng.integers(0, N, 2)]
    entries += [(int(i), int(n + j)) for i, j in rng.integers(0, n, (count // 2, 2))]
    entries += [tuple(int(v) for v in rng.integers(0, N, 2)) for _ in range(count - len(entries))]
    reports = second_moment_check(cov, params, int(sec.get("trials", 100_000)), seed, entries,
                                  workers=workers)
    return [Row("second_moment", r.name, r.extra["residual"], r.extra["residual_se"], r.threshold, "abs_le")
            for r in reports]


def check_difference(sec: dict, seed: int, workers: int) -> list[Row]:
    N = _check_N(sec.get("N", 4))
    cov = HadamardBlock(N // 2)
    params = SimParams(resolve_epsilon(sec.get("epsilon", 0.05), N, 1), sec.get("delta"))
    trials = int(sec.get("trials", 10_000))
    rng = _seed_for(seed, "difference-functions")
    rows = []
    for k in sec.get("ks", [1, 2, 3]):
        k = int(k)
        funcs = {"monomial": monomial_poly(k, [(0, 0)] * k, N),
                 "random_boolean": random_boolean(k * N, rng)}
        for name, f in funcs.items():
            for stratified in (False, True):
                rep = difference_identity_check(f, k, cov, params, trials, seed + k, stratified=stratified,
                                                workers=workers)
                label = f"k={k}.{name}.{'exhaustive' if stratified else 'sampled'}"
                rows.append(Row("difference", label, rep.lhs - rep.rhs, rep.lhs_se + rep.rhs_se,
                                rep.threshold, "abs_le"))
    return rows


def _majority3(N: int) -> MultilinearPoly:
    n = N // 2
    picks = [0, n, 1 if n > 1 else N - 1]
    table = [1.0 if sum(x[i] for i in picks) > 0 else -1.0 for x in cube_points(N)]
    return from_truth_table(table)


def sweep_functions(N: int) -> dict[str, MultilinearPoly]:
    out = {f"parity{mask:#x}": MultilinearPoly(N, {mask: 1.0}) for mask in range(1, 2**N)}
    out.update({f"dictator{i}": MultilinearPoly.monomial(N, [i]) for i in range(N)})
    out["majority3"] = _majority3(N)
    return out


def check_advantage(sec: dict, seed: int, workers: int) -> list[Row]:
    N = _check_N(sec.get("N", 4))
    cov = HadamardBlock(N // 2)
    params = SimParams(resolve_epsilon(sec.get("epsilon", 0.05), N, 1), sec.get("delta"))
    rng = _seed_for(seed, "advantage-functions")
    rows = []
    max_se_frac = 0.0
    for k, count, trials in ((1, sec.get("random_k1", 100), sec.get("trials_k1", 4000)),
                             (2, sec.get("random_k2", 30), sec.get("trials_k2", 10_000))):
        funcs = {f"random{i}": random_boolean(k * N, rng) for i in range(int(count))}
        if k == 1:
            funcs.update(sweep_functions(N))
        failures = 0
        worst_ratio = 0.0
        for name, f in funcs.items():
            rep = advantage_estimate(f, k, cov, params, int(trials), seed + k, workers=workers)
            failures += not rep.verdict
            bound = rep.rhs
            worst_ratio = max(worst_ratio, (abs(rep.lhs) - 3 * rep.lhs_se) / bound if bound > 0 else
                              (0.0 if abs(rep.lhs) <= 3 * rep.lhs_se else math.inf))
            if bound > 0:
                max_se_frac = max(max_se_frac, rep.lhs_se / bound)
            rows.append(Row("advantage", f"k={k}.{name}", abs(rep.lhs), rep.lhs_se, rep.threshold, "le"))
        rows.append(Row("advantage", f"k={k}.worst_excess_ratio", worst_ratio, 0, 1.0, "le"))
    rows.append(Row("advantage", "max_se_over_bound", max_se_frac, 0, float(sec.get("se_fraction", 0.1)), "le"))
    tight = advantage_estimate(monomial_poly(1, [(0, 0)], N), 1, cov, params,
                               int(sec.get("trials_tight", 20_000)), seed + 7, workers=workers)
    quarter = 0.25 * params.epsilon * cov.gamma
    rows.append(Row("advantage", "k=1.monomial_tightness", abs(tight.lhs) - 3 * tight.lhs_se, tight.lhs_se,
                    quarter, "ge"))
    return rows


def check_product_monomial(sec: dict, seed: int, workers: int) -> list[Row]:
    N = _check_N(sec.get("N", 4))
    cov = HadamardBlock(N // 2)
    params = SimParams(resolve_epsilon(sec.get("epsilon", 0.05), N, 1), sec.get("delta"))
    trials = int(sec.get("trials", 40_000))
    n = N // 2
    cases = [[(0, 0)], [(n - 1, n - 1)], [(0, 0), (0, 0)], [(0, 0), (n - 1, n - 1)]]
    rows = []
    for e, pairs in enumerate(cases):
        rep = product_monomial_check(len(pairs), pairs, cov, params, trials, seed + e, workers=workers)
        rows.append(Row("product_monomial", f"k={len(pairs)}.pairs={pairs}".replace(" ", ""),
                        rep.lhs - rep.rhs, rep.lhs_se + rep.rhs_se, rep.threshold, "abs_le"))
    return rows


# --- concentration experiments ---------------------------------------------------------

def _phi1(block) -> float:
    return float(block_phi(block)[0])


def _live_block(cov, params, endpoint_only, rng, count):
    if endpoint_only:
        pts, hit = sample_endpoint(cov, params.epsilon, rng, size=count, half_width=params.half_width)
    else:
        res = simulate(cov, params, rng, count)[0]
        pts, hit = res.endpoints, res.hit
    return np.clip(pts, -params.half_width, params.half_width), hit


def _concentration_chunk(N, k, params, endpoint_only, rng, size):
    cov = HadamardBlock(N // 2)
    eps = params.epsilon
    out = np.zeros((size, 9))
    for t in range(size):
        z, hit = _live_block(cov, params, endpoint_only, rng, 1)
        zt = round_to_cube(z[0], rng)
        phi_z, phi_zt = _phi1(z[0]), _phi1(zt)
        u = np.where(rng.random(N) < 0.5, 1, -1).astype(np.int8)
        phi_u = _phi1(u)
        out[t, 0] = phi_zt >= 0.75 * eps
        out[t, 1] = phi_z >= 0.75 * eps
        out[t, 2] = phi_u <= eps / 4
        out[t, 3] = hit[0]
        for col, parity, want in ((4, "even", 1), (6, "odd", -1)):
            subsets = parity_subsets(k, parity)
            S = subsets[int(rng.integers(len(subsets)))]
            blocks = np.zeros((k, N))
            live = [i for i in range(k) if S >> i & 1]
            if live:
                blocks[live] = _live_block(cov, params, endpoint_only, rng, len(live))[0]
            decision = forrelation_k(round_to_cube(blocks.reshape(-1), rng), k, eps)
            out[t, col] = decision == want
            out[t, col + 1] = decision == 0
        out[t, 8] = phi_u
    return out


def _rate_row(check, metric, values, threshold, rule):
    p = float(np.mean(values))
    se = math.sqrt(p * (1 - p) / len(values)) if len(values) > 1 else 0.0
    return Row(check, metric, p, se, threshold, rule)


def check_concentration(sec: dict, seed: int, workers: int) -> list[Row]:
    N = _check_N(sec.get("N", 2**20))
    k = int(sec.get("k", 2))
    eps = resolve_epsilon(sec.get("epsilon", 0.01), N, k)
    params = SimParams(eps, sec.get("delta"))
    endpoint_only = sec.get("endpoint_only")
    if endpoint_only is None:
        endpoint_only = N >= ENDPOINT_ONLY_MIN_N
    th = {"walk": 0.9, "uniform": 0.9, "decision": 0.8, **sec.get("thresholds", {})}
    fn = functools.partial(_concentration_chunk, N, k, params, bool(endpoint_only))
    data = np.vstack(map_chunks(fn, seed, "concentration", int(sec.get("trials", 500)),
                                workers=workers, chunk=4))
    return [
        _rate_row("concentration", "P[phi(rounded D_1) >= 3eps/4]", data[:, 0], th["walk"], "ge"),
        _rate_row("concentration", "P[phi(D_1) >= 3eps/4]", data[:, 1], th["walk"], "ge"),
        _rate_row("concentration", "P_uniform[phi <= eps/4]", data[:, 2], th["uniform"], "ge"),
        _rate_row("concentration", "D_1 endpoint outside box", data[:, 3], 0, "info"),
        _rate_row("concentration", f"P[F^({k}) = +1 | rounded D_even]", data[:, 4], th["decision"], "ge"),
        _rate_row("concentration", f"P[F^({k}) undefined | rounded D_even]", data[:, 5], 0, "info"),
        _rate_row("concentration", f"P[F^({k}) = -1 | rounded D_odd]", data[:, 6], th["decision"], "ge"),
        _rate_row("concentration", f"P[F^({k}) undefined | rounded D_odd]", data[:, 7], 0, "info"),
        Row("concentration", "mean phi under uniform", float(data[:, 8].mean()),
            float(data[:, 8].std(ddof=1) / math.sqrt(len(data))) if len(data) > 1 else 0.0, 0, "info"),
    ]


def _rounding_chunk(N, params, endpoint_only, rng, size):
    cov = HadamardBlock(N // 2)
    out = np.zeros((size, 2))
    for t in range(size):
        z = _live_block(cov, params, endpoint_only, rng, 1)[0][0]
        diff = _phi1(round_to_cube(z, rng)) - _phi1(z)
        out[t] = abs(diff) > params.epsilon / 4, diff
    return out


def check_rounding(sec: dict, seed: int, workers: int) -> list[Row]:
    N = _check_N(sec.get("N", 2**20))
    eps = resolve_epsilon(sec.get("epsilon", 0.01), N, 1)
    params = SimParams(eps, sec.get("delta"))
    endpoint_only = sec.get("endpoint_only")
    if endpoint_only is None:
        endpoint_only = N >= ENDPOINT_ONLY_MIN_N
    fn = functools.partial(_rounding_chunk, N, params, bool(endpoint_only))
    data = np.vstack(map_chunks(fn, seed, "rounding", int(sec.get("trials", 200)), workers=workers, chunk=4))
    diffs = data[:, 1]
    return [
        _rate_row("rounding", "P[|phi(rounded z) - phi(z)| > eps/4]", data[:, 0],
                  float(sec.get("threshold", 0.05)), "le"),
        Row("rounding", "sd of phi(rounded z) - phi(z)", float(diffs.std(ddof=1)) if len(diffs) > 1 else 0.0,
            0, 1 / math.sqrt(N // 2), "info"),
    ]


def doob_tail_bound(N: int, k: int, epsilon: float) -> float:
    """Union bound ``2 N exp(-1/(4 eps))``; equals ``2 / N^(7k^2 - 1)`` at the default horizon."""
    return min(1.0, 2.0 * N * math.exp(-1.0 / (4.0 * epsilon)))


def _tau_chunk(N, params, rng, size):
    r = simulate(HadamardBlock(N // 2), params, rng, size)[0]
    return (r.tau < params.epsilon).astype(float)


def check_tau_tail(sec: dict, seed: int, workers: int) -> list[Row]:
    N = _check_N(sec.get("N", 1024))
    k = int(sec.get("k", 1))
    eps = resolve_epsilon(sec.get("epsilon", "default"), N, k)
    params = SimParams(eps, sec.get("delta"))
    fn = functools.partial(_tau_chunk, N, params)
    early = np.concatenate(map_chunks(fn, seed, "tau-tail", int(sec.get("trials", 1000)), workers=workers,
                                      chunk=100))
    bound = doob_tail_bound(N, k, eps)
    return [_rate_row("tau_tail", "P[tau < eps]", early, bound, "le"),
            Row("tau_tail", "epsilon", eps, 0, 0, "info")]


CHECKS: dict[str, Callable[[dict, int, int], list[Row]]] = {
    "transform": check_transform,
    "fourier": check_fourier,
    "restriction": check_restriction,
    "dynkin": check_dynkin,
    "second-moment": check_second_moment,
    "difference": check_difference,
    "advantage": check_advantage,
    "product-monomial": check_product_monomial,
    "concentration": check_concentration,
    "rounding": check_rounding,
    "tau-tail": check_tau_tail,
}


def _header(cfg: ExperimentConfig, sections: dict) -> dict:
    return {"experiment": cfg.experiment, "seed": cfg.seed, "version": __version__,
            "config": sections}


def run_check(name: str, cfg: ExperimentConfig) -> ResultTable:
    sec = cfg.section(name)
    rows = CHECKS[name](sec, cfg.seed, cfg.workers)
    return ResultTable(_header(cfg, {name: sec}), rows)


def run_concentration(cfg: ExperimentConfig) -> ResultTable:
    return run_check("concentration", cfg)


def run_tau_tail(cfg: ExperimentConfig) -> ResultTable:
    return run_check("tau-tail", cfg)


def run_rounding(cfg: ExperimentConfig) -> ResultTable:
    return run_check("rounding", cfg)


def run_dynkin(cfg: ExperimentConfig) -> ResultTable:
    return run_check("dynkin", cfg)


def run_advantage(cfg: ExperimentConfig) -> ResultTable:
    return run_check("advantage", cfg)


def run_suite(cfg: ExperimentConfig) -> ResultTable:
    """Every check with a section in the config, in a fixed order."""
    sections = {name: dict(cfg.sections[name]) for name in CHECKS if name in cfg.sections}
    rows: list[Row] = []
    for name, sec in sections.items():
        rows += CHECKS[name](sec, cfg.seed, cfg.workers)
    return ResultTable(_header(cfg, sections), rows)
