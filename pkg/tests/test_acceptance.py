"""Acceptance criteria, one test each, at their stated tolerances and runtime limits.

Each test prints a ``PASS``/``FAIL`` line (also collected in the terminal
summary) before asserting.  Run alone with ``pytest tests/test_acceptance.py -s``.
"""

import math
import time

import numpy as np
import pytest

from fuzz_dynconn import run_fuzz
from isingfield.bench import bench_dynconn
from isingfield.corpus import corpus, gsw_for
from isingfield.coupling import EdgeCoupler, GSWCoupler, RCLiftCoupler
from isingfield.exact import condition, empirical, enumerate_distribution, mask_of, tv_distance
from isingfield.field import field_dynamics_batch, sample_ising_many, schedule_paper, schedule_practical, t_gd_from
from isingfield.model import GSWParams, Graph, IsingParams, RCParams
from isingfield.suites import (
    convolution_suite,
    coupling_suite,
    es_suite,
    glauber_suite,
    influence_suite,
    partition_suite,
)
from oracles import decimal_schedule

pytestmark = pytest.mark.slow


def summarize(report) -> str:
    bad = [c.name for c in report.checks if not c.passed]
    return f"{len(report.checks)} checks, {len(bad)} failed" + (f": {', '.join(bad[:3])}" if bad else "")


def test_partition_identities(criterion):
    t0 = time.perf_counter()
    report = partition_suite(seed=0, count=100)
    dt = time.perf_counter() - t0
    assert criterion(1, "partition identities", report.passed and dt < 10, f"{summarize(report)}, {dt:.1f}s")


def test_edwards_sokal_pushforward(criterion):
    t0 = time.perf_counter()
    report = es_suite(seed=0)
    dt = time.perf_counter() - t0
    assert criterion(2, "edwards-sokal pushforward", report.passed and dt < 30, f"{summarize(report)}, {dt:.1f}s")


def test_glauber_correctness(criterion):
    t0 = time.perf_counter()
    report = glauber_suite(seed=0)
    dt = time.perf_counter() - t0
    assert criterion(3, "glauber correctness", report.passed and dt < 60, f"{summarize(report)}, {dt:.1f}s")


def test_end_to_end_sampler_tv(criterion):
    t0 = time.perf_counter()
    cycle = Graph(8, [(i, (i + 1) % 8) for i in range(8)])
    rc = RCParams([0.9] * 8, [0.5] * 8)
    sched = schedule_practical(0.1, 8, theta=0.5, t_fd=200, t_gd=160, brute_force_edges=None)
    masks = field_dynamics_batch(cycle, rc, sched, np.random.default_rng(2024), 200_000)
    tv_rc = tv_distance(empirical(masks, 8), enumerate_distribution(cycle, rc))

    k2 = Graph(2, [(0, 1)])
    ising = IsingParams([2.0], [1.0, 1.0])
    draws = sample_ising_many(k2, ising, 0.1, schedule_practical(0.1, 1), np.random.default_rng(2025), 100_000)
    tv_ising = tv_distance(empirical(np.array([mask_of(s) for s in draws]), 2), np.array([2, 1, 1, 2]) / 6)
    dt = time.perf_counter() - t0
    ok = tv_rc <= 0.05 and tv_ising <= 0.02 and dt < 300
    assert criterion(4, "end-to-end sampler TV", ok, f"cycle TV {tv_rc:.4f} <= 0.05, K2 Ising TV {tv_ising:.4f} <= 0.02, {dt:.1f}s")


def test_spectral_independence_bound(criterion):
    t0 = time.perf_counter()
    report = influence_suite(seed=0)
    dt = time.perf_counter() - t0
    worst = max(c.lhs / c.rhs for c in report.checks)
    ok = report.passed and dt < 60
    assert criterion(5, "influence bound", ok, f"{summarize(report)}, worst ratio {worst:.3f}, {dt:.1f}s")


def _marginal_errors(g, coupler, u, params, n, rng):
    xs = np.empty(n, dtype=np.int64)
    ys = np.empty(n, dtype=np.int64)
    d = np.empty(n)
    for i in range(n):
        s = coupler.couple(u, rng)
        xs[i], ys[i] = mask_of(s.x), mask_of(s.y)
        d[i] = s.discrepancy
    sigma = params.sigma.copy()
    sigma[u] ^= 1
    tx = tv_distance(empirical(xs, g.m), enumerate_distribution(g, params))
    ty = tv_distance(empirical(ys, g.m), enumerate_distribution(g, GSWParams(params.p, params.eta, sigma)))
    return max(tx, ty), d.mean(), d.std(ddof=1) / math.sqrt(n)


def test_coupling_bounds(criterion):
    t0 = time.perf_counter()
    n = 100_000
    rng = np.random.default_rng(77)
    failures: list[str] = []
    worst_tv = 0.0

    cases = [("k2-example", Graph(2, [(0, 1)]), GSWParams([0.25], [0.5, 0.5], [1, 1]))]
    cases += [(e.name, e.graph, gsw_for(e, 0)) for e in corpus(max_edges=6) if e.graph.m]
    for name, g, params in cases:
        coupler = GSWCoupler(g, params)
        bound = 1.0 / (4.0 * float(params.eta.min()) ** 2)
        for u in range(g.n):
            tv, mean, err = _marginal_errors(g, coupler, u, params, n, rng)
            worst_tv = max(worst_tv, tv)
            if tv > 0.02:
                failures.append(f"marginal {name} u={u} TV {tv:.4f}")
            if mean > bound + 3 * err:
                failures.append(f"vertex mean {name} u={u} {mean:.3f} > {bound:.3f}")

    triangle = Graph(3, [(0, 1), (1, 2), (0, 2)])
    edge = EdgeCoupler(triangle, GSWParams([0.25] * 3, [0.8] * 3, [1, 1, 1]), 0)
    d = np.array([edge(rng).discrepancy for _ in range(n)], dtype=float)
    edge_mean, edge_err = d.mean(), d.std(ddof=1) / math.sqrt(n)
    if edge_mean > 1 / (2 * 0.64) + 3 * edge_err:
        failures.append(f"edge mean {edge_mean:.3f}")

    rc = RCParams([0.5] * 3, [0.5] * 3)
    mu = enumerate_distribution(triangle, rc)
    lift = RCLiftCoupler(triangle, rc, 0)
    pairs = [lift(rng) for _ in range(n)]
    lift_tv = max(
        tv_distance(empirical(np.array([mask_of(s.x) for s in pairs]), 3), condition(mu, set(), {0})),
        tv_distance(empirical(np.array([mask_of(s.y) for s in pairs]), 3), condition(mu, {0}, {0})),
    )
    if lift_tv > 0.02:
        failures.append(f"rc lift marginal TV {lift_tv:.4f}")

    cycle = Graph(8, [(i, (i + 1) % 8) for i in range(8)])
    tail_coupler = GSWCoupler(cycle, GSWParams([0.25] * 8, [0.5] * 8, [1] * 8))
    visited = np.array([tail_coupler.couple(0, rng).visited for _ in range(n)])
    ratio = 0.5 / 1.5
    for k in range(1, int(visited.max()) + 1):
        freq, bound = float((visited >= k).mean()), ratio ** (k - 1)
        if freq > bound + 3 * math.sqrt(bound * (1 - bound) / n) + 1e-12:
            failures.append(f"tail k={k} {freq:.4f} > {bound:.4f}")

    exact = coupling_suite(seed=0)
    if not exact.passed:
        failures.append("exact coupling suite: " + summarize(exact))
    dt = time.perf_counter() - t0
    detail = (
        f"{len(cases)} instances, worst marginal TV {worst_tv:.4f}, triangle edge mean {edge_mean:.3f} <= 0.781, "
        f"lift TV {lift_tv:.4f}, max visited {int(visited.max())}, {dt:.1f}s"
    )
    if failures:
        detail += "; " + "; ".join(failures[:4])
    assert criterion(6, "coupling bounds", not failures and dt < 300, detail)


def test_convolution_identity(criterion):
    t0 = time.perf_counter()
    report = convolution_suite(seed=0, count=30)
    dt = time.perf_counter() - t0
    assert criterion(7, "convolution identity", report.passed and dt < 10, f"{summarize(report)}, {dt:.1f}s")


def test_dynamic_connectivity(criterion):
    t0 = time.perf_counter()
    results = [run_fuzz(n, 100_000, seed=n) for n in (10, 100, 1000)]
    fuzz_ok = all(r.mismatches == 0 and r.worst_log_rel <= 1e-9 for r in results)
    small = bench_dynconn(1000, 20_000, np.random.default_rng(1))
    large = bench_dynconn(100_000, 20_000, np.random.default_rng(2))
    ratio = large.us_per_op / small.us_per_op
    dt = time.perf_counter() - t0
    detail = (
        f"{sum(r.queries for r in results)} queries, {sum(r.mismatches for r in results)} mismatches, "
        f"worst log rel {max(r.worst_log_rel for r in results):.1e}; per-op {small.us_per_op:.1f}us at 1e3, "
        f"{large.us_per_op:.1f}us at 1e5, ratio {ratio:.2f} <= 4; {dt:.1f}s"
    )
    assert criterion(8, "dynamic connectivity", fuzz_ok and ratio <= 4 and dt < 300, detail)


def test_schedule_formulas(criterion):
    sched = schedule_paper(0.5, 0.5, 0.5, 100, 200)
    k_want = math.exp(decimal_schedule(0.5, 0.5, 0.5, 100, 200)["log_k"])
    t_gd = t_gd_from(math.log(100), 50, 0.5)[0]
    grid = [
        (eps, p_min, lam, n, m)
        for eps in (0.5, 0.1, 0.01)
        for p_min in (0.1, 0.5, 0.9)
        for lam in (0.0, 0.5, 0.8)
        for n, m in ((3, 3), (100, 200), (10**6, 3 * 10**6))
    ]
    worst = 0.0
    for args in grid:
        got = schedule_paper(*args)
        for name, value in decimal_schedule(*args).items():
            worst = max(worst, abs(getattr(got, name) - value) / abs(value) if value else abs(getattr(got, name)))
    ok = abs(sched.k / k_want - 1) <= 1e-9 and t_gd == 991 and worst <= 1e-9
    detail = f"K {sched.k:.6e} vs {k_want:.6e}, T_GD {t_gd}, {len(grid)} table rows worst log rel {worst:.1e}"
    assert criterion(9, "schedule formulas", ok, detail)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
