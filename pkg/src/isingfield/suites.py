"""Exact verification suites over the stock corpus and seeded random instances.

Every suite returns a :class:`Report` of PASS/FAIL checks and is pure given
its seed.  ``SUITES`` maps the names accepted by ``isingfield verify --suite``.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .corpus import corpus, gsw_for, ising_for, random_graph, random_ising, random_rc, rc_for
from .coupling import EdgeCoupler, GSWCoupler, verify_sw_rc_convolution
from .exact import (
    Report,
    _bits,
    enumerate_distribution,
    es_pushforward,
    influence_matrix,
    verify_partition_identity,
)
from .glauber import GlauberState, transition_matrix, transition_table
from .model import GSWParams, Graph, RCParams, p_star


def partition_suite(seed: int = 0, count: int = 100) -> Report:
    rng = np.random.default_rng([seed, 1])
    report = Report()
    for i in range(count):
        g = random_graph(rng, 7, 12)
        report.extend(verify_partition_identity(g, random_ising(g, rng), label=f"random{i}"))
    return report


def es_suite(seed: int = 0) -> Report:
    report = Report()
    for entry in corpus(max_vertices=6):
        ising = ising_for(entry, seed)
        rc = RCParams(1.0 - 1.0 / ising.beta, ising.lam)
        pushed = es_pushforward(enumerate_distribution(entry.graph, rc), entry.graph, ising.lam)
        target = enumerate_distribution(entry.graph, ising)
        err = float(np.abs(pushed.probs - target.probs).max()) if target.probs.size else 0.0
        report.add(f"es_pushforward[{entry.name}]", err, 0.0, 1e-10, relative=False)
    return report


def glauber_suite(seed: int = 0) -> Report:
    """Detailed balance, conditional equality and table consistency on corpus graphs with m <= 6."""
    report = Report()
    for entry in corpus(max_edges=6):
        g = entry.graph
        if g.m == 0:
            continue
        rc = rc_for(entry, seed)
        pi = enumerate_distribution(g, rc).probs
        P = transition_matrix(g, rc)
        flow = pi[:, None] * P
        report.add(f"detailed_balance[{entry.name}]", float(np.abs(flow - flow.T).max()), 0.0, 1e-12, relative=False)
        table = transition_table(g, rc)
        cond_err = 0.0
        for x in range(1 << g.m):
            state = GlauberState(g, rc, start=[e for e in range(g.m) if x >> e & 1])
            for e in range(g.m):
                bit = 1 << e
                exact = pi[x | bit] / (pi[x | bit] + pi[x & ~bit])
                cond_err = max(cond_err, abs(state.transition_probability(e) - exact), abs(table[x, e] - exact))
        report.add(f"glauber_conditional[{entry.name}]", cond_err, 0.0, 1e-10, relative=False)
    return report


def influence_suite(seed: int = 0, extra: int = 20, lam_max: float = 0.8) -> Report:
    """``||Psi||_inf <= 2 (1 - lambda_max)^-2`` on enumerated RC instances (m <= 10, lambda_max <= 0.8)."""
    report = Report()
    rng = np.random.default_rng([seed, 5])
    cases: list[tuple[str, Graph, RCParams]] = []
    for entry in corpus(max_edges=10):
        cases.append((entry.name, entry.graph, rc_for(entry, seed, lam_max)))
    for i in range(extra):
        g = random_graph(rng, 7, 10, n_min=2)
        cases.append((f"random{i}", g, random_rc(g, rng, lam_max)))
    for name, g, rc in cases:
        if g.m == 0:
            continue
        bound = 2.0 * (1.0 - rc.lambda_max) ** -2
        inf = influence_matrix(enumerate_distribution(g, rc))
        report.add_bound(f"influence_row[{name}]", inf.norm_inf, bound)
        report.add_bound(f"influence_col[{name}]", inf.max_col_sum, bound)
    return report


def convolution_suite(seed: int = 0, count: int = 30) -> Report:
    rng = np.random.default_rng([seed, 7])
    report = Report()
    for entry in corpus(max_edges=10):
        report.extend(verify_sw_rc_convolution(entry.graph, rc_for(entry, seed), label=entry.name))
    for i in range(count):
        g = random_graph(rng, 7, 10, n_min=2)
        report.extend(verify_sw_rc_convolution(g, random_rc(g, rng), label=f"random{i}"))
    return report


def field_kernel(g: Graph, rc: RCParams, theta: float) -> np.ndarray:
    """Exact field-dynamics kernel with a perfect inner sampler."""
    m = g.m
    size = 1 << m
    bits = _bits(0, size, m)
    count = bits.sum(axis=1)
    tilted = enumerate_distribution(g, RCParams(p_star(rc.p, theta), rc.lam)).probs
    masks = np.arange(size)
    P = np.zeros((size, size))
    for x in range(size):
        for s_prime in range(size):
            w = theta ** count[s_prime] * (1.0 - theta) ** (m - count[s_prime])
            s = s_prime | x
            inside = (masks & ~s) == 0
            target = np.where(inside, tilted, 0.0)
            P[x] += w * target / target.sum()
    return P


def field_suite(seed: int = 0, theta: float = 0.4) -> Report:
    """Tilted-conditional identity (m <= 6) and stationarity of the exact field kernel (m <= 5)."""
    report = Report()
    for entry in corpus(max_edges=6):
        g = entry.graph
        if g.m == 0:
            continue
        rc = rc_for(entry, seed, lam_max=0.9)
        mu = enumerate_distribution(g, rc)
        masks = np.arange(1 << g.m)
        sizes = _bits(0, 1 << g.m, g.m).sum(axis=1)
        tilted_all = mu.probs * theta ** (-sizes.astype(float))
        p_tilted = p_star(rc.p, theta)
        worst = 0.0
        for s in range(1 << g.m):
            lhs = condition_masks(tilted_all, masks, s)
            sub, ids = g.restrict([e for e in range(g.m) if s >> e & 1])
            direct = enumerate_distribution(sub, RCParams(p_tilted[ids], rc.lam)).probs
            rhs = np.zeros(1 << g.m)
            for local, prob in enumerate(direct):
                rhs[sum(1 << ids[i] for i in range(len(ids)) if local >> i & 1)] = prob
            worst = max(worst, float(np.abs(lhs - rhs).max()))
        report.add(f"tilted_conditional[{entry.name}]", worst, 0.0, 1e-10, relative=False)
        if g.m <= 5:
            P = field_kernel(g, rc, theta)
            drift = float(np.abs(mu.probs @ P - mu.probs).max())
            report.add(f"field_stationarity[{entry.name}]", drift, 0.0, 1e-10, relative=False)
    return report


def condition_masks(weights: np.ndarray, masks: np.ndarray, s: int) -> np.ndarray:
    """Normalize ``weights`` restricted to configurations inside ``s``."""
    inside = np.where((masks & ~s) == 0, weights, 0.0)
    return inside / inside.sum()


def coupling_suite(seed: int = 0) -> Report:
    """Exact laws of the vertex and edge couplings: marginals, discrepancy bounds, threshold identity."""
    report = Report()
    for entry in corpus(max_edges=6):
        g = entry.graph
        if g.m == 0:
            continue
        gsw = gsw_for(entry, seed)
        eta_min = float(gsw.eta.min())
        coupler = GSWCoupler(g, gsw, debug=True)
        target = enumerate_distribution(g, gsw).probs
        for u in range(g.n):
            flipped = gsw.sigma.copy()
            flipped[u] ^= 1
            other = enumerate_distribution(g, GSWParams(gsw.p, gsw.eta, flipped)).probs
            joint = coupler.joint(u)
            px, py = np.zeros(1 << g.m), np.zeros(1 << g.m)
            mean = 0.0
            for (xm, ym), prob in joint.items():
                px[xm] += prob
                py[ym] += prob
                mean += prob * bin(xm ^ ym).count("1")
            err = max(float(np.abs(px - target).max()), float(np.abs(py - other).max()))
            report.add(f"couple_marginals[{entry.name},u={u}]", err, 0.0, 1e-10, relative=False)
            report.add_bound(f"couple_mean[{entry.name},u={u}]", mean, 1.0 / (4.0 * eta_min**2))
        report.add(f"threshold_identity[{entry.name}]", float(len(coupler.identity_log) > 0), 1.0, 0.0)
        masks = np.arange(1 << g.m)
        for e in range(g.m):
            has = (masks >> e) & 1
            if target[has == 1].sum() <= 0 or target[has == 0].sum() <= 0:
                continue
            edge = EdgeCoupler(g, gsw, e, coupler)
            report.add_bound(f"edge_mean[{entry.name},e={e}]", edge.exact_mean_discrepancy(), 1.0 / (2.0 * eta_min**2))
    return report


SUITES: dict[str, Callable[..., Report]] = {
    "partition": partition_suite,
    "es": es_suite,
    "glauber": glauber_suite,
    "influence": influence_suite,
    "convolution": convolution_suite,
    "field": field_suite,
    "coupling": coupling_suite,
}


def run_suites(names: list[str] | None = None, seed: int = 0) -> dict[str, Report]:
    chosen = list(SUITES) if not names else names
    return {name: SUITES[name](seed=seed) for name in chosen}


def min_rc_mass_bound(g: Graph, rc: RCParams) -> tuple[float, float]:
    """``(mu(E), (p_min / 2)^(2^n))``; the second is a lower bound for the first."""
    mu = enumerate_distribution(g, rc)
    p_min = float(rc.p.min()) if rc.p.size else 1.0
    return float(mu.probs[-1]), math.exp((2.0**g.n) * math.log(p_min / 2.0)) if p_min > 0 else 0.0
