"""Stock small graphs and seeded random parameters for the verification suites."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import GSWParams, Graph, IsingParams, RCParams


@dataclass(frozen=True)
class CorpusGraph:
    name: str
    graph: Graph


def _cycle(n: int) -> list[tuple[int, int]]:
    return [(i, (i + 1) % n) for i in range(n)]


def stock_graphs() -> list[CorpusGraph]:
    """Named graphs with at most 6 vertices and 6 edges, plus one 8-edge cycle."""
    table = [
        ("k2", 2, [(0, 1)]),
        ("p3", 3, [(0, 1), (1, 2)]),
        ("triangle", 3, _cycle(3)),
        ("c4", 4, _cycle(4)),
        ("star4", 4, [(0, 1), (0, 2), (0, 3)]),
        ("k4", 4, [(a, b) for a in range(4) for b in range(a + 1, 4)]),
        ("bowtie", 5, [(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (2, 4)]),
        ("multi", 3, [(0, 1), (0, 1), (1, 2)]),
        ("isolated", 3, [(0, 1)]),
        ("c5", 5, _cycle(5)),
        ("paw", 4, [(0, 1), (1, 2), (0, 2), (2, 3)]),
        ("two_k2", 4, [(0, 1), (2, 3)]),
        ("edgeless", 2, []),
        ("c8", 8, _cycle(8)),
    ]
    return [CorpusGraph(name, Graph(n, edges)) for name, n, edges in table]


def corpus(max_edges: int | None = None, max_vertices: int | None = None) -> list[CorpusGraph]:
    out = []
    for entry in stock_graphs():
        if max_edges is not None and entry.graph.m > max_edges:
            continue
        if max_vertices is not None and entry.graph.n > max_vertices:
            continue
        out.append(entry)
    return out


def random_graph(rng: np.random.Generator, n_max: int, m_max: int, n_min: int = 1) -> Graph:
    """Uniform edge picks over vertex pairs; parallel edges allowed, self-loops not."""
    n = int(rng.integers(max(n_min, 1), n_max + 1))
    if n < 2:
        return Graph(n, [])
    m = int(rng.integers(0, m_max + 1))
    edges = []
    for _ in range(m):
        u, v = rng.choice(n, size=2, replace=False)
        edges.append((int(u), int(v)))
    return Graph(n, edges)


def random_rc(g: Graph, rng: np.random.Generator, lam_max: float = 1.0, p_range=(0.05, 0.95)) -> RCParams:
    p = rng.uniform(*p_range, size=g.m)
    lam = rng.uniform(0.0, lam_max, size=g.n)
    return RCParams(p, lam)


def random_ising(g: Graph, rng: np.random.Generator, beta_max: float = 5.0, lam_max: float = 1.0) -> IsingParams:
    # beta in (1, beta_max]: draw from the half-open interval mirrored to exclude 1
    beta = beta_max - rng.uniform(0.0, beta_max - 1.0, size=g.m)
    lam = rng.uniform(0.0, lam_max, size=g.n)
    return IsingParams(beta, lam)


def random_gsw(g: Graph, rng: np.random.Generator, eta_min: float = 0.3) -> GSWParams:
    p = rng.uniform(0.05, 0.5, size=g.m)
    eta = rng.uniform(eta_min, 1.0, size=g.n)
    return GSWParams(p, eta, np.ones(g.n, dtype=np.int8))


def rc_for(entry: CorpusGraph, seed: int = 0, lam_max: float = 1.0) -> RCParams:
    """Deterministic random RC parameters for a corpus graph."""
    rng = np.random.default_rng([seed, _key(entry.name)])
    return random_rc(entry.graph, rng, lam_max)


def ising_for(entry: CorpusGraph, seed: int = 0) -> IsingParams:
    rng = np.random.default_rng([seed, _key(entry.name), 1])
    return random_ising(entry.graph, rng)


def gsw_for(entry: CorpusGraph, seed: int = 0, eta_min: float = 0.3) -> GSWParams:
    rng = np.random.default_rng([seed, _key(entry.name), 2])
    return random_gsw(entry.graph, rng, eta_min)


def _key(name: str) -> int:
    return int.from_bytes(name.encode(), "little") % (1 << 31)
