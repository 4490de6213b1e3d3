"""Timing harness for the connectivity structure and the Glauber chain on sparse random graphs."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .dynconn import DynConn
from .glauber import GlauberState
from .model import Graph, RCParams


@dataclass(frozen=True)
class BenchRow:
    n: int
    m: int
    ops: int
    wall_s: float

    @property
    def us_per_op(self) -> float:
        return 1e6 * self.wall_s / self.ops if self.ops else 0.0

    def csv(self) -> str:
        return f"{self.n},{self.m},{self.ops},{self.wall_s:.6f},{self.us_per_op:.3f}"


CSV_HEADER = "n,m,ops,wall_s,us_per_op"


def sparse_graph(n: int, degree: float, rng: np.random.Generator) -> Graph:
    """``round(degree * n / 2)`` uniform random edges without self-loops."""
    m = int(round(degree * n / 2))
    u = rng.integers(n, size=m)
    v = (u + rng.integers(1, n, size=m)) % n
    return Graph(n, list(zip(u.tolist(), v.tolist())))


def bench_dynconn(n: int, ops: int, rng: np.random.Generator, degree: float = 2.0, warmup: int = 1000) -> BenchRow:
    """Random insert/delete toggles on a sparse random edge pool, half present at the start."""
    g = sparse_graph(n, degree, rng)
    dc = DynConn(n, g.edges, np.full(n, 0.5))
    for e in np.flatnonzero(rng.random(g.m) < 0.5):
        dc.insert_edge(int(e))
    picks = rng.integers(g.m, size=warmup + ops)

    def toggle(e: int) -> None:
        if e in dc:
            dc.delete_edge(e)
        else:
            dc.insert_edge(e)

    for e in picks[:warmup]:
        toggle(int(e))
    t0 = time.perf_counter()
    for e in picks[warmup:]:
        toggle(int(e))
    return BenchRow(n, g.m, ops, time.perf_counter() - t0)


def bench_glauber(
    n: int, steps: int, rng: np.random.Generator, degree: float = 3.0, p: float = 0.5, lam: float = 0.5, warmup: int = 1000
) -> BenchRow:
    g = sparse_graph(n, degree, rng)
    state = GlauberState(g, RCParams(np.full(g.m, p), np.full(n, lam)), rng=rng)
    state.run(warmup)
    t0 = time.perf_counter()
    state.run(steps)
    return BenchRow(n, g.m, steps, time.perf_counter() - t0)
