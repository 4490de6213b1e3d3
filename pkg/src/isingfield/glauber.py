"""Single-edge Glauber dynamics for the random cluster model.

Each step picks an active edge ``e = (u, v)`` uniformly and resamples its
membership from the exact conditional.  With ``C_u, C_v`` the components of
``u, v`` in ``(V, X - {e})`` and ``a = lambda^{C_u}``, ``b = lambda^{C_v}``:

    P(e in X') = p_e                                        if C_u = C_v
               = p_e (1 + ab) / (1 + ab + (1 - p_e)(a + b))  otherwise

Component products come from :class:`DynConn`, so a step costs polylog time.
"""

from __future__ import annotations

import math
from typing import Iterable

import numpy as np

from .dynconn import DynConn
from .model import ContractViolation, Graph, LogWeight, RCParams


def rc_transition_probability(p_e: float, same_component: bool, a: LogWeight, b: LogWeight) -> float:
    if same_component:
        return p_e
    # both products lie in [0, 1]; exp underflow only loses negligible mass
    av = a.value
    bv = b.value
    ab = 0.0 if (a.zero or b.zero) else math.exp(a.log + b.log)
    return p_e * (1.0 + ab) / (1.0 + ab + (1.0 - p_e) * (av + bv))


def steps_for_eps(m: int, eps: float) -> int:
    """Glauber step count ``ceil(2m (log m + log(2/eps)))`` for ``m`` active edges."""
    if m <= 0:
        return 0
    return math.ceil(2 * m * (math.log(m) + math.log(2.0 / eps)))


class GlauberState:
    """Glauber chain on the active edge set ``S`` of ``g``, started from ``X = S``."""

    def __init__(
        self,
        g: Graph,
        params: RCParams,
        active: Iterable[int] | None = None,
        rng: np.random.Generator | None = None,
        start: Iterable[int] | None = None,
    ):
        params.check(g)
        self.graph = g
        self.params = params
        self.active = sorted(range(g.m) if active is None else set(active))
        self._active_set = frozenset(self.active)
        self.rng = rng if rng is not None else np.random.default_rng()
        x = self._active_set if start is None else frozenset(start)
        if not x <= self._active_set:
            raise ContractViolation("start configuration must lie inside the active set")
        self.dc = DynConn(g.n, g.edges, params.lam)
        for e in sorted(x):
            self.dc.insert_edge(e)

    @property
    def x(self) -> frozenset:
        return self.dc.edge_set

    def _probability_without(self, e: int) -> float:
        u, v = self.graph.edges[e]
        dc = self.dc
        if dc.connected(u, v):
            return float(self.params.p[e])
        return rc_transition_probability(
            float(self.params.p[e]), False, dc.comp_lambda_product(u), dc.comp_lambda_product(v)
        )

    def transition_probability(self, e: int) -> float:
        """Probability that the update at ``e`` leaves ``e`` in the configuration."""
        if e not in self._active_set:
            raise ContractViolation(f"edge {e} is not active")
        present = e in self.dc
        if present:
            self.dc.delete_edge(e)
        prob = self._probability_without(e)
        if present:
            self.dc.insert_edge(e)
        return prob

    def step(self) -> None:
        self._update(self.active[int(self.rng.integers(len(self.active)))], float(self.rng.random()))

    def _update(self, e: int, coin: float) -> None:
        dc = self.dc
        present = e in dc
        if present:
            dc.delete_edge(e)
        if coin < self._probability_without(e):
            dc.insert_edge(e)

    def run(self, steps: int) -> frozenset:
        k = len(self.active)
        if k == 0 or steps <= 0:
            return self.x
        picks = self.rng.integers(k, size=steps)
        coins = self.rng.random(steps)
        active = self.active
        for i in range(steps):
            self._update(active[picks[i]], coins[i])
        return self.x


def glauber_step(state: GlauberState) -> GlauberState:
    state.step()
    return state


def resample(
    g: Graph,
    params: RCParams,
    steps: int,
    rng: np.random.Generator,
    active: Iterable[int] | None = None,
) -> frozenset:
    """Run ``steps`` Glauber updates on ``(V, active)`` from ``X = active``."""
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    return GlauberState(g, params, active, rng).run(steps)


def transition_table(g: Graph, params: RCParams) -> np.ndarray:
    """``T[X, e]``: inclusion probability of ``e`` after an update at ``e`` from ``X``.

    Built from :func:`rc_transition_probability` with components of
    ``X - {e}`` taken from a scratch union-find.  Used by the vectorized
    sampler backend and by the exact-chain diagnostics.
    """
    from .exact import _component_labels, _bits

    m = g.m
    bits = _bits(0, 1 << m, m)
    labels = _component_labels(bits, g.n, g.edges)
    lam = params.lam
    logs = [math.log(x) if x > 0 else -math.inf for x in lam]
    table = np.empty((1 << m, m))
    for x in range(1 << m):
        for e, (u, v) in enumerate(g.edges):
            y = x & ~(1 << e)
            lab = labels[y]
            if lab[u] == lab[v]:
                table[x, e] = params.p[e]
                continue
            table[x, e] = rc_transition_probability(
                float(params.p[e]), False, _group_product(lab, lab[u], logs), _group_product(lab, lab[v], logs)
            )
    return table


def _group_product(lab: np.ndarray, root: int, logs: list[float]) -> LogWeight:
    total = 0.0
    for w in np.flatnonzero(lab == root):
        if logs[w] == -math.inf:
            return LogWeight(True, -math.inf)
        total += logs[w]
    return LogWeight(False, total)


def transition_matrix(g: Graph, params: RCParams) -> np.ndarray:
    """Exact ``2^m x 2^m`` Glauber kernel assembled from :meth:`GlauberState.transition_probability`."""
    m = g.m
    size = 1 << m
    P = np.zeros((size, size))
    if m == 0:
        P[0, 0] = 1.0
        return P
    for x in range(size):
        state = GlauberState(g, params, start=[e for e in range(m) if x >> e & 1])
        for e in range(m):
            q = state.transition_probability(e)
            P[x, x | (1 << e)] += q / m
            P[x, x & ~(1 << e)] += (1.0 - q) / m
    return P
