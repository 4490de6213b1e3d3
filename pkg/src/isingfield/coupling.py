"""Desk-scale couplings for the subgraph-world and random cluster models.

``GSWCoupler.couple`` draws a pair ``(X, Y)`` with ``X ~ GSW(sigma)`` and
``Y ~ GSW(sigma xor 1_u)`` by revealing one vertex parity at a time and,
when the two parities disagree, walking the discrepancy along edges.  All
partition sums are taken from exact enumeration of the current working
instance, so graphs are limited to :data:`COUPLING_MAX_EDGES` edges.

The edge coupler chains two vertex couplings through an intermediate
parity vector; the RC coupler lifts it through ``Y = X | Z`` with
``Z ~ Ber(p / (2 - p))``.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import expit, logsumexp

from .exact import (
    DegenerateSystemError,
    EnumerationCapError,
    Report,
    enumerate_distribution,
    gsw_log_weights,
    mask_of,
)
from .model import ContractViolation, GSWParams, Graph, InvalidInputError, RCParams, p_to_q, rc_to_sw

COUPLING_MAX_EDGES = 20


@dataclass(frozen=True)
class CouplingSample:
    x: frozenset
    y: frozenset
    visited: int = 0
    pinned: frozenset = frozenset()

    @property
    def discrepancy(self) -> int:
        """``|X xor Y|`` over the unpinned elements."""
        return len((self.x ^ self.y) - self.pinned)


class GSWCoupler:
    """Vertex-parity coupling on a fixed GSW instance, with memoized enumeration."""

    def __init__(self, g: Graph, params: GSWParams, debug: bool = False):
        params.check(g)
        if g.m > COUPLING_MAX_EDGES:
            raise EnumerationCapError(f"coupling lab enumerates; m = {g.m} exceeds {COUPLING_MAX_EDGES}")
        self.g = g
        self.params = params
        self.debug = debug
        self.identity_log: list[tuple[float, float, float, float]] = []
        self._weights: dict = {}
        self._joint: dict = {}
        self._cache: dict = {}

    # -------------------------------------------------------------- tables

    def _log_weights(self, work: tuple, eta: tuple, sigma: tuple) -> np.ndarray:
        key = (work, eta, sigma)
        table = self._weights.get(key)
        if table is None:
            sub = Graph(self.g.n, [self.g.edges[e] for e in work])
            params = GSWParams(self.params.p[list(work)], np.array(eta), np.array(sigma))
            table = self._weights[key] = gsw_log_weights(sub, params)
        return table

    def _probs(self, work: tuple, eta: tuple, sigma: tuple) -> np.ndarray:
        key = ("p", work, eta, sigma)
        hit = self._cache.get(key)
        if hit is None:
            logw = self._log_weights(work, eta, sigma)
            log_z = logsumexp(logw)
            if log_z == -math.inf:
                raise DegenerateSystemError("GSW partition function is zero in the coupling context")
            hit = self._cache[key] = np.exp(logw - log_z)
        return hit

    def _local_incident(self, work: tuple, u: int) -> int:
        mask = 0
        for i, e in enumerate(work):
            if u in self.g.edges[e]:
                mask |= 1 << i
        return mask

    def _even_at(self, work: tuple, u: int) -> np.ndarray:
        inc = self._local_incident(work, u)
        masks = np.arange(1 << len(work), dtype=np.int64)
        parity = np.zeros(masks.shape, dtype=np.int64)
        for i in range(len(work)):
            if inc >> i & 1:
                parity ^= (masks >> i) & 1
        return parity == 0

    def _thresholds(self, work: tuple, eta: tuple, sigma: tuple, u: int) -> tuple[float, float]:
        """``(q0, q1)`` from the even/odd split of the ``eta_u = 1`` measure."""
        key = ("q", work, eta, sigma, u)
        hit = self._cache.get(key)
        if hit is None:
            hit = self._cache[key] = self._compute_thresholds(work, eta, sigma, u)
        return hit

    def _compute_thresholds(self, work: tuple, eta: tuple, sigma: tuple, u: int) -> tuple[float, float]:
        eta1 = list(eta)
        eta1[u] = 1.0
        logw = self._log_weights(work, tuple(eta1), sigma)
        even = self._even_at(work, u)
        a = logsumexp(logw[even]) if even.any() else -math.inf
        b = logsumexp(logw[~even]) if (~even).any() else -math.inf
        top = max(a, b)
        if top == -math.inf:
            raise DegenerateSystemError("GSW partition function is zero in the coupling context")
        q0, q1 = parity_thresholds(math.exp(a - top), math.exp(b - top), eta[u])
        if self.debug:
            self._check_identity(work, eta, sigma, u, even, q0, q1)
        return q0, q1

    def _check_identity(self, work, eta, sigma, u, even, q0, q1) -> None:
        got = []
        for c in (0, 1):
            sig = list(sigma)
            sig[u] = c
            try:
                got.append(float(self._probs(work, eta, tuple(sig))[even].sum()))
            except DegenerateSystemError:
                got.append(math.nan)
        self.identity_log.append((got[0], q0, got[1], q1))
        for have, want in zip(got, (q0, q1)):
            if not math.isnan(have) and abs(have - want) > 1e-9:
                raise AssertionError(f"parity identity failed: {have} != {want}")

    def _edge_marginals(self, work: tuple, eta: tuple, sigma: tuple, u: int, e: int) -> tuple[float, float]:
        key = ("e", work, eta, sigma, u, e)
        hit = self._cache.get(key)
        if hit is None:
            hit = self._cache[key] = self._compute_edge_marginals(work, eta, sigma, u, e)
        return hit

    def _compute_edge_marginals(self, work: tuple, eta: tuple, sigma: tuple, u: int, e: int) -> tuple[float, float]:
        i = work.index(e)
        masks = np.arange(1 << len(work), dtype=np.int64)
        has = ((masks >> i) & 1).astype(bool)
        flipped = list(sigma)
        flipped[u] ^= 1
        return (
            _inclusion(self._log_weights(work, eta, sigma), has),
            _inclusion(self._log_weights(work, eta, tuple(flipped)), has),
        )

    def _draw(self, work: tuple, eta: tuple, sigma: tuple, rng: np.random.Generator) -> set[int]:
        key = ("d", work, eta, sigma)
        hit = self._cache.get(key)
        if hit is None:
            probs = self._probs(work, eta, sigma)
            hit = self._cache[key] = (np.cumsum(probs), int(np.flatnonzero(probs)[-1]))
        cdf, last = hit
        idx = min(int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right")), last)
        return {e for i, e in enumerate(work) if idx >> i & 1}

    def _pick_edge(self, work: tuple, u: int) -> tuple[int, int]:
        for e in work:
            a, b = self.g.edges[e]
            if a == u:
                return e, b
            if b == u:
                return e, a
        raise ContractViolation(f"vertex {u} has no remaining edge while parities still differ")

    def _validate(self, work: tuple, eta: tuple, sigma: tuple, u: int, visited: frozenset) -> None:
        for v in range(self.g.n):
            if (eta[v] == 0) != (v in visited):
                raise ContractViolation("eta_v = 0 must hold exactly on visited vertices")
        self._probs(work, eta, sigma)
        flipped = list(sigma)
        flipped[u] ^= 1
        self._probs(work, eta, tuple(flipped))

    # ------------------------------------------------------------ sampling

    def couple(
        self,
        u: int,
        rng: np.random.Generator,
        sigma=None,
        work=None,
        eta=None,
        visited=frozenset(),
    ) -> CouplingSample:
        """Draw ``(X, Y)`` coupling ``GSW(sigma)`` with ``GSW(sigma xor 1_u)`` on ``work``."""
        work = tuple(sorted(range(self.g.m) if work is None else work))
        eta = list(self.params.eta if eta is None else eta)
        sigma = [int(s) for s in (self.params.sigma if sigma is None else sigma)]
        U = set(visited)
        self._validate(work, tuple(eta), tuple(sigma), u, frozenset(U))
        X: set[int] = set()
        Y: set[int] = set()
        while True:
            if u not in U:
                U.add(u)
                q0, q1 = self._thresholds(work, tuple(eta), tuple(sigma), u)
                r = rng.random()
                eta[u] = 0.0
                if r >= q1 or r < q0:
                    sig = list(sigma)
                    sig[u] = 0 if r >= q1 else 1
                    common = self._draw(work, tuple(eta), tuple(sig), rng)
                    X |= common
                    Y |= common
                    return CouplingSample(frozenset(X), frozenset(Y), len(U))
            e, v = self._pick_edge(work, u)
            nu, pi = self._edge_marginals(work, tuple(eta), tuple(sigma), u, e)
            r = rng.random()
            x1, y1 = r < nu, r < pi
            if x1:
                X.add(e)
                sigma[u] ^= 1
                sigma[v] ^= 1
            if y1:
                Y.add(e)
            work = tuple(f for f in work if f != e)
            if x1 != y1:
                u = v

    # ---------------------------------------------------------- exact law

    def joint(self, u: int, sigma=None, work=None) -> dict[tuple[int, int], float]:
        """Exact law of :meth:`couple` started with no visited vertices, keyed by global bitmasks."""
        work = tuple(sorted(range(self.g.m) if work is None else work))
        eta = tuple(float(h) for h in self.params.eta)
        sigma = tuple(int(s) for s in (self.params.sigma if sigma is None else sigma))
        self._validate(work, eta, sigma, u, frozenset())
        return dict(self._joint_at(u, work, eta, sigma, frozenset()))

    def _joint_at(self, u, work, eta, sigma, visited) -> dict:
        key = (u, work, eta, sigma, visited)
        cached = self._joint.get(key)
        if cached is not None:
            return cached
        out: dict = defaultdict(float)
        if u not in visited:
            q0, q1 = self._thresholds(work, eta, sigma, u)
            eta = eta[:u] + (0.0,) + eta[u + 1 :]
            visited = visited | {u}
            for weight, c in ((1.0 - q1, 0), (q0, 1)):
                if weight <= 0:
                    continue
                sig = sigma[:u] + (c,) + sigma[u + 1 :]
                probs = self._probs(work, eta, sig)
                for local in np.flatnonzero(probs):
                    gm = mask_of(work[i] for i in range(len(work)) if local >> i & 1)
                    out[(gm, gm)] += weight * probs[local]
            middle = q1 - q0
            if middle > 0:
                for k, val in self._edge_branch(u, work, eta, sigma, visited).items():
                    out[k] += middle * val
        else:
            out = self._edge_branch(u, work, eta, sigma, visited)
        self._joint[key] = out
        return out

    def _edge_branch(self, u, work, eta, sigma, visited) -> dict:
        e, v = self._pick_edge(work, u)
        nu, pi = self._edge_marginals(work, eta, sigma, u, e)
        rest = tuple(f for f in work if f != e)
        bit = 1 << e
        out: dict = defaultdict(float)
        branches = (
            (True, True, min(nu, pi)),
            (True, False, max(0.0, nu - pi)),
            (False, True, max(0.0, pi - nu)),
            (False, False, 1.0 - max(nu, pi)),
        )
        for x1, y1, weight in branches:
            if weight <= 0:
                continue
            sig = list(sigma)
            if x1:
                sig[u] ^= 1
                sig[v] ^= 1
            nxt = u if x1 == y1 else v
            sub = self._joint_at(nxt, rest, eta, tuple(sig), visited)
            add_x = bit if x1 else 0
            add_y = bit if y1 else 0
            for (xm, ym), val in sub.items():
                out[(xm | add_x, ym | add_y)] += weight * val
        return out


@dataclass
class CoupleContext:
    """Working state of one vertex coupling.

    ``eta`` is zero exactly on ``visited``; ``work`` lists the edge ids not yet consumed.
    """

    g: Graph
    params: GSWParams
    u: int
    sigma: tuple | None = None
    work: tuple | None = None
    visited: frozenset = frozenset()

    def eta(self) -> np.ndarray:
        eta = np.array(self.params.eta, dtype=float)
        eta[list(self.visited)] = 0.0
        return eta


def parity_thresholds(w_even: float, w_odd: float, eta_u: float) -> tuple[float, float]:
    """``(q0, q1)`` for even/odd masses ``w_even``, ``w_odd`` of the ``eta_u = 1`` measure.

    With ``R = w_even / w_odd``: ``q0 = eta R / (eta R + 1)`` and ``q1 = R / (R + eta)``.
    """
    q0 = eta_u * w_even / (eta_u * w_even + w_odd) if eta_u * w_even + w_odd > 0 else 0.0
    q1 = w_even / (w_even + eta_u * w_odd) if w_even + eta_u * w_odd > 0 else 1.0
    return q0, q1


def _inclusion(logw: np.ndarray, has: np.ndarray) -> float:
    """Probability of ``has``; exactly 0 or 1 when one side carries no weight."""
    a = logsumexp(logw[has])
    b = logsumexp(logw[~has])
    if a == -math.inf and b == -math.inf:
        raise DegenerateSystemError("GSW partition function is zero in the coupling context")
    if b == -math.inf:
        return 1.0
    if a == -math.inf:
        return 0.0
    return float(expit(a - b))


def couple_gsw(ctx: CoupleContext, rng: np.random.Generator, coupler: GSWCoupler | None = None) -> CouplingSample:
    coupler = coupler or GSWCoupler(ctx.g, ctx.params)
    return coupler.couple(ctx.u, rng, sigma=ctx.sigma, work=ctx.work, eta=ctx.eta(), visited=ctx.visited)


class EdgeCoupler:
    """Couples ``nu(. | not e)`` with ``nu(. | e)`` for a GSW measure ``nu``.

    ``X`` and the intermediate ``Z`` come from the vertex coupling at ``u``;
    ``Y`` is drawn from the exact law of the vertex coupling at ``v``
    conditioned on its first coordinate being ``Z``.
    """

    def __init__(self, g: Graph, params: GSWParams, e: int, coupler: GSWCoupler | None = None):
        self.g, self.params, self.e = g, params, e
        self.coupler = coupler or GSWCoupler(g, params)
        nu = enumerate_distribution(g, params)
        masks = np.arange(1 << g.m, dtype=np.int64)
        has = ((masks >> e) & 1).astype(bool)
        self.nu_in = float(nu.probs[has].sum())
        self.nu_out = float(nu.probs[~has].sum())
        if self.nu_in <= 0 or self.nu_out <= 0:
            raise DegenerateSystemError(f"edge {e} is frozen under the GSW measure")
        self.u, self.v = g.edges[e]
        self.work = tuple(f for f in range(g.m) if f != e)
        sigma = [int(s) for s in params.sigma]
        self.sigma = tuple(sigma)
        sigma[self.u] ^= 1
        self.mid_sigma = tuple(sigma)
        second = self.coupler.joint(self.v, sigma=self.mid_sigma, work=self.work)
        by_first: dict[int, list[tuple[int, float]]] = defaultdict(list)
        for (zm, ym), prob in second.items():
            by_first[zm].append((ym, prob))
        self._second = {
            zm: (np.array([y for y, _ in rows], dtype=np.int64), np.cumsum([p for _, p in rows]))
            for zm, rows in by_first.items()
        }

    def __call__(self, rng: np.random.Generator) -> CouplingSample:
        first = self.coupler.couple(self.u, rng, sigma=self.sigma, work=self.work)
        ys, cdf = self._second[mask_of(first.y)]
        i = min(int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right")), len(ys) - 1)
        y = frozenset(f for f in self.work if ys[i] >> f & 1) | {self.e}
        return CouplingSample(first.x, y, first.visited, frozenset({self.e}))

    def exact_mean_discrepancy(self) -> float:
        first = self.coupler.joint(self.u, sigma=self.sigma, work=self.work)
        total = 0.0
        for (xm, zm), p1 in first.items():
            ys, cdf = self._second[zm]
            probs = np.diff(np.concatenate(([0.0], cdf))) / cdf[-1]
            total += p1 * float(sum(pr * bin(xm ^ int(y)).count("1") for y, pr in zip(ys, probs)))
        return total


def couple_gsw_edge(g: Graph, params: GSWParams, e: int, rng: np.random.Generator) -> CouplingSample:
    return EdgeCoupler(g, params, e)(rng)


class RCLiftCoupler:
    """Couples ``mu(. | not e)`` with ``mu(. | e)`` for an RC measure via its subgraph-world pair."""

    def __init__(self, g: Graph, rc: RCParams, e: int, gsw_coupler: Callable | None = None):
        rc.check(g)
        self.g, self.rc, self.e = g, rc, e
        self.sw = rc_to_sw(rc)
        self.q = p_to_q(rc.p)
        nu = enumerate_distribution(g, self.sw)
        masks = np.arange(1 << g.m, dtype=np.int64)
        has = ((masks >> e) & 1).astype(bool)
        self.nu_in = float(nu.probs[has].sum())
        self.nu_out = float(nu.probs[~has].sum())
        qe = float(self.q[e])
        if self.nu_out * (1.0 - qe) <= 0 or self.nu_in + qe * self.nu_out <= 0:
            raise DegenerateSystemError(f"edge {e} is frozen under the RC measure")
        self.t_e = lift_threshold(qe, self.nu_out, self.nu_in)
        if gsw_coupler is not None:
            self._pair = gsw_coupler
        elif self.nu_in > 0:
            edge = EdgeCoupler(g, self.sw, e)
            self._pair = edge
        else:
            self._pair = None
            probs = np.where(has, 0.0, nu.probs)
            self._out_cdf = np.cumsum(probs / probs.sum())

    def _pair_draw(self, rng) -> tuple[frozenset, frozenset]:
        if self._pair is None:
            # nu(e) = 0 forces t_e = 1, so only the e-excluded side is ever used
            idx = int(np.searchsorted(self._out_cdf, rng.random() * self._out_cdf[-1], side="right"))
            idx = min(idx, len(self._out_cdf) - 1)
            return frozenset(f for f in range(self.g.m) if idx >> f & 1), frozenset()
        s = self._pair(rng)
        return s.x, s.y

    def __call__(self, rng: np.random.Generator) -> CouplingSample:
        x0, x1 = self._pair_draw(rng)
        z = frozenset(np.flatnonzero(rng.random(self.g.m) < self.q).tolist())
        base = (x0 | z) - {self.e}
        pinned = frozenset({self.e})
        if rng.random() < self.t_e:
            return CouplingSample(base, base | pinned, pinned=pinned)
        return CouplingSample(base, x1 | pinned | z, pinned=pinned)


def lift_threshold(q_e: float, nu_out: float, nu_in: float) -> float:
    """``t_e = q_e nu(not e) / (q_e nu(not e) + nu(e))``."""
    num = q_e * nu_out
    return num / (num + nu_in)


def lift_coupling_rc(
    g: Graph, rc: RCParams, e: int, gsw_coupler: Callable | None, rng: np.random.Generator
) -> CouplingSample:
    return RCLiftCoupler(g, rc, e, gsw_coupler)(rng)


def estimate_coupling_independence(
    g: Graph, params, e: int, runs: int, rng: np.random.Generator, coupler: Callable | None = None
) -> tuple[float, float]:
    """Monte Carlo mean of ``|X xor Y|`` with its standard error."""
    if runs < 1:
        raise ValueError("runs must be >= 1")
    if coupler is None:
        if isinstance(params, GSWParams):
            coupler = EdgeCoupler(g, params, e)
        elif isinstance(params, RCParams):
            coupler = RCLiftCoupler(g, params, e)
        else:
            raise InvalidInputError(f"no default coupler for {type(params).__name__}")
    d = np.array([coupler(rng).discrepancy for _ in range(runs)], dtype=float)
    stderr = float(d.std(ddof=1) / math.sqrt(runs)) if runs > 1 else math.inf
    return float(d.mean()), stderr


def verify_sw_rc_convolution(g: Graph, rc: RCParams, tol: float = 1e-10, label: str = "") -> Report:
    """``mu_RC(Y) = sum_{X <= Y} nu(X) q^{Y - X} (1 - q)^{E - Y}`` for every ``Y``."""
    if g.m > 16:
        raise EnumerationCapError("convolution check is limited to m <= 16")
    mu = enumerate_distribution(g, rc).probs
    arr = enumerate_distribution(g, rc_to_sw(rc)).probs.copy()
    q = p_to_q(rc.p)
    masks = np.arange(1 << g.m, dtype=np.int64)
    for e in range(g.m):
        bit = 1 << e
        lo = masks[(masks & bit) == 0]
        hi = lo | bit
        new = np.empty_like(arr)
        new[lo] = arr[lo] * (1.0 - q[e])
        new[hi] = arr[hi] + arr[lo] * q[e]
        arr = new
    report = Report()
    suffix = f"[{label}]" if label else ""
    report.add(f"convolution_max_abs_error{suffix}", float(np.abs(mu - arr).max()), 0.0, tol, relative=False)
    return report
