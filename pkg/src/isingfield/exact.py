"""Brute-force ground truth: dense tables over every configuration.

Configurations are encoded as integer bitmasks (bit ``i`` set iff element
``i`` is present).  Every table is capped at :data:`ENUMERATION_CAP` bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.special import logsumexp

from .model import (
    GSWParams,
    Graph,
    InvalidInputError,
    IsingParams,
    RCParams,
    beta_to_p,
    components,
    lambda_to_eta,
)

ENUMERATION_CAP = 24
_CHUNK = 1 << 15


class EnumerationCapError(RuntimeError):
    """Refusal to build a table over more than ``ENUMERATION_CAP`` bits."""


class DegenerateSystemError(RuntimeError):
    """Partition function is zero, so the distribution is undefined."""


def mask_of(ids: Iterable[int]) -> int:
    out = 0
    for i in ids:
        out |= 1 << int(i)
    return out


def ids_of(mask: int) -> frozenset:
    mask = int(mask)
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return frozenset(out)


def _bits(start: int, stop: int, width: int) -> np.ndarray:
    masks = np.arange(start, stop, dtype=np.int64)
    return ((masks[:, None] >> np.arange(width, dtype=np.int64)) & 1).astype(bool)


def _safe_log(x: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(x)


# ----------------------------------------------------------- weight tables


def _bernoulli_log_table(bits: np.ndarray, p: np.ndarray) -> np.ndarray:
    logp, log1mp = _safe_log(p), _safe_log(1.0 - p)
    return np.where(bits, logp, log1mp).sum(axis=1)


def _component_labels(bits: np.ndarray, n: int, edges: Sequence[tuple[int, int]]) -> np.ndarray:
    """Min-vertex label per vertex for every mask row (min-label propagation)."""
    labels = np.tile(np.arange(n, dtype=np.int64), (bits.shape[0], 1))
    if not edges:
        return labels
    us = np.array([u for u, _ in edges])
    vs = np.array([v for _, v in edges])
    while True:
        changed = False
        for e in range(len(edges)):
            sel = bits[:, e]
            a, b = labels[:, us[e]], labels[:, vs[e]]
            diff = sel & (a != b)
            if diff.any():
                mn = np.minimum(a, b)
                labels[diff, us[e]] = mn[diff]
                labels[diff, vs[e]] = mn[diff]
                changed = True
        if not changed:
            return labels


def rc_log_weights(g: Graph, params: RCParams) -> np.ndarray:
    params.check(g)
    _check_cap(g.m)
    lam = params.lam
    zero = lam == 0
    loglam = np.where(zero, 0.0, _safe_log(np.where(zero, 1.0, lam)))
    out = np.empty(1 << g.m)
    for start in range(0, 1 << g.m, _CHUNK):
        stop = min(start + _CHUNK, 1 << g.m)
        bits = _bits(start, stop, g.m)
        logw = _bernoulli_log_table(bits, params.p)
        labels = _component_labels(bits, g.n, g.edges)
        for r in range(g.n):
            members = labels == r
            is_root = members[:, r]
            has_zero = (members & zero).any(axis=1)
            logsum = members.astype(float) @ loglam
            logw += np.where(is_root & ~has_zero, np.log1p(np.exp(logsum)), 0.0)
        out[start:stop] = logw
    return out


def gsw_log_weights(g: Graph, params: GSWParams) -> np.ndarray:
    params.check(g)
    _check_cap(g.m)
    logeta = _safe_log(params.eta)
    out = np.empty(1 << g.m)
    for start in range(0, 1 << g.m, _CHUNK):
        stop = min(start + _CHUNK, 1 << g.m)
        bits = _bits(start, stop, g.m)
        logw = _bernoulli_log_table(bits, params.p)
        parity = np.zeros((bits.shape[0], g.n), dtype=bool)
        for e, (u, v) in enumerate(g.edges):
            parity[:, u] ^= bits[:, e]
            parity[:, v] ^= bits[:, e]
        match = parity == params.sigma.astype(bool)
        with np.errstate(invalid="ignore"):
            logw = logw + np.where(match, logeta, 0.0).sum(axis=1)
        out[start:stop] = logw
    return out


def ising_log_weights(g: Graph, params: IsingParams) -> np.ndarray:
    params.check(g)
    _check_cap(g.n)
    logbeta = np.log(params.beta)
    loglam = _safe_log(params.lam)
    out = np.empty(1 << g.n)
    for start in range(0, 1 << g.n, _CHUNK):
        stop = min(start + _CHUNK, 1 << g.n)
        bits = _bits(start, stop, g.n)
        logw = np.where(bits, loglam, 0.0).sum(axis=1)
        for e, (u, v) in enumerate(g.edges):
            logw += np.where(bits[:, u] == bits[:, v], logbeta[e], 0.0)
        out[start:stop] = logw
    return out


def _check_cap(bits: int) -> None:
    if bits > ENUMERATION_CAP:
        raise EnumerationCapError(
            f"refusing to enumerate 2^{bits} configurations (cap is 2^{ENUMERATION_CAP})"
        )


# ------------------------------------------------------------ distributions


@dataclass(frozen=True, eq=False)
class ExactDistribution:
    kind: str  # "ising" (vertex subsets) or "rc" / "gsw" (edge subsets)
    size: int
    probs: np.ndarray = field(repr=False)
    log_z: float

    @classmethod
    def from_log_weights(cls, kind: str, size: int, logw: np.ndarray) -> "ExactDistribution":
        log_z = float(logsumexp(logw)) if logw.size else -math.inf
        if log_z == -math.inf:
            raise DegenerateSystemError(f"{kind} partition function is zero")
        probs = np.exp(logw - log_z)
        probs /= probs.sum()
        probs.setflags(write=False)
        return cls(kind, size, probs, log_z)

    @property
    def z(self) -> float:
        return math.exp(self.log_z)

    def prob(self, config: Iterable[int]) -> float:
        return float(self.probs[mask_of(config)])

    def marginals(self) -> np.ndarray:
        bits = _bits(0, 1 << self.size, self.size)
        return self.probs @ bits


def enumerate_distribution(g: Graph, params) -> ExactDistribution:
    """Exact normalized table for an Ising, RC or GSW instance on ``g``."""
    if isinstance(params, IsingParams):
        return ExactDistribution.from_log_weights("ising", g.n, ising_log_weights(g, params))
    if isinstance(params, RCParams):
        return ExactDistribution.from_log_weights("rc", g.m, rc_log_weights(g, params))
    if isinstance(params, GSWParams):
        return ExactDistribution.from_log_weights("gsw", g.m, gsw_log_weights(g, params))
    raise InvalidInputError(f"unknown parameter type {type(params).__name__}")


def log_partition(g: Graph, params) -> float:
    """``log Z``; ``-inf`` for a degenerate system instead of raising."""
    if isinstance(params, IsingParams):
        logw = ising_log_weights(g, params)
    elif isinstance(params, RCParams):
        logw = rc_log_weights(g, params)
    elif isinstance(params, GSWParams):
        logw = gsw_log_weights(g, params)
    else:
        raise InvalidInputError(f"unknown parameter type {type(params).__name__}")
    return float(logsumexp(logw))


def tv_distance(a, b) -> float:
    pa = a.probs if isinstance(a, ExactDistribution) else np.asarray(a, dtype=float)
    pb = b.probs if isinstance(b, ExactDistribution) else np.asarray(b, dtype=float)
    if pa.shape != pb.shape:
        raise InvalidInputError(f"ground sets differ: {pa.shape} vs {pb.shape}")
    return 0.5 * float(np.abs(pa - pb).sum())


def empirical(masks: np.ndarray, size: int) -> np.ndarray:
    """Plug-in frequency table of sampled bitmasks."""
    counts = np.bincount(np.asarray(masks, dtype=np.int64), minlength=1 << size)
    return counts / counts.sum()


def condition(dist: ExactDistribution, tau: Iterable[int], pinned: Iterable[int]) -> ExactDistribution:
    """Bayesian conditioning on agreeing with ``tau`` on ``pinned``."""
    pin_mask = mask_of(pinned)
    want = mask_of(tau) & pin_mask
    masks = np.arange(1 << dist.size, dtype=np.int64)
    keep = (masks & pin_mask) == want
    mass = dist.probs[keep].sum()
    if mass <= 0:
        raise DegenerateSystemError("conditioning event has probability zero")
    probs = np.where(keep, dist.probs, 0.0) / mass
    probs.setflags(write=False)
    return ExactDistribution(dist.kind, dist.size, probs, dist.log_z + math.log(mass))


def pin(params: RCParams, tau: Iterable[int], pinned: Iterable[int]) -> RCParams:
    """Edge parameters realizing the pinning: 1 on pinned edges of ``tau``, 0 on the rest."""
    tau = set(tau)
    p = params.p.copy()
    for e in pinned:
        p[e] = 1.0 if e in tau else 0.0
    return RCParams(p, params.lam)


def exact_sample(dist: ExactDistribution, rng: np.random.Generator) -> frozenset:
    return ids_of(exact_sample_masks(dist, rng, 1)[0])


def exact_sample_masks(dist: ExactDistribution, rng: np.random.Generator, size: int) -> np.ndarray:
    """Inverse-CDF draws returned as bitmasks."""
    cdf = np.cumsum(dist.probs)
    u = rng.random(size) * cdf[-1]
    idx = np.searchsorted(cdf, u, side="right")
    # never land on a zero-probability tail entry through rounding
    last = int(np.flatnonzero(dist.probs)[-1])
    return np.minimum(idx, last).astype(np.int64)


# --------------------------------------------------------- Edwards-Sokal map


def _inclusion_probability(lam: np.ndarray, members: list[int]) -> float:
    """``lam^C / (1 + lam^C)`` computed from the log-product."""
    if any(lam[v] == 0 for v in members):
        return 0.0
    log_prod = float(np.sum(np.log(lam[members])))
    return 1.0 / (1.0 + math.exp(-log_prod)) if log_prod > -700 else math.exp(log_prod)


def es_pushforward(rc_dist: ExactDistribution, g: Graph, lam) -> ExactDistribution:
    """Exact law of the vertex set obtained by rounding each RC component in or out."""
    lam = np.asarray(lam, dtype=float)
    if rc_dist.size != g.m or lam.shape[0] != g.n:
        raise InvalidInputError("RC distribution does not match the graph")
    _check_cap(g.n)
    by_partition: dict[tuple[int, ...], float] = {}
    for mask in np.flatnonzero(rc_dist.probs):
        labels = tuple(components(g.n, g.edges, ids_of(mask)))
        by_partition[labels] = by_partition.get(labels, 0.0) + float(rc_dist.probs[mask])
    out = np.zeros(1 << g.n)
    idx = np.arange(1 << g.n, dtype=np.int64)
    for labels, mass in by_partition.items():
        groups: dict[int, list[int]] = {}
        for v, r in enumerate(labels):
            groups.setdefault(r, []).append(v)
        arr = np.zeros(1 << g.n)
        arr[0] = mass
        for members in groups.values():
            a = _inclusion_probability(lam, members)
            cm = mask_of(members)
            new = (1.0 - a) * arr
            np.add.at(new, idx | cm, a * arr)
            arr = new
        out += arr
    out /= out.sum()
    out.setflags(write=False)
    return ExactDistribution("ising", g.n, out, math.nan)


# ------------------------------------------------------------- influence


@dataclass(frozen=True, eq=False)
class InfluenceMatrix:
    psi: np.ndarray
    marginals: np.ndarray

    @property
    def norm_inf(self) -> float:
        """Max absolute row sum: total influence of all other elements on one element."""
        return float(np.abs(self.psi).sum(axis=1).max()) if self.psi.size else 0.0

    @property
    def max_col_sum(self) -> float:
        """Max absolute column sum: total influence of one element on all others."""
        return float(np.abs(self.psi).sum(axis=0).max()) if self.psi.size else 0.0


def influence_matrix(dist: ExactDistribution) -> InfluenceMatrix:
    """``psi[i, j] = mu(i | j) - mu(i | not j)``; zero on the diagonal and for frozen ``j``."""
    k = dist.size
    bits = _bits(0, 1 << k, k).astype(float)
    weighted = dist.probs[:, None] * bits
    joint_in = bits.T @ weighted  # P(i in, j in)
    joint_out = weighted.T @ (1.0 - bits)  # P(i in, j out)
    mu_in = dist.probs @ bits
    mu_out = dist.probs @ (1.0 - bits)
    psi = np.zeros((k, k))
    live = (mu_in > 0) & (mu_out > 0)
    for j in np.flatnonzero(live):
        psi[:, j] = joint_in[:, j] / mu_in[j] - joint_out[:, j] / mu_out[j]
        psi[j, j] = 0.0
    return InfluenceMatrix(psi, mu_in)


# -------------------------------------------------------- identity checks


@dataclass(frozen=True)
class Check:
    name: str
    lhs: float
    rhs: float
    tol: float
    passed: bool
    bound: bool = False

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        if self.bound:
            return f"{status} {self.name} {self.lhs!r} <= {self.rhs!r} slack {self.tol!r}"
        return f"{status} {self.name} {self.lhs!r} {self.rhs!r} {self.tol!r}"


@dataclass
class Report:
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name: str, lhs: float, rhs: float, tol: float, relative: bool = True) -> Check:
        if relative:
            ok = math.isclose(lhs, rhs, rel_tol=tol, abs_tol=0.0)
        else:
            ok = abs(lhs - rhs) <= tol
        check = Check(name, float(lhs), float(rhs), tol, ok)
        self.checks.append(check)
        return check

    def add_bound(self, name: str, value: float, bound: float, slack: float = 0.0) -> Check:
        """Record ``value <= bound + slack``."""
        check = Check(name, float(value), float(bound), float(slack), bool(value <= bound + slack), True)
        self.checks.append(check)
        return check

    def extend(self, other: "Report") -> None:
        self.checks.extend(other.checks)

    def lines(self) -> list[str]:
        return [c.line() for c in self.checks]


def verify_partition_identity(g: Graph, ising: IsingParams, tol: float = 1e-10, label: str = "") -> Report:
    """Ising, RC and subgraph-world partition functions agree after the holographic rescaling."""
    if np.any(ising.lam > 1):
        raise InvalidInputError("partition identity is stated for lambda in [0, 1]")
    p = beta_to_p(ising.beta)
    rc = RCParams(p, ising.lam)
    sw = GSWParams(p / 2.0, lambda_to_eta(ising.lam), np.ones(g.n, dtype=np.int8))
    log_ising = log_partition(g, ising)
    log_rc = log_partition(g, rc)
    log_sw = log_partition(g, sw)
    log_beta = float(np.log(ising.beta).sum())
    log_field = float(np.log1p(ising.lam).sum())
    report = Report()
    suffix = f"[{label}]" if label else ""
    report.add(f"Z_ising=prod(beta)*Z_rc{suffix}", math.exp(log_ising), math.exp(log_beta + log_rc), tol)
    report.add(
        f"Z_ising=prod(beta)*prod(1+lambda)*Z_sw{suffix}",
        math.exp(log_ising),
        math.exp(log_beta + log_field + log_sw),
        tol,
    )
    return report
