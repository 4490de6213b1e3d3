"""Field dynamics simulator for the random cluster model and the Ising sampler on top of it.

One field step reveals ``S = S' | X`` with ``S' ~ Ber(theta)^E`` and then
resamples ``X`` from the RC measure on ``(V, S)`` with tilted edge
probabilities ``p* = p / (theta (1 - p) + p)``, approximated by Glauber
dynamics started from ``X = S``.  Ising samples come from rounding each RC
component into the spin set with probability ``lambda^C / (1 + lambda^C)``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .exact import (
    ENUMERATION_CAP,
    EnumerationCapError,
    _bits,
    enumerate_distribution,
    exact_sample_masks,
    ids_of,
)
from .glauber import GlauberState, transition_table
from .model import (
    DomainError,
    Graph,
    IsingParams,
    RCParams,
    beta_to_p,
    components,
    p_star,
)

PRACTICAL_C1 = 20.0
PRACTICAL_BRUTE_FORCE_EDGES = 20
TABLE_MAX_EDGES = 14


@dataclass(frozen=True)
class Schedule:
    """Parameters of the simulator.

    Paper-mode values overflow (``T_FD``) or underflow (``theta``, ``K``) a
    double for realistic ``lambda_max``, so every quantity also carries its
    natural log.  ``t_fd``/``t_gd`` are ``None`` when not representable.
    """

    mode: Literal["paper", "practical"]
    theta: float
    t_fd: int | None
    t_gd: int | None
    n0: float
    k: float
    log_theta: float
    log_t_fd: float
    log_t_gd: float
    log_n0: float
    log_k: float
    brute_force_edges: int | None = None

    def __post_init__(self):
        if self.mode == "practical":
            if not 0.0 < self.theta < 1.0:
                raise DomainError("theta must lie in (0, 1)")
            if self.t_fd is None or self.t_fd < 1 or self.t_gd is None or self.t_gd < 1:
                raise DomainError("practical schedules need t_fd >= 1 and t_gd >= 1")


def _ceil_from_log(log_value: float) -> int | None:
    if log_value > 700:
        return None
    return math.ceil(math.exp(log_value))


def t_gd_from(log_t_fd: float, m: int, eps: float) -> tuple[int | None, float]:
    """``ceil(2m (log m + log(2 T_FD / eps)))`` from ``log T_FD``."""
    if m == 0:
        return 0, -math.inf
    inner = math.log(m) + math.log(2.0) + log_t_fd - math.log(eps)
    log_val = math.log(2 * m) + math.log(inner)
    return _ceil_from_log(log_val), log_val


def schedule_paper(eps: float, p_min: float, lambda_max: float, n: int, m: int) -> Schedule:
    if not 0.0 < eps < 1.0:
        raise DomainError("eps must lie in (0, 1)")
    if not 0.0 < p_min < 1.0:
        raise DomainError("p_min must lie in (0, 1)")
    if not 0.0 <= lambda_max < 1.0:
        raise DomainError("lambda_max must lie in [0, 1)")
    if n < 2:
        raise DomainError("paper-mode schedules need n >= 2 (theta involves 1/log n)")
    c = (1.0 - lambda_max) ** -2
    log_n = math.log(n)
    log_k = math.log(1e-14) + 2.0 * math.log(eps) - 28.0 * c
    log_theta = log_k + math.log(p_min) - math.log(log_n)
    bracket = 2.0 * log_n + math.log(math.log(2.0 / p_min)) + math.log(2.0 / eps**2)
    log_t_fd_raw = 5.0 * c * (1.0 - log_theta) + math.log(bracket)
    t_fd = _ceil_from_log(log_t_fd_raw)
    log_t_fd = math.log(t_fd) if t_fd is not None else log_t_fd_raw
    t_gd, log_t_gd = t_gd_from(log_t_fd, m, eps)
    log_n0 = max(12.0 * c, math.log(3.0 / p_min), 0.5 * math.log(math.log(2.0 / eps**2)))
    return Schedule(
        mode="paper",
        theta=math.exp(log_theta),
        t_fd=t_fd,
        t_gd=t_gd,
        n0=math.exp(log_n0) if log_n0 < 700 else math.inf,
        k=math.exp(log_k),
        log_theta=log_theta,
        log_t_fd=log_t_fd,
        log_t_gd=log_t_gd,
        log_n0=log_n0,
        log_k=log_k,
    )


def schedule_practical(
    eps: float,
    m: int,
    theta: float = 0.5,
    t_fd: int | None = None,
    t_gd: int | None = None,
    c1: float = PRACTICAL_C1,
    brute_force_edges: int | None = PRACTICAL_BRUTE_FORCE_EDGES,
) -> Schedule:
    """Defaults ``t_fd = ceil(c1 log(m/eps))`` and ``t_gd`` from ``t_fd`` as in paper mode."""
    if not 0.0 < eps < 1.0:
        raise DomainError("eps must lie in (0, 1)")
    if not 0.0 < theta < 1.0:
        raise DomainError("theta must lie in (0, 1)")
    if (t_fd is not None and t_fd < 1) or (t_gd is not None and t_gd < 1):
        raise DomainError("practical schedules need t_fd >= 1 and t_gd >= 1")
    m_eff = max(m, 1)
    if t_fd is None:
        t_fd = max(1, math.ceil(c1 * math.log(m_eff / eps)))
    if t_gd is None:
        t_gd = max(1, t_gd_from(math.log(t_fd), m_eff, eps)[0])
    return Schedule(
        mode="practical",
        theta=theta,
        t_fd=int(t_fd),
        t_gd=int(t_gd),
        n0=math.nan,
        k=math.nan,
        log_theta=math.log(theta),
        log_t_fd=math.log(t_fd),
        log_t_gd=math.log(t_gd),
        log_n0=math.nan,
        log_k=math.nan,
        brute_force_edges=brute_force_edges,
    )


# ------------------------------------------------------------------ sampling


def _uses_brute_force(g: Graph, sched: Schedule) -> bool:
    if sched.mode == "paper":
        if g.n > sched.n0:
            return False
        if g.m > ENUMERATION_CAP:
            raise EnumerationCapError(
                f"paper-mode schedule selects brute force (n = {g.n} <= N0 = exp({sched.log_n0:.1f})) "
                f"but 2^{g.m} configurations exceed the enumeration cap; use --mode practical"
            )
        return True
    return sched.brute_force_edges is not None and g.m <= sched.brute_force_edges


def _check_sampler_fields(params: RCParams) -> None:
    if params.lam.size and params.lambda_max >= 1.0:
        raise DomainError("field dynamics needs lambda_max < 1 (lambda = 1 is only handled by brute force)")


def _require_runnable(sched: Schedule) -> None:
    if sched.t_fd is None or sched.t_gd is None:
        raise DomainError(
            f"schedule is not executable: log T_FD = {sched.log_t_fd:.3g}, log T_GD = {sched.log_t_gd:.3g}"
        )


def field_step(x, g: Graph, params: RCParams, sched: Schedule, rng: np.random.Generator) -> frozenset:
    """One outer iteration: reveal ``S = S' | x`` and resample inside it."""
    _require_runnable(sched)
    revealed = rng.random(g.m) < sched.theta
    active = set(np.flatnonzero(revealed).tolist()) | set(x)
    tilted = RCParams(p_star(params.p, sched.theta), params.lam)
    return GlauberState(g, tilted, active, rng).run(sched.t_gd)


def sample_rc(g: Graph, params: RCParams, eps: float, sched: Schedule, rng: np.random.Generator) -> frozenset:
    return sample_rc_many(g, params, eps, sched, rng, 1)[0]


def sample_rc_many(
    g: Graph, params: RCParams, eps: float, sched: Schedule, rng: np.random.Generator, size: int
) -> list[frozenset]:
    """``size`` independent RC samples; the brute-force table is built once."""
    params.check(g)
    if not 0.0 < eps < 1.0:
        raise DomainError("eps must lie in (0, 1)")
    if _uses_brute_force(g, sched):
        dist = enumerate_distribution(g, params)
        return [ids_of(mk) for mk in exact_sample_masks(dist, rng, size)]
    _check_sampler_fields(params)
    _require_runnable(sched)
    out = []
    for _ in range(size):
        x = frozenset(range(g.m))
        for _ in range(sched.t_fd):
            x = field_step(x, g, params, sched, rng)
        out.append(x)
    return out


def field_dynamics_batch(
    g: Graph, params: RCParams, sched: Schedule, rng: np.random.Generator, size: int, chunk: int = 1 << 16
) -> np.ndarray:
    """Vectorized replicas of the simulator (no brute-force shortcut), as bitmasks.

    Runs the same chain as :func:`sample_rc` on ``size`` lanes at once; the
    connectivity queries are replaced by a precomputed table of transition
    probabilities, so this is limited to ``m <= TABLE_MAX_EDGES``.
    """
    params.check(g)
    _check_sampler_fields(params)
    _require_runnable(sched)
    m = g.m
    if m > TABLE_MAX_EDGES:
        raise EnumerationCapError(f"table backend supports m <= {TABLE_MAX_EDGES}, got {m}")
    full = (1 << m) - 1
    if m == 0:
        return np.zeros(size, dtype=np.int64)
    tilted = RCParams(p_star(params.p, sched.theta), params.lam)
    table = transition_table(g, tilted).reshape(-1)
    bits = _bits(0, 1 << m, m)
    count = bits.sum(axis=1)
    members = np.zeros((1 << m, m), dtype=np.int64)
    for s in range(1 << m):
        idx = np.flatnonzero(bits[s])
        members[s, : idx.size] = idx
    members = members.reshape(-1)
    weights = np.int64(1) << np.arange(m, dtype=np.int64)
    out = np.empty(size, dtype=np.int64)
    for start in range(0, size, chunk):
        lanes = min(chunk, size - start)
        x = np.full(lanes, full, dtype=np.int64)
        for _ in range(sched.t_fd):
            revealed = (rng.random((lanes, m)) < sched.theta) @ weights
            s = revealed | x
            x = s.copy()
            k = count[s]
            live = k > 0
            base = s * m
            for _ in range(sched.t_gd):
                u = rng.random((2, lanes))
                pick = np.minimum((u[0] * k).astype(np.int64), np.maximum(k - 1, 0))
                e = members[base + pick]
                keep = u[1] < table[x * m + e]
                bit = np.left_shift(1, e)
                x = np.where(live, np.where(keep, x | bit, x & ~bit), x)
        out[start : start + lanes] = x
    return out


# ------------------------------------------------------------------- Ising


def round_components(g: Graph, lam: np.ndarray, x, rng: np.random.Generator) -> frozenset:
    """Put each component ``C`` of ``(V, x)`` in the output with probability ``lam^C / (1 + lam^C)``."""
    labels = components(g.n, g.edges, x)
    groups: dict[int, list[int]] = {}
    for v, r in enumerate(labels):
        groups.setdefault(r, []).append(v)
    out: list[int] = []
    for root in sorted(groups):
        members = groups[root]
        coin = rng.random()
        if np.any(lam[members] == 0):
            continue
        log_prod = float(np.log(lam[members]).sum())
        # lam^C/(1+lam^C) = 1/(1+exp(-log_prod)), written to avoid overflow in either tail
        if log_prod >= 0:
            prob = 1.0 / (1.0 + math.exp(-log_prod))
        else:
            t = math.exp(log_prod)
            prob = t / (1.0 + t)
        if coin < prob:
            out.extend(members)
    return frozenset(out)


def sample_ising(g: Graph, params: IsingParams, eps: float, sched: Schedule, rng: np.random.Generator) -> frozenset:
    return sample_ising_many(g, params, eps, sched, rng, 1)[0]


def sample_ising_many(
    g: Graph, params: IsingParams, eps: float, sched: Schedule, rng: np.random.Generator, size: int
) -> list[frozenset]:
    params.check(g)
    if params.lam.size and np.all(params.lam > 1):
        # mu(S) = mu_bar(V - S) where mu_bar has fields 1/lambda
        flipped = IsingParams(params.beta, 1.0 / params.lam)
        everything = frozenset(range(g.n))
        return [everything - s for s in sample_ising_many(g, flipped, eps, sched, rng, size)]
    rc = RCParams(beta_to_p(params.beta), params.lam)
    return [round_components(g, params.lam, x, rng) for x in sample_rc_many(g, rc, eps, sched, rng, size)]


# ------------------------------------------------------------------- report


@dataclass
class SamplerReport:
    samples: int
    seed: int | None
    schedule: Schedule
    brute_force: bool
    phases: dict[str, float] = field(default_factory=dict)

    @property
    def total(self) -> float:
        return sum(self.phases.values())

    def lines(self, timings: bool = False) -> list[str]:
        s = self.schedule
        out = [
            f"samples {self.samples}",
            f"seed {self.seed}",
            f"mode {s.mode}",
            f"brute_force {str(self.brute_force).lower()}",
            f"theta {s.theta!r} log_theta {s.log_theta!r}",
            f"t_fd {s.t_fd} log_t_fd {s.log_t_fd!r}",
            f"t_gd {s.t_gd} log_t_gd {s.log_t_gd!r}",
        ]
        if s.mode == "paper":
            out.append(f"n0 {s.n0!r} log_n0 {s.log_n0!r} log_k {s.log_k!r}")
        if timings:
            out.extend(f"time_{k} {v:.6f}" for k, v in self.phases.items())
            out.append(f"time_total {self.total:.6f}")
        return out


class _Timer:
    def __init__(self, phases: dict[str, float], name: str):
        self.phases, self.name = phases, name

    def __enter__(self):
        self.t0 = time.perf_counter()

    def __exit__(self, *exc):
        self.phases[self.name] = self.phases.get(self.name, 0.0) + time.perf_counter() - self.t0


def uses_brute_force(g: Graph, sched: Schedule) -> bool:
    return _uses_brute_force(g, sched)


def timer(phases: dict[str, float], name: str) -> _Timer:
    return _Timer(phases, name)
