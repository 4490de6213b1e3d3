"""Graphs, model parameters, configuration weights and parameter transforms.

Three Gibbs measures live on a graph ``G = (V, E)``:

* the ferromagnetic Ising model on vertex subsets,
* the random cluster (RC) model on edge subsets,
* the generalized subgraph-world (GSW) model on edge subsets.

Weights are returned as :class:`LogWeight` so products over large
components never underflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

EdgeConfig = frozenset  # frozenset[int] of edge ids
VertexConfig = frozenset  # frozenset[int] of vertex ids


class InvalidInputError(ValueError):
    """Dimension mismatch, bad ids, or malformed instance data."""


class DomainError(ValueError):
    """A parameter lies outside the domain where a formula is defined."""


class UnsupportedInputError(DomainError):
    """Inputs outside the regimes the samplers support (e.g. mixed field regime)."""


class ContractViolation(RuntimeError):
    """An operation was called with its precondition violated."""


class ParseError(InvalidInputError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


@dataclass(frozen=True)
class LogWeight:
    """A nonnegative real stored as ``(zero, log)``."""

    zero: bool
    log: float = 0.0

    @property
    def value(self) -> float:
        return 0.0 if self.zero else math.exp(self.log)

    @classmethod
    def from_log(cls, log_value: float) -> "LogWeight":
        if log_value == -math.inf:
            return cls(True, -math.inf)
        return cls(False, float(log_value))


# --------------------------------------------------------------------- graph


@dataclass(frozen=True)
class Graph:
    n: int
    edges: tuple[tuple[int, int], ...]
    incident: tuple[tuple[int, ...], ...] = field(repr=False, compare=False, default=())

    def __init__(self, n: int, edges: Iterable[Sequence[int]]):
        n = int(n)
        if n < 0:
            raise InvalidInputError("vertex count must be nonnegative")
        edge_list = []
        inc: list[list[int]] = [[] for _ in range(n)]
        for eid, (u, v) in enumerate(edges):
            u, v = int(u), int(v)
            if not (0 <= u < n and 0 <= v < n):
                raise InvalidInputError(f"edge {eid} endpoint out of range: ({u}, {v})")
            if u == v:
                raise InvalidInputError(f"edge {eid} is a self-loop at vertex {u}")
            edge_list.append((u, v))
            inc[u].append(eid)
            inc[v].append(eid)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "edges", tuple(edge_list))
        object.__setattr__(self, "incident", tuple(tuple(x) for x in inc))

    @property
    def m(self) -> int:
        return len(self.edges)

    def restrict(self, edge_ids: Iterable[int]) -> tuple["Graph", list[int]]:
        """Subgraph on the same vertices; returns it with the old id of each new edge."""
        ids = sorted(edge_ids)
        return Graph(self.n, [self.edges[e] for e in ids]), ids


# --------------------------------------------------------------- parameters


def _vec(values, size: int, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float).reshape(-1)
    if arr.shape[0] != size:
        raise InvalidInputError(f"{what} has length {arr.shape[0]}, expected {size}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{what} contains non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class IsingParams:
    beta: np.ndarray
    lam: np.ndarray

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=float).reshape(-1)
        lam = np.asarray(self.lam, dtype=float).reshape(-1)
        if np.any(beta <= 1):
            raise DomainError("Ising edge activities must satisfy beta_e > 1")
        if np.any(lam < 0):
            raise DomainError("external fields must be nonnegative")
        if lam.size and not (np.all(lam <= 1) or np.all(lam > 1)):
            raise UnsupportedInputError(
                "unsupported field regime: lambda must lie entirely in [0, 1] or entirely in (1, inf)"
            )
        beta.setflags(write=False)
        lam.setflags(write=False)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "lam", lam)

    def check(self, g: Graph) -> None:
        _vec(self.beta, g.m, "beta")
        _vec(self.lam, g.n, "lambda")


@dataclass(frozen=True, eq=False)
class RCParams:
    p: np.ndarray
    lam: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float).reshape(-1)
        lam = np.asarray(self.lam, dtype=float).reshape(-1)
        if np.any((p < 0) | (p > 1)):
            raise DomainError("RC edge parameters must lie in [0, 1]")
        # lambda = 1 is legal for oracles; samplers enforce lambda < 1 themselves
        if np.any((lam < 0) | (lam > 1)):
            raise DomainError("RC fields must lie in [0, 1]")
        p.setflags(write=False)
        lam.setflags(write=False)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "lam", lam)

    def check(self, g: Graph) -> None:
        _vec(self.p, g.m, "p")
        _vec(self.lam, g.n, "lambda")

    @property
    def lambda_max(self) -> float:
        return float(self.lam.max()) if self.lam.size else 0.0


@dataclass(frozen=True, eq=False)
class GSWParams:
    p: np.ndarray
    eta: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float).reshape(-1)
        eta = np.asarray(self.eta, dtype=float).reshape(-1)
        sigma = np.asarray(self.sigma, dtype=np.int8).reshape(-1)
        if np.any((p < 0) | (p > 0.5)):
            raise DomainError("GSW edge parameters must lie in [0, 1/2]")
        if np.any((eta < 0) | (eta > 1)):
            raise DomainError("GSW vertex parameters must lie in [0, 1]")
        if np.any((sigma != 0) & (sigma != 1)):
            raise DomainError("parity vector must be 0/1")
        for a in (p, eta, sigma):
            a.setflags(write=False)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "sigma", sigma)

    def check(self, g: Graph) -> None:
        _vec(self.p, g.m, "p")
        _vec(self.eta, g.n, "eta")
        if self.sigma.shape[0] != g.n:
            raise InvalidInputError(f"sigma has length {self.sigma.shape[0]}, expected {g.n}")


# ------------------------------------------------------------------ helpers


def components(n: int, edges: Sequence[tuple[int, int]], present: Iterable[int]) -> list[int]:
    """Component label (smallest member) per vertex of ``(V, present)``."""
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in present:
        u, v = edges[e]
        ru, rv = find(u), find(v)
        if ru != rv:
            if ru < rv:
                parent[rv] = ru
            else:
                parent[ru] = rv
    return [find(v) for v in range(n)]


def _check_ids(ids: Iterable[int], bound: int, what: str) -> list[int]:
    out = [int(i) for i in ids]
    for i in out:
        if not 0 <= i < bound:
            raise InvalidInputError(f"{what} id {i} out of range [0, {bound})")
    return out


def log_lambda_product(lam: np.ndarray, members: Iterable[int]) -> LogWeight:
    total = 0.0
    for v in members:
        if lam[v] == 0:
            return LogWeight(True, -math.inf)
        total += math.log(lam[v])
    return LogWeight(False, total)


def _bernoulli_log(p: np.ndarray, present: set[int]) -> float:
    total = 0.0
    for e, pe in enumerate(p):
        f = pe if e in present else 1.0 - pe
        if f == 0:
            return -math.inf
        total += math.log(f)
    return total


# ------------------------------------------------------------------ weights


def ising_weight(g: Graph, params: IsingParams, s: Iterable[int]) -> LogWeight:
    params.check(g)
    inside = set(_check_ids(s, g.n, "vertex"))
    log_w = 0.0
    for e, (u, v) in enumerate(g.edges):
        if (u in inside) == (v in inside):
            log_w += math.log(params.beta[e])
    for v in inside:
        if params.lam[v] == 0:
            return LogWeight(True, -math.inf)
        log_w += math.log(params.lam[v])
    return LogWeight(False, log_w)


def rc_weight(g: Graph, params: RCParams, s: Iterable[int]) -> LogWeight:
    params.check(g)
    present = set(_check_ids(s, g.m, "edge"))
    log_w = _bernoulli_log(params.p, present)
    if log_w == -math.inf:
        return LogWeight(True, -math.inf)
    labels = components(g.n, g.edges, present)
    groups: dict[int, list[int]] = {}
    for v, r in enumerate(labels):
        groups.setdefault(r, []).append(v)
    for members in groups.values():
        prod = log_lambda_product(params.lam, members)
        if not prod.zero:
            log_w += math.log1p(math.exp(prod.log))
    return LogWeight(False, log_w)


def gsw_weight(g: Graph, params: GSWParams, s: Iterable[int]) -> LogWeight:
    params.check(g)
    present = set(_check_ids(s, g.m, "edge"))
    log_w = _bernoulli_log(params.p, present)
    if log_w == -math.inf:
        return LogWeight(True, -math.inf)
    parity = [0] * g.n
    for e in present:
        u, v = g.edges[e]
        parity[u] ^= 1
        parity[v] ^= 1
    for v in range(g.n):
        if parity[v] == params.sigma[v]:
            if params.eta[v] == 0:
                return LogWeight(True, -math.inf)
            log_w += math.log(params.eta[v])
    return LogWeight(False, log_w)


# --------------------------------------------------------------- transforms


def beta_to_p(beta) -> np.ndarray:
    """``p = 1 - 1/beta`` evaluated as ``(beta - 1)/beta``."""
    beta = np.asarray(beta, dtype=float)
    if np.any(~(beta > 1)):
        raise DomainError("beta_to_p requires beta > 1")
    return (beta - 1.0) / beta


def beta_minus_one_to_p(beta_minus_one) -> np.ndarray:
    """Same map for activities given as ``beta - 1``, precise near ``beta = 1``."""
    d = np.asarray(beta_minus_one, dtype=float)
    if np.any(~(d > 0)):
        raise DomainError("beta - 1 must be positive")
    return d / (1.0 + d)


def lambda_to_eta(lam) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    if np.any((lam < 0) | (lam > 1)):
        raise DomainError("lambda_to_eta requires 0 <= lambda <= 1")
    return (1.0 - lam) / (1.0 + lam)


def p_star(p, theta: float) -> np.ndarray:
    """Tilted edge probability used on the revealed edge set of a field step."""
    if not 0.0 < theta < 1.0:
        raise DomainError("theta must lie in (0, 1)")
    p = np.asarray(p, dtype=float)
    if np.any((p < 0) | (p > 1)):
        raise DomainError("p must lie in [0, 1]")
    return p / (theta * (1.0 - p) + p)


def p_to_q(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if np.any((p < 0) | (p > 1)):
        raise DomainError("p must lie in [0, 1]")
    return p / (2.0 - p)


def ising_to_rc(params: IsingParams) -> RCParams:
    return RCParams(beta_to_p(params.beta), params.lam)


def rc_to_sw(params: RCParams) -> GSWParams:
    """Subgraph-world instance ``(p/2, eta(lambda), sigma = 1)`` paired with an RC instance."""
    n = params.lam.shape[0]
    return GSWParams(params.p / 2.0, lambda_to_eta(params.lam), np.ones(n, dtype=np.int8))


# ------------------------------------------------------------ instance files


@dataclass(frozen=True, eq=False)
class Instance:
    graph: Graph
    values: np.ndarray  # beta_e for Ising files, p_e for RC files
    lam: np.ndarray


def parse_instance(text: str) -> Instance:
    """Parse ``n m`` / ``u v value`` x m / ``lambda_v`` x n, ``#`` comments."""
    tokens: list[tuple[int, list[str]]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if body:
            tokens.append((lineno, body.split()))
    if not tokens:
        raise ParseError("empty instance")
    lineno, head = tokens[0]
    if len(head) != 2:
        raise ParseError("header must be 'n m'", lineno)
    try:
        n, m = int(head[0]), int(head[1])
    except ValueError:
        raise ParseError("header must contain two integers", lineno) from None
    if n < 0 or m < 0:
        raise ParseError("n and m must be nonnegative", lineno)
    if len(tokens) != 1 + m + n:
        last = tokens[-1][0]
        raise ParseError(f"expected {m} edge lines and {n} field lines, found {len(tokens) - 1} data lines", last)
    edges, values = [], []
    for lineno, parts in tokens[1 : 1 + m]:
        if len(parts) != 3:
            raise ParseError("edge line must be 'u v value'", lineno)
        try:
            u, v, val = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise ParseError("malformed edge line", lineno) from None
        if not (0 <= u < n and 0 <= v < n):
            raise ParseError(f"endpoint out of range [0, {n})", lineno)
        if u == v:
            raise ParseError("self-loops are not allowed", lineno)
        edges.append((u, v))
        values.append(val)
    lam = []
    for lineno, parts in tokens[1 + m :]:
        if len(parts) != 1:
            raise ParseError("field line must hold a single value", lineno)
        try:
            lam.append(float(parts[0]))
        except ValueError:
            raise ParseError("malformed field value", lineno) from None
    return Instance(Graph(n, edges), np.array(values, dtype=float), np.array(lam, dtype=float))


def read_instance(path: str | Path) -> Instance:
    return parse_instance(Path(path).read_text(encoding="utf-8"))


def format_instance(g: Graph, values, lam, comment: str | None = None) -> str:
    lines = []
    if comment:
        lines.extend(f"# {c}" for c in comment.splitlines())
    lines.append(f"{g.n} {g.m}")
    for (u, v), val in zip(g.edges, values):
        lines.append(f"{u} {v} {float(val)!r}")
    lines.extend(repr(float(x)) for x in lam)
    return "\n".join(lines) + "\n"
