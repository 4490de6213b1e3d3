"""Fully-dynamic connectivity with per-component field aggregates.

Holm-de Lichtenberg-Thorup levels: every present edge carries a level
``0 <= l <= log2 n``.  Forest ``F_i`` holds the tree edges of level ``>= i``
and is stored as Euler-tour sequences in splay trees.  A deleted tree edge
is replaced by scanning non-tree edges of its level, smaller side first,
and raising the level of every edge that fails to reconnect.  Amortized
cost is ``O(log^2 n)`` per update.

Each splay node aggregates, over its subtree: the number of vertex nodes,
flag bits (vertex has non-tree edges at this level / arc of a tree edge of
exactly this level), and at level 0 the count of zero fields plus the sum of
``log lambda`` over the nonzero ones.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .model import ContractViolation, InvalidInputError, LogWeight

_NT = 1  # vertex node has non-tree edges at this level
_TREE = 2  # arc of a tree edge whose level equals this level


class _Node:
    __slots__ = ("l", "r", "p", "vc", "f", "zc", "ls", "svc", "sf", "szc", "sls", "v", "e")

    def __init__(self, v: int = -1, e: int = -1, vc: int = 0, zc: int = 0, ls: float = 0.0, f: int = 0):
        self.l = self.r = self.p = None
        self.v, self.e = v, e
        self.vc, self.zc, self.ls, self.f = vc, zc, ls, f
        self.svc, self.szc, self.sls, self.sf = vc, zc, ls, f


def _upd(x: _Node) -> None:
    svc, sf, szc, sls = x.vc, x.f, x.zc, x.ls
    c = x.l
    if c is not None:
        svc += c.svc
        sf |= c.sf
        szc += c.szc
        sls += c.sls
    c = x.r
    if c is not None:
        svc += c.svc
        sf |= c.sf
        szc += c.szc
        sls += c.sls
    x.svc, x.sf, x.szc, x.sls = svc, sf, szc, sls


def _rotate(x: _Node) -> None:
    p = x.p
    g = p.p
    if p.l is x:
        b = x.r
        p.l = b
        x.r = p
    else:
        b = x.l
        p.r = b
        x.l = p
    if b is not None:
        b.p = p
    p.p = x
    x.p = g
    if g is not None:
        if g.l is p:
            g.l = x
        else:
            g.r = x
    _upd(p)


def _splay(x: _Node) -> _Node:
    while x.p is not None:
        p = x.p
        g = p.p
        if g is None:
            _rotate(x)
        elif (g.l is p) == (p.l is x):
            _rotate(p)
            _rotate(x)
        else:
            _rotate(x)
            _rotate(x)
    _upd(x)
    return x


def _join(a: _Node | None, b: _Node | None) -> _Node | None:
    """Concatenate two sequences given by their roots."""
    if a is None:
        return b
    if b is None:
        return a
    x = a
    while x.r is not None:
        x = x.r
    _splay(x)
    x.r = b
    b.p = x
    _upd(x)
    return x


def _split_before(x: _Node) -> tuple[_Node | None, _Node]:
    _splay(x)
    left = x.l
    if left is not None:
        left.p = None
        x.l = None
        _upd(x)
    return left, x


def _reroot(x: _Node) -> _Node:
    left, right = _split_before(x)
    return _join(right, left)


def _find_flag(root: _Node, bit: int) -> _Node:
    x = root
    while True:
        if x.f & bit:
            return x
        c = x.l
        if c is not None and c.sf & bit:
            x = c
        else:
            x = x.r


class _Forest:
    """Euler-tour forest for one level; vertex nodes are created on demand."""

    __slots__ = ("nodes", "arcs")

    def __init__(self, nodes: list):
        self.nodes = nodes
        self.arcs: dict[int, tuple[_Node, _Node]] = {}

    def node(self, v: int) -> _Node:
        x = self.nodes[v]
        if x is None:
            x = self.nodes[v] = _Node(v=v, vc=1)
        return x

    def connected(self, u: int, v: int) -> bool:
        if u == v:
            return True
        nu, nv = self.nodes[u], self.nodes[v]
        if nu is None or nv is None:
            return False
        _splay(nu)
        _splay(nv)
        return nu.p is not None

    def link(self, u: int, v: int, e: int, exact_level: bool) -> None:
        ru = _reroot(self.node(u))
        rv = _reroot(self.node(v))
        a1 = _Node(e=e, f=_TREE if exact_level else 0)
        a2 = _Node(e=e)
        self.arcs[e] = (a1, a2)
        _join(_join(_join(ru, a1), rv), a2)

    def cut(self, e: int) -> None:
        a1, a2 = self.arcs.pop(e)
        left, right = _split_before(a1)
        _join(right, left)  # sequence now starts at a1: a1 A a2 B
        _split_before(a2)
        _splay(a1)
        rest = a1.r
        if rest is not None:
            rest.p = None
            a1.r = None
        rest = a2.r
        if rest is not None:
            rest.p = None
            a2.r = None


class DynConn:
    """Connectivity of ``(V, X)`` under edge insertions and deletions.

    ``edges`` fixes the endpoint pair of every edge id; ``lam`` gives the
    static per-vertex field whose product over a component is queryable.
    """

    def __init__(self, n: int, edges: Sequence[tuple[int, int]], lam):
        lam = np.asarray(lam, dtype=float).reshape(-1)
        if lam.shape[0] != n:
            raise InvalidInputError(f"lambda has length {lam.shape[0]}, expected {n}")
        if np.any(lam < 0):
            raise InvalidInputError("fields must be nonnegative")
        self.n = n
        self._edges = [(int(u), int(v)) for u, v in edges]
        for u, v in self._edges:
            if u == v or not (0 <= u < n and 0 <= v < n):
                raise InvalidInputError(f"bad edge ({u}, {v})")
        base = []
        for v in range(n):
            if lam[v] == 0:
                base.append(_Node(v=v, vc=1, zc=1))
            else:
                base.append(_Node(v=v, vc=1, ls=math.log(lam[v])))
        self._forests = [_Forest(base)]
        self._nontree: list[dict[int, set[int]]] = [{}]
        self._level: dict[int, int] = {}
        self._is_tree: dict[int, bool] = {}

    # ---------------------------------------------------------------- queries

    def __contains__(self, e: int) -> bool:
        return e in self._level

    def __len__(self) -> int:
        return len(self._level)

    @property
    def edge_set(self) -> frozenset:
        return frozenset(self._level)

    def connected(self, u: int, v: int) -> bool:
        return self._forests[0].connected(u, v)

    def comp_lambda_product(self, u: int) -> LogWeight:
        x = _splay(self._forests[0].nodes[u])
        if x.szc:
            return LogWeight(True, -math.inf)
        return LogWeight(False, x.sls)

    def comp_size(self, u: int) -> int:
        return _splay(self._forests[0].nodes[u]).svc

    def component_labels(self) -> list[int]:
        """Debug dump: smallest vertex id of each vertex's component."""
        labels = [-1] * self.n
        for v in range(self.n):
            if labels[v] >= 0:
                continue
            root = _splay(self._forests[0].nodes[v])
            members, stack = [], [root]
            while stack:
                x = stack.pop()
                if x.v >= 0:
                    members.append(x.v)
                if x.l is not None:
                    stack.append(x.l)
                if x.r is not None:
                    stack.append(x.r)
            low = min(members)
            for w in members:
                labels[w] = low
        return labels

    # ---------------------------------------------------------------- updates

    def insert_edge(self, e: int) -> None:
        if e in self._level:
            raise ContractViolation(f"edge {e} is already present")
        u, v = self._edges[e]
        self._level[e] = 0
        forest = self._forests[0]
        if forest.connected(u, v):
            self._is_tree[e] = False
            self._add_nontree(0, e)
        else:
            self._is_tree[e] = True
            forest.link(u, v, e, True)

    def delete_edge(self, e: int) -> None:
        if e not in self._level:
            raise ContractViolation(f"edge {e} is not present")
        level = self._level.pop(e)
        if not self._is_tree.pop(e):
            self._remove_nontree(level, e)
            return
        for i in range(level + 1):
            self._forests[i].cut(e)
        u, v = self._edges[e]
        for i in range(level, -1, -1):
            if self._replace(i, u, v):
                return

    # -------------------------------------------------------------- internals

    def _ensure_level(self, i: int) -> None:
        while len(self._forests) <= i:
            self._forests.append(_Forest([None] * self.n))
            self._nontree.append({})

    def _add_nontree(self, i: int, e: int) -> None:
        table = self._nontree[i]
        for w in self._edges[e]:
            bucket = table.get(w)
            if bucket is None:
                bucket = table[w] = set()
            if not bucket:
                x = self._forests[i].node(w)
                x.f |= _NT
                _splay(x)
            bucket.add(e)

    def _remove_nontree(self, i: int, e: int) -> None:
        table = self._nontree[i]
        for w in self._edges[e]:
            bucket = table[w]
            bucket.discard(e)
            if not bucket:
                x = self._forests[i].nodes[w]
                x.f &= ~_NT
                _splay(x)

    def _replace(self, i: int, u: int, v: int) -> bool:
        """Search level ``i`` for an edge reconnecting the trees of ``u`` and ``v``."""
        self._ensure_level(i + 1)
        forest, upper = self._forests[i], self._forests[i + 1]
        nu, nv = forest.node(u), forest.node(v)
        su = _splay(nu).svc
        sv = _splay(nv).svc
        small = nu if su <= sv else nv

        # raise every level-i tree edge of the smaller tree
        while True:
            _splay(small)
            if not small.sf & _TREE:
                break
            x = _find_flag(small, _TREE)
            x.f &= ~_TREE
            _splay(x)
            f = x.e
            self._level[f] = i + 1
            a, b = self._edges[f]
            upper.link(a, b, f, True)

        table = self._nontree[i]
        while True:
            _splay(small)
            if not small.sf & _NT:
                return False
            w = _find_flag(small, _NT).v
            for f in list(table[w]):
                a, b = self._edges[f]
                y = b if a == w else a
                self._remove_nontree(i, f)
                if forest.connected(w, y):
                    self._level[f] = i + 1
                    self._add_nontree(i + 1, f)
                else:
                    self._is_tree[f] = True
                    for j in range(i + 1):
                        self._forests[j].link(a, b, f, j == i)
                    return True
