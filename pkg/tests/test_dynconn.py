import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fuzz_dynconn import oracle_labels, run_fuzz
from isingfield.dynconn import DynConn
from isingfield.model import ContractViolation, InvalidInputError


def path3(lam=(0.5, 0.5, 0.5)):
    return DynConn(3, [(0, 1), (1, 2), (0, 2)], lam)


class TestQueries:
    def test_join_two_singletons(self):
        dc = DynConn(2, [(0, 1)], [0.5, 0.5])
        dc.insert_edge(0)
        assert dc.comp_lambda_product(0).value == pytest.approx(0.25)
        assert dc.comp_size(1) == 2

    def test_insert_inside_component_keeps_answers(self):
        dc = path3()
        dc.insert_edge(0)
        dc.insert_edge(1)
        dc.insert_edge(2)
        assert dc.connected(0, 2) and dc.comp_size(0) == 3

    def test_zero_field_absorbs_product(self):
        dc = DynConn(3, [(0, 1), (1, 2)], [0.5, 0.0, 0.5])
        assert not dc.comp_lambda_product(0).zero
        dc.insert_edge(0)
        assert dc.comp_lambda_product(0).zero
        assert not dc.comp_lambda_product(2).zero

    def test_delete_cycle_edge(self):
        dc = path3()
        for e in range(3):
            dc.insert_edge(e)
        dc.delete_edge(2)
        assert dc.connected(0, 2)

    def test_delete_bridge(self):
        dc = path3()
        dc.insert_edge(0)
        dc.insert_edge(1)
        dc.delete_edge(0)
        assert not dc.connected(0, 2) and dc.connected(1, 2)

    def test_reflexive_and_isolated(self):
        dc = DynConn(3, [(0, 1)], [0.3, 0.5, 0.5])
        assert dc.connected(1, 1)
        assert not dc.connected(0, 1)
        assert dc.comp_lambda_product(0).log == pytest.approx(math.log(0.3))
        assert dc.comp_size(2) == 1

    def test_path_product(self):
        dc = path3()
        dc.insert_edge(0)
        dc.insert_edge(1)
        assert dc.comp_lambda_product(2).log == pytest.approx(math.log(0.125))

    def test_spanning_tree_size(self):
        n = 50
        dc = DynConn(n, [(i, i + 1) for i in range(n - 1)], np.full(n, 0.9))
        for e in range(n - 1):
            dc.insert_edge(e)
        assert dc.comp_size(17) == n

    def test_parallel_edges(self):
        dc = DynConn(2, [(0, 1), (0, 1)], [0.5, 0.5])
        dc.insert_edge(0)
        dc.insert_edge(1)
        dc.delete_edge(0)
        assert dc.connected(0, 1)
        dc.delete_edge(1)
        assert not dc.connected(0, 1)


class TestContracts:
    def test_duplicate_insert(self):
        dc = path3()
        dc.insert_edge(0)
        with pytest.raises(ContractViolation):
            dc.insert_edge(0)

    def test_absent_delete(self):
        with pytest.raises(ContractViolation):
            path3().delete_edge(1)

    def test_bad_inputs(self):
        with pytest.raises(InvalidInputError):
            DynConn(2, [(0, 0)], [0.5, 0.5])
        with pytest.raises(InvalidInputError):
            DynConn(2, [(0, 1)], [0.5])


@st.composite
def scripts(draw):
    n = draw(st.integers(2, 12))
    m = draw(st.integers(1, 3 * n))
    edges = []
    for _ in range(m):
        u = draw(st.integers(0, n - 1))
        v = draw(st.integers(0, n - 2))
        edges.append((u, v if v < u else v + 1))
    lam = draw(st.lists(st.sampled_from([0.0, 0.25, 0.5, 0.9, 1.0]), min_size=n, max_size=n))
    ops = draw(st.lists(st.integers(0, m - 1), max_size=80))
    return n, edges, lam, ops


@given(scripts())
def test_scripts_match_static_oracle(script):
    n, edges, lam, ops = script
    dc = DynConn(n, edges, lam)
    present: set[int] = set()
    lam = np.asarray(lam)
    for e in ops:
        if e in present:
            dc.delete_edge(e)
            present.discard(e)
        else:
            dc.insert_edge(e)
            present.add(e)
        labels = oracle_labels(n, edges, present)
        for u in range(n):
            members = np.flatnonzero(labels == labels[u])
            assert dc.comp_size(u) == members.size
            got = dc.comp_lambda_product(u)
            assert got.zero == bool(np.any(lam[members] == 0))
            if not got.zero:
                assert got.log == pytest.approx(float(np.log(lam[members]).sum()), abs=1e-12)
            for v in range(n):
                assert dc.connected(u, v) == (labels[u] == labels[v])
    assert dc.edge_set == frozenset(present)


@given(scripts(), st.integers(0, 10**6))
def test_insert_then_delete_restores_answers(script, pick):
    n, edges, lam, ops = script
    dc = DynConn(n, edges, lam)
    present: set[int] = set()
    for e in ops:
        if e in present:
            dc.delete_edge(e)
            present.discard(e)
        else:
            dc.insert_edge(e)
            present.add(e)
    absent = [e for e in range(len(edges)) if e not in present]
    if not absent:
        return
    before = (dc.component_labels(), [dc.comp_lambda_product(u) for u in range(n)])
    e = absent[pick % len(absent)]
    dc.insert_edge(e)
    dc.delete_edge(e)
    after = (dc.component_labels(), [dc.comp_lambda_product(u) for u in range(n)])
    assert before[0] == after[0]
    for a, b in zip(before[1], after[1]):
        assert a.zero == b.zero and (a.zero or a.log == pytest.approx(b.log, abs=1e-12))


@pytest.mark.parametrize("n", [10, 100, 1000])
def test_fuzz_short(n):
    result = run_fuzz(n, 5000, seed=n + 1, dump_every=500)
    assert result.mismatches == 0
    assert result.worst_log_rel <= 1e-9
