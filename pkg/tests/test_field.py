import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import chisquare

from isingfield.corpus import corpus, rc_for
from isingfield.exact import (
    EnumerationCapError,
    empirical,
    enumerate_distribution,
    exact_sample_masks,
    mask_of,
    tv_distance,
)
from isingfield.field import (
    SamplerReport,
    TABLE_MAX_EDGES,
    field_dynamics_batch,
    field_step,
    round_components,
    sample_ising_many,
    sample_rc,
    sample_rc_many,
    schedule_paper,
    schedule_practical,
    t_gd_from,
    timer,
    uses_brute_force,
)
from isingfield.model import DomainError, Graph, IsingParams, RCParams, UnsupportedInputError
from isingfield.suites import field_kernel, field_suite, min_rc_mass_bound
from oracles import decimal_schedule

K2 = Graph(2, [(0, 1)])
TRIANGLE = Graph(3, [(0, 1), (1, 2), (0, 2)])
P3 = Graph(3, [(0, 1), (1, 2)])

class TestPaperSchedule:
    def test_k_spot_value(self):
        sched = schedule_paper(0.5, 0.5, 0.5, 100, 200)
        assert sched.k == pytest.approx(5.714234191796773e-64, rel=1e-9)
        assert sched.log_k == pytest.approx(math.log(1e-14 * 0.25) - 112.0, rel=1e-12)

    def test_t_gd_spot_value(self):
        assert t_gd_from(math.log(100), 50, 0.5)[0] == 991

    def test_n0_for_half_field(self):
        assert schedule_paper(0.5, 0.5, 0.5, 100, 200).log_n0 == pytest.approx(48.0)

    def test_t_fd_is_not_representable_for_realistic_fields(self):
        sched = schedule_paper(0.5, 0.5, 0.5, 100, 200)
        assert sched.t_fd is None and sched.log_t_fd > 700
        # T_GD is only logarithmic in T_FD, so it stays representable
        assert sched.t_gd == math.ceil(math.exp(sched.log_t_gd))

    @pytest.mark.parametrize(
        "eps, p_min, lam_max, n, m",
        [
            (0.5, 0.5, 0.5, 100, 200),
            (0.1, 0.2, 0.0, 10, 12),
            (0.01, 0.9, 0.8, 1000, 5000),
            (0.3, 0.05, 0.3, 3, 2),
        ],
    )
    def test_matches_decimal_recomputation(self, eps, p_min, lam_max, n, m):
        sched = schedule_paper(eps, p_min, lam_max, n, m)
        want = decimal_schedule(eps, p_min, lam_max, n, m)
        for name, value in want.items():
            assert getattr(sched, name) == pytest.approx(value, rel=1e-9), name

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            schedule_paper(0.5, 0.5, 1.0, 10, 10)
        with pytest.raises(DomainError):
            schedule_paper(0.5, 0.0, 0.5, 10, 10)
        with pytest.raises(DomainError):
            schedule_paper(1.5, 0.5, 0.5, 10, 10)

    def test_unrepresentable_schedule_refuses_to_run(self):
        g = Graph(30, [(i, i + 1) for i in range(29)])
        rc = RCParams([0.6] * 29, [0.5] * 30)
        sched = schedule_paper(0.5, 0.6, 0.5, g.n, g.m)
        with pytest.raises(EnumerationCapError):
            sample_rc(g, rc, 0.5, sched, np.random.default_rng(0))

    def test_paper_mode_small_instance_is_brute_force(self):
        sched = schedule_paper(0.5, 0.5, 0.5, 3, 3)
        assert uses_brute_force(TRIANGLE, sched)


class TestPracticalSchedule:
    def test_defaults(self):
        sched = schedule_practical(0.1, 40)
        assert sched.theta == 0.5
        assert sched.t_fd == math.ceil(20 * math.log(400))
        want = math.ceil(2 * 40 * (math.log(40) + math.log(2 * sched.t_fd / 0.1)))
        assert sched.t_gd == want

    def test_overrides(self):
        sched = schedule_practical(0.5, 8, theta=0.5, t_fd=200, t_gd=160)
        assert (sched.t_fd, sched.t_gd) == (200, 160)

    @pytest.mark.parametrize("kw", [{"theta": 0.0}, {"theta": 1.0}, {"t_fd": 0}, {"t_gd": 0}])
    def test_validation(self, kw):
        with pytest.raises(DomainError):
            schedule_practical(0.5, 8, **kw)

    def test_eps_range(self):
        with pytest.raises(DomainError):
            schedule_practical(0.0, 8)

    def test_brute_force_cutoff(self):
        assert uses_brute_force(Graph(2, [(0, 1)] * 20), schedule_practical(0.5, 20))
        assert not uses_brute_force(Graph(2, [(0, 1)] * 21), schedule_practical(0.5, 21))
        assert not uses_brute_force(K2, schedule_practical(0.5, 1, brute_force_edges=None))


def chain_schedule(m, t_fd=10, t_gd=20, theta=0.5):
    return schedule_practical(0.5, m, theta=theta, t_fd=t_fd, t_gd=t_gd, brute_force_edges=None)


class TestFieldStep:
    def test_output_stays_inside_revealed_union(self):
        rc = RCParams([0.7] * 3, [0.5] * 3)
        sched = chain_schedule(3, theta=0.3)
        for seed in range(50):
            rng = np.random.default_rng(seed)
            revealed = set(np.flatnonzero(np.random.default_rng(seed).random(3) < 0.3).tolist())
            out = field_step(frozenset({1}), TRIANGLE, rc, sched, rng)
            assert out <= revealed | {1}

    def test_p_one_keeps_everything(self):
        rc = RCParams([1.0] * 3, [0.5] * 3)
        out = field_step(frozenset({0, 1, 2}), TRIANGLE, rc, chain_schedule(3), np.random.default_rng(0))
        assert out == frozenset({0, 1, 2})

    def test_exact_kernel_on_k2_preserves_measure(self):
        rc = RCParams([0.8], [0.5, 0.5])
        mu = enumerate_distribution(K2, rc).probs
        P = field_kernel(K2, rc, 0.5)
        assert np.allclose(P.sum(axis=1), 1.0)
        assert np.abs(mu @ P - mu).max() < 1e-12

    def test_kernel_near_full_reveal_is_resample(self):
        rc = RCParams([0.6, 0.3, 0.7], [0.5, 0.2, 0.9])
        mu = enumerate_distribution(TRIANGLE, rc).probs
        P = field_kernel(TRIANGLE, rc, 1.0 - 1e-9)
        assert np.abs(P - mu[None, :]).max() < 1e-6


class TestSampleRC:
    def test_brute_force_branch_is_exact_sampling(self):
        rc = RCParams([0.6, 0.3, 0.7], [0.5, 0.2, 0.9])
        sched = schedule_practical(0.5, 3)
        got = sample_rc_many(TRIANGLE, rc, 0.5, sched, np.random.default_rng(4), 500)
        want = exact_sample_masks(enumerate_distribution(TRIANGLE, rc), np.random.default_rng(4), 500)
        assert [mask_of(s) for s in got] == want.tolist()

    def test_brute_force_accepts_unit_field(self):
        rc = RCParams([0.5], [1.0, 1.0])
        out = sample_rc_many(K2, rc, 0.5, schedule_practical(0.5, 1), np.random.default_rng(0), 10)
        assert len(out) == 10

    def test_chain_rejects_unit_field(self):
        with pytest.raises(DomainError):
            sample_rc(K2, RCParams([0.5], [1.0, 1.0]), 0.5, chain_schedule(1), np.random.default_rng(0))

    def test_chain_with_p_one_is_point_mass(self):
        rc = RCParams([1.0] * 3, [0.5] * 3)
        out = sample_rc_many(TRIANGLE, rc, 0.5, chain_schedule(3, t_fd=3, t_gd=5), np.random.default_rng(0), 5)
        assert all(x == frozenset({0, 1, 2}) for x in out)

    def test_eps_is_validated(self):
        with pytest.raises(DomainError):
            sample_rc(K2, RCParams([0.5], [0.5, 0.5]), 1.0, chain_schedule(1), np.random.default_rng(0))

    def test_dynconn_chain_tv_matches_exact_baseline(self):
        rc = RCParams([0.6, 0.4, 0.7], [0.5, 0.3, 0.6])
        target = enumerate_distribution(TRIANGLE, rc)
        n = 600
        xs = sample_rc_many(TRIANGLE, rc, 0.5, chain_schedule(3), np.random.default_rng(8), n)
        chain_tv = tv_distance(empirical(np.array([mask_of(x) for x in xs]), 3), target)
        rng = np.random.default_rng(9)
        baseline = [tv_distance(empirical(exact_sample_masks(target, rng, n), 3), target) for _ in range(200)]
        assert chain_tv <= np.mean(baseline) + 4 * np.std(baseline)

    def test_dynconn_chain_is_deterministic_per_seed(self):
        rc = RCParams([0.6, 0.4, 0.7], [0.5, 0.3, 0.6])
        a = sample_rc_many(TRIANGLE, rc, 0.5, chain_schedule(3, 3, 5), np.random.default_rng(1), 5)
        b = sample_rc_many(TRIANGLE, rc, 0.5, chain_schedule(3, 3, 5), np.random.default_rng(1), 5)
        assert a == b


class TestBatch:
    def test_matches_target_on_path(self):
        rc = RCParams([0.8, 0.5], [0.5, 0.7, 0.2])
        target = enumerate_distribution(P3, rc).probs
        masks = field_dynamics_batch(P3, rc, chain_schedule(2, 20, 20), np.random.default_rng(0), 40_000)
        counts = np.bincount(masks, minlength=4)
        assert chisquare(counts, target * counts.sum()).pvalue > 1e-4

    def test_chunking_does_not_change_output(self):
        rc = RCParams([0.8, 0.5], [0.5, 0.7, 0.2])
        sched = chain_schedule(2, 5, 5)
        a = field_dynamics_batch(P3, rc, sched, np.random.default_rng(3), 100, chunk=100)
        b = field_dynamics_batch(P3, rc, sched, np.random.default_rng(3), 100, chunk=100)
        assert np.array_equal(a, b)

    def test_table_limit(self):
        g = Graph(2, [(0, 1)] * (TABLE_MAX_EDGES + 1))
        rc = RCParams([0.5] * g.m, [0.5, 0.5])
        with pytest.raises(EnumerationCapError):
            field_dynamics_batch(g, rc, chain_schedule(g.m), np.random.default_rng(0), 2)

    def test_edgeless(self):
        out = field_dynamics_batch(Graph(3, []), RCParams([], [0.5] * 3), chain_schedule(1), np.random.default_rng(0), 4)
        assert out.tolist() == [0, 0, 0, 0]


class TestIsing:
    def test_zero_fields_give_empty_set(self):
        params = IsingParams([2.0, 3.0, 1.5], [0.0] * 3)
        out = sample_ising_many(TRIANGLE, params, 0.5, schedule_practical(0.5, 3), np.random.default_rng(0), 200)
        assert all(s == frozenset() for s in out)

    def test_zero_fields_through_the_chain(self):
        params = IsingParams([2.0, 3.0, 1.5], [0.0] * 3)
        out = sample_ising_many(TRIANGLE, params, 0.5, chain_schedule(3, 2, 3), np.random.default_rng(0), 5)
        assert all(s == frozenset() for s in out)

    def test_large_fields_use_complement(self):
        params = IsingParams([2.0], [3.0, 3.0])
        target = enumerate_distribution(K2, params)
        out = sample_ising_many(K2, params, 0.5, schedule_practical(0.5, 1), np.random.default_rng(5), 20_000)
        freq = empirical(np.array([mask_of(s) for s in out]), 2)
        assert tv_distance(freq, target) <= 0.05

    def test_unit_fields_on_k2(self):
        params = IsingParams([2.0], [1.0, 1.0])
        out = sample_ising_many(K2, params, 0.5, schedule_practical(0.5, 1), np.random.default_rng(6), 20_000)
        freq = empirical(np.array([mask_of(s) for s in out]), 2)
        assert tv_distance(freq, np.array([2, 1, 1, 2]) / 6) <= 0.02

    def test_mixed_regime_is_unsupported(self):
        with pytest.raises(UnsupportedInputError):
            IsingParams([2.0], [0.5, 2.0])

    def test_rounding_skips_zero_field_components(self):
        lam = np.array([0.0, 1e6, 1e6])
        for seed in range(20):
            out = round_components(P3, lam, {1}, np.random.default_rng(seed))
            assert 0 not in out

    def test_rounding_draws_one_coin_per_component(self):
        a = np.random.default_rng(0)
        b = np.random.default_rng(0)
        round_components(TRIANGLE, np.array([0.0, 0.5, 0.5]), set(), a)
        round_components(TRIANGLE, np.array([0.9, 0.5, 0.5]), set(), b)
        assert a.random() == b.random()

    @given(st.floats(-800, 800))
    def test_rounding_probability_is_finite_in_log_space(self, log_lam):
        g = Graph(1, [])
        lam = np.array([math.exp(log_lam)]) if -700 < log_lam < 700 else np.array([np.exp(np.clip(log_lam, -700, 700))])
        out = round_components(g, lam, set(), np.random.default_rng(0))
        assert out in (frozenset(), frozenset({0}))


class TestIdentities:
    def test_field_suite_passes(self):
        report = field_suite(seed=0)
        assert report.passed, "\n".join(report.lines())

    @pytest.mark.parametrize("entry", [e for e in corpus(max_vertices=5) if e.graph.m], ids=lambda e: e.name)
    def test_full_configuration_mass_bound(self, entry):
        mass, bound = min_rc_mass_bound(entry.graph, rc_for(entry, seed=1, lam_max=0.9))
        assert mass >= bound


class TestReport:
    def test_timings_behind_flag(self):
        sched = schedule_practical(0.5, 3)
        report = SamplerReport(10, 7, sched, True, {"enumerate": 0.5, "sample": 0.25})
        assert not any(line.startswith("time_") for line in report.lines())
        lines = report.lines(timings=True)
        assert lines[-1] == "time_total 0.750000"
        assert report.total == pytest.approx(sum(report.phases.values()))

    def test_paper_line(self):
        sched = schedule_paper(0.5, 0.5, 0.5, 10, 10)
        assert any(line.startswith("n0 ") for line in SamplerReport(1, None, sched, False).lines())

    def test_timer_accumulates(self):
        phases: dict[str, float] = {}
        with timer(phases, "a"):
            pass
        with timer(phases, "a"):
            pass
        assert set(phases) == {"a"} and phases["a"] >= 0
