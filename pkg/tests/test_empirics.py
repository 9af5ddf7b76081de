import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from orlicz_lab.empirics import (
    KS_CRITICAL_1PCT,
    ks_distance,
    ks_two_sample,
    moment_estimate,
    rare_event_rate,
    tv_histogram,
)
from orlicz_lab.errors import ConfigError, DegenerateError, DomainError


class TestKS:
    def test_point_mass_vs_continuous(self):
        # all mass at 10 against N(0, 1): the distance is essentially 1
        d = ks_distance(np.full(100, 10.0), stats.norm.cdf)
        assert d.statistic == pytest.approx(1.0, abs=1e-12)
        assert not d.passed

    def test_single_point(self):
        assert ks_distance([0.0], stats.norm.cdf).statistic == pytest.approx(0.5)

    def test_critical_values(self):
        d = ks_distance(np.zeros(400), stats.norm.cdf)
        assert d.critical_value_1pct == pytest.approx(KS_CRITICAL_1PCT / 20)
        t = ks_two_sample(np.zeros(100), np.zeros(400))
        assert t.critical_value_1pct == pytest.approx(1.63 * math.sqrt(500 / 40_000))
        assert t.statistic == 0.0 and t.passed

    def test_normal_vs_unit_variance_laplace(self):
        x = stats.laplace(scale=1 / math.sqrt(2)).rvs(100_000, random_state=np.random.default_rng(0))
        assert ks_distance(x, stats.norm.cdf).statistic >= 0.04

    def test_correct_law_passes(self):
        x = np.random.default_rng(1).standard_normal(50_000)
        assert ks_distance(x, stats.norm.cdf).passed

    def test_disjoint_two_sample(self):
        assert ks_two_sample(np.zeros(10), np.ones(20)).statistic == 1.0

    def test_empty(self):
        with pytest.raises(DomainError):
            ks_distance([], stats.norm.cdf)
        with pytest.raises(DomainError):
            ks_two_sample([], [1.0])

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.floats(-50, 50), min_size=1, max_size=60), st.randoms(use_true_random=False))
    def test_permutation_invariant(self, xs, rnd):
        ys = list(xs)
        rnd.shuffle(ys)
        assert ks_distance(xs, stats.norm.cdf).statistic == ks_distance(ys, stats.norm.cdf).statistic


class TestTV:
    def test_exact_bin_masses_give_zero(self):
        # samples placed at bin centers with exactly the uniform masses
        edges = np.linspace(-1, 1, 21)
        x = np.repeat(0.5 * (edges[1:] + edges[:-1]), 5)
        tv = tv_histogram(x, stats.uniform(-1, 2).cdf, bins=20, range=(-1, 1))
        assert tv == pytest.approx(0.0, abs=1e-12)

    def test_disjoint_support(self):
        assert tv_histogram(np.full(50, 100.0), stats.norm.cdf) == pytest.approx(1.0, abs=1e-6)

    def test_half_shifted(self):
        # uniform law on [0, 1] vs samples spread evenly over [0, 0.5]
        x = np.linspace(0.0, 0.5, 10_001)[:-1]
        tv = tv_histogram(x, stats.uniform(0, 1).cdf, bins=20, range=(0, 1))
        assert tv == pytest.approx(0.5, abs=1e-9)

    def test_converges(self):
        x = np.random.default_rng(2).standard_normal(200_000)
        assert tv_histogram(x, stats.norm.cdf) < 0.01

    def test_few_bins(self):
        with pytest.raises(DomainError):
            tv_histogram([0.0], stats.norm.cdf, bins=5)

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.floats(-6, 6), min_size=1, max_size=80), st.randoms(use_true_random=False))
    def test_order_invariant_and_bounded(self, xs, rnd):
        ys = list(xs)
        rnd.shuffle(ys)
        a = tv_histogram(xs, stats.norm.cdf)
        assert a == pytest.approx(tv_histogram(ys, stats.norm.cdf), abs=1e-15)
        assert 0.0 <= a <= 1.0 + 1e-12


class TestMomentEstimate:
    def test_interval_covers_truth(self):
        x = np.random.default_rng(3).standard_normal(20_000)
        est = moment_estimate(x, "power:2", seed=1)
        assert est["low"] <= 1.0 <= est["high"]
        assert est["low"] < est["mean"] < est["high"]

    def test_reproducible(self):
        x = np.random.default_rng(4).standard_normal(500)
        assert moment_estimate(x, "power:1", seed=5) == moment_estimate(x, "power:1", seed=5)


class TestRareEvent:
    def test_small_run(self):
        est = rare_event_rate("power:2", "power:1", 0.6, 10, n_levels=3, chains=400, replications=3, seed=0)
        probs = est.stage_probabilities
        assert probs.shape == (3, 3)
        assert np.all((probs > 0) & (probs <= 1))
        assert est.rate > 0 and est.stderr >= 0
        assert len(est.levels) == 3 and est.levels[-1] == pytest.approx(0.6)
        assert all(b < a for a, b in zip(est.levels, est.levels[1:]))

    def test_deterministic(self):
        kw = dict(n_levels=2, chains=200, replications=2, seed=4)
        a = rare_event_rate("power:2", "power:1", 0.6, 8, **kw)
        b = rare_event_rate("power:2", "power:1", 0.6, 8, **kw)
        assert a.rate == b.rate
        np.testing.assert_array_equal(a.stage_probabilities, b.stage_probabilities)

    def test_typical_radius_is_cheap(self):
        # at or above the typical value the event is not rare
        est = rare_event_rate("power:2", "power:1", 2.0, 10, chains=500, replications=2)
        assert est.levels == (2.0,)
        assert est.rate == pytest.approx(0.0, abs=1e-12)

    def test_no_hits(self):
        with pytest.raises(DegenerateError):
            rare_event_rate("power:2", "power:1", 0.01, 50, n_levels=1, chains=20, replications=1)

    def test_bad_config(self):
        with pytest.raises(ConfigError):
            rare_event_rate("power:2", "power:1", 0.5, 10, chains=5)
