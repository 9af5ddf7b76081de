import math

import numpy as np
import pytest
from scipy import stats

from orlicz_lab.errors import ConfigError, DomainError
from orlicz_lab.gibbs import moment, variance_of_potential
from orlicz_lab.potentials import parse_spec
from orlicz_lab.samplers import (
    MCMC_BLOCK_CHAINS,
    BallConstraint,
    McmcSchedule,
    block_rng,
    conditional_marginal_samples,
    iter_lp_ball_exact,
    mcmc_orlicz_ball,
    sample_gibbs_iid,
    sample_lp_ball_exact,
)


class TestGibbsIid:
    @pytest.mark.parametrize("V,alpha", [("power:2", -0.5), ("power:1", -1.0), ("huber:1.0", -0.8),
                                         ("mix:1.0*power:4+0.5*power:1", -2.0)])
    def test_mean_of_potential(self, V, alpha):
        x = sample_gibbs_iid(V, alpha, 200_000, seed=3)
        target = moment(V, V, alpha)
        se = math.sqrt(variance_of_potential(V, alpha) / x.size)
        assert abs(parse_spec(V).value(x).mean() - target) < 5 * se

    def test_ks_normal(self):
        x = sample_gibbs_iid("power:2", -0.5, 20_000, seed=7)
        assert stats.kstest(x, "norm").pvalue > 0.01

    def test_reproducible(self):
        np.testing.assert_array_equal(sample_gibbs_iid("power:1", -1, 100, seed=1),
                                      sample_gibbs_iid("power:1", -1, 100, seed=1))

    def test_count(self):
        with pytest.raises(DomainError):
            sample_gibbs_iid("power:1", -1, 0)


class TestExactLp:
    @pytest.mark.parametrize("p,n", [(1, 2), (2, 3), (4, 5), (1.5, 10)])
    def test_inside(self, p, n):
        x = sample_lp_ball_exact(p, 0.7, n, 5000, seed=0)
        assert x.shape == (5000, n)
        assert np.all((np.abs(x) ** p).sum(axis=1) <= 0.7 * n * (1 + 1e-12))

    @pytest.mark.parametrize("p,n", [(1, 2), (2, 3), (3, 4)])
    def test_radial_fraction(self, p, n):
        # volume scales as r^n, so P(||x||_p^p <= t R n) = t^(n/p)
        x = sample_lp_ball_exact(p, 1.0, n, 100_000, seed=1)
        s = (np.abs(x) ** p).sum(axis=1) / n
        for t in (0.25, 0.5, 0.8):
            frac = np.mean(s <= t)
            exact = t ** (n / p)
            assert abs(frac - exact) < 5 * math.sqrt(exact * (1 - exact) / x.shape[0])

    def test_one_dimension_uniform(self):
        x = sample_lp_ball_exact(2, 4.0, 1, 50_000, seed=2).ravel()
        assert stats.kstest(x, stats.uniform(-2, 4).cdf).pvalue > 0.01

    def test_symmetry_of_signs(self):
        x = sample_lp_ball_exact(1, 1.0, 4, 40_000, seed=5)
        assert abs(np.mean(x > 0) - 0.5) < 0.01

    def test_block_size_invariant(self):
        a = np.concatenate(list(iter_lp_ball_exact(2, 1.0, 3, 1000, seed=9, block_rows=100)))
        b = np.concatenate(list(iter_lp_ball_exact(2, 1.0, 3, 1000, seed=9, block_rows=100)))
        np.testing.assert_array_equal(a, b)
        assert a.shape == (1000, 3)

    def test_domain(self):
        with pytest.raises(DomainError):
            sample_lp_ball_exact(0.5, 1, 3, 10)


class TestSchedule:
    def test_kept(self):
        s = McmcSchedule(sweeps=110, burn_in=10, thin=5)
        assert s.kept_per_chain == 20
        d = McmcSchedule.default(50, kept_per_chain=3)
        assert (d.burn_in, d.kept_per_chain) == (100, 3)

    @pytest.mark.parametrize("kw", [dict(sweeps=10, burn_in=10, thin=1), dict(sweeps=10, burn_in=0, thin=0),
                                    dict(sweeps=10, burn_in=-1, thin=1), dict(sweeps=12, burn_in=10, thin=5)])
    def test_bad(self, kw):
        with pytest.raises(ConfigError):
            McmcSchedule(**kw)

    def test_block_rng_tuple_seed(self):
        a = block_rng((3, 1), 2).random(4)
        b = block_rng([3, 1], 2).random(4)
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, block_rng((3, 2), 2).random(4))


class TestMcmc:
    def test_one_dimension_uniform(self):
        # n = 1: one exact uniform redraw per sweep
        x = mcmc_orlicz_ball([BallConstraint("power:2", 4.0)], 1, McmcSchedule(sweeps=1, burn_in=0, thin=1),
                             chains=20_000, seed=4).ravel()
        assert stats.kstest(x, stats.uniform(-2, 4).cdf).pvalue > 0.01

    def test_containment_two_constraints(self):
        n = 30
        cons = [BallConstraint("power:2", float(n)), BallConstraint("power:1", 0.6 * n)]
        x = mcmc_orlicz_ball(cons, n, McmcSchedule(sweeps=100, burn_in=0, thin=10), chains=300, seed=1)
        assert x.shape == (3000, n)
        assert np.all((x**2).sum(axis=1) <= n)
        assert np.all(np.abs(x).sum(axis=1) <= 0.6 * n)

    def test_deterministic(self):
        cons = [BallConstraint("power:2", 20.0)]
        a = mcmc_orlicz_ball(cons, 20, chains=50, seed=11)
        b = mcmc_orlicz_ball(cons, 20, chains=50, seed=11)
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, mcmc_orlicz_ball(cons, 20, chains=50, seed=12))

    def test_workers_do_not_change_output(self):
        cons = [BallConstraint("power:2", 5.0)]
        sched = McmcSchedule(sweeps=10, burn_in=5, thin=5)
        chains = MCMC_BLOCK_CHAINS + 300
        a = mcmc_orlicz_ball(cons, 5, sched, chains=chains, seed=2, workers=1)
        b = mcmc_orlicz_ball(cons, 5, sched, chains=chains, seed=2, workers=2)
        np.testing.assert_array_equal(a, b)

    def test_slack_constraint_changes_nothing(self):
        n = 10
        sched = McmcSchedule(sweeps=40, burn_in=20, thin=5)
        one = mcmc_orlicz_ball([BallConstraint("power:2", float(n))], n, sched, chains=100, seed=6)
        two = mcmc_orlicz_ball([BallConstraint("power:2", float(n)), BallConstraint("power:1", 10.0 * n)],
                               n, sched, chains=100, seed=6)
        np.testing.assert_allclose(one, two, rtol=0, atol=1e-12)

    def test_exchangeable(self):
        x = mcmc_orlicz_ball([BallConstraint("power:1", 2.0)], 2, McmcSchedule(sweeps=30, burn_in=10, thin=20),
                             chains=20_000, seed=8)
        assert stats.ks_2samp(x[:, 0], x[:, 1]).pvalue > 0.01

    def test_matches_exact_sampler(self):
        n = 20
        x = mcmc_orlicz_ball([BallConstraint("power:2", float(n))], n, chains=10_000, seed=3, coords=[0])
        y = sample_lp_ball_exact(2, 1.0, n, 10_000, seed=3)[:, 0]
        assert stats.ks_2samp(x.ravel(), y).pvalue > 0.01

    def test_explicit_start_shape(self):
        with pytest.raises(ConfigError):
            mcmc_orlicz_ball([BallConstraint("power:2", 3.0)], 3, chains=4, init=np.zeros((3, 3)))

    def test_too_many_constraints(self):
        c = BallConstraint("power:2", 3.0)
        with pytest.raises(ConfigError):
            mcmc_orlicz_ball([c, c, c], 3)


class TestConditional:
    def test_shape_and_containment(self):
        n = 20
        x = conditional_marginal_samples("power:2", "power:1", 0.5, n, k=3, kept=500, seed=0)
        assert x.shape == (500, 3)
        assert np.all(np.abs(x).sum(axis=1) <= 0.5 * n)

    def test_bad_config(self):
        with pytest.raises(ConfigError):
            conditional_marginal_samples("power:2", "power:1", 0.5, 10, eps=-0.1)
        with pytest.raises(ConfigError):
            conditional_marginal_samples("power:2", "power:1", 0.5, 10, k=11)
