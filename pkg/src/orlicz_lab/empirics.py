"""Goodness-of-fit statistics and a rare-event rate estimator.

KS distances come from :mod:`scipy.stats`; pass/fail uses fixed 1%
asymptotic Kolmogorov critical values. The rate estimator factors a tiny
ball-intersection probability into moderate conditional probabilities
across nested V2-levels (multilevel splitting), each estimated with the
coordinate-Gibbs chain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import ConfigError, DegenerateError, DomainError
from .maxent import typical_moment
from .potentials import Power, as_potential
from .samplers import (
    BallConstraint,
    ChainState,
    McmcSchedule,
    block_rng,
    iter_lp_ball_exact,
    mcmc_orlicz_ball,
    run_chains,
)

__all__ = [
    "KS_CRITICAL_1PCT",
    "ComparisonStat",
    "ks_distance",
    "ks_two_sample",
    "tv_histogram",
    "moment_estimate",
    "RareEventEstimate",
    "rare_event_rate",
]

KS_CRITICAL_1PCT = 1.63


@dataclass(frozen=True)
class ComparisonStat:
    statistic: float
    sample_sizes: tuple[int, ...]
    critical_value_1pct: float

    @property
    def passed(self) -> bool:
        return self.statistic <= self.critical_value_1pct

    def to_dict(self) -> dict:
        return {"statistic": self.statistic, "sample_sizes": list(self.sample_sizes),
                "critical_value_1pct": self.critical_value_1pct, "pass": self.passed}


def ks_distance(samples, cdf) -> ComparisonStat:
    """Sup-distance between the empirical CDF of ``samples`` and ``cdf``."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise DomainError("need at least one sample")
    d = stats.kstest(x, cdf).statistic
    return ComparisonStat(float(d), (x.size,), KS_CRITICAL_1PCT / math.sqrt(x.size))


def ks_two_sample(a, b) -> ComparisonStat:
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise DomainError("need at least one sample in each set")
    d = stats.ks_2samp(a, b).statistic
    crit = KS_CRITICAL_1PCT * math.sqrt((a.size + b.size) / (a.size * b.size))
    return ComparisonStat(float(d), (a.size, b.size), crit)


def tv_histogram(samples, cdf, bins: int = 50, range: tuple[float, float] = (-5.0, 5.0)) -> float:
    """Histogram estimate of the total-variation distance to a law on the line.

    ``cdf`` gives the law's bin masses. Mass outside ``range`` is compared as
    one extra bin, so disjoint supports give 1.
    """
    if bins < 10:
        raise DomainError("use at least 10 bins")
    x = np.asarray(samples, dtype=float).ravel()
    edges = np.linspace(range[0], range[1], bins + 1)
    counts, _ = np.histogram(x, bins=edges)
    emp = counts / x.size
    F = np.asarray(cdf(edges), dtype=float)
    theo = np.diff(F)
    emp_out = 1.0 - emp.sum()
    theo_out = F[0] + (1.0 - F[-1])
    return float(0.5 * (np.abs(emp - theo).sum() + abs(emp_out - theo_out)))


def moment_estimate(samples, W, confidence: float = 0.95, n_resamples: int = 999, seed: int = 0) -> dict:
    """Sample mean of ``W(X)`` with a percentile bootstrap interval."""
    W = as_potential(W)
    y = W.value(np.asarray(samples, dtype=float).ravel())
    res = stats.bootstrap((y,), np.mean, confidence_level=confidence, n_resamples=n_resamples,
                          method="percentile", random_state=np.random.default_rng(seed))
    ci = res.confidence_interval
    return {"mean": float(y.mean()), "low": float(ci.low), "high": float(ci.high)}


# -------------------------------------------------------- multilevel splitting


@dataclass(frozen=True)
class RareEventEstimate:
    """``rate`` estimates ``-(1/n) log P``; ``stage_probabilities`` are per
    replication (rows) and level (columns)."""

    rate: float
    stderr: float
    levels: tuple[float, ...]
    stage_probabilities: np.ndarray
    replicate_rates: tuple[float, ...]

    def to_dict(self) -> dict:
        return {"rate": self.rate, "stderr": self.stderr, "levels": list(self.levels),
                "stage_probabilities": self.stage_probabilities.tolist(),
                "replicate_rates": list(self.replicate_rates)}


def _uniform_v1_ball(V1, n, chains, seed, workers):
    if isinstance(V1, Power):
        rows = list(iter_lp_ball_exact(V1.p, 1.0, n, chains, seed=seed))
        return np.concatenate(rows, axis=0)
    return mcmc_orlicz_ball([BallConstraint(V1, float(n))], n, McmcSchedule.default(n),
                            chains=chains, seed=seed, workers=workers)


def _one_replication(V1, V2, n, levels, chains, schedule, seed, workers):
    """Stage probabilities for one independent splitting run."""
    x = _uniform_v1_ball(V1, n, chains, seed=seed, workers=workers)
    probs = []
    for s, level in enumerate(levels):
        if s > 0:
            # restart the chains from resampled hits, inside the previous level's body
            rng = block_rng(seed, 1_000_000 + s)
            start = x[rng.integers(0, x.shape[0], size=chains)]
            cons = [BallConstraint(V1, float(n)), BallConstraint(V2, levels[s - 1] * n)]
            state = ChainState.create(start.T.copy(), cons, rng)
            kept = run_chains(state, cons, schedule)
            x = kept.reshape(-1, n)
        hit = V2.value(x).sum(axis=1) <= level * n
        p = hit.mean()
        if p == 0:
            raise DegenerateError(f"no hits at level {s + 1} (V2-radius {level:.6g}); raise n_levels or chains")
        probs.append(p)
        x = x[hit]
    return np.array(probs)


def rare_event_rate(V1, V2, R: float, n: int, n_levels: int = 8, chains: int = 2000,
                    replications: int = 4, seed: int = 0, schedule: McmcSchedule | None = None,
                    workers: int = 1, typical: float | None = None) -> RareEventEstimate:
    """Estimate ``-(1/n) log P[sum V2(X_i) <= R n]`` for X uniform on the V1-ball of radius 1.

    Levels interpolate geometrically from the typical value
    ``m_{V2}(mu_{V1,alpha(1)})`` down to ``R``; if ``R`` is not below the
    typical value a single direct stage is used. The standard error comes
    from independent replications.
    """
    V1, V2 = as_potential(V1), as_potential(V2)
    if not (R > 0 and n >= 1 and n_levels >= 1 and chains >= 10 and replications >= 1):
        raise ConfigError("need R > 0, n >= 1, n_levels >= 1, chains >= 10, replications >= 1")
    r0 = typical_moment(V1, V2) if typical is None else typical
    if R >= r0:
        levels = (float(R),)
    else:
        levels = tuple(float(r0 * (R / r0) ** (s / n_levels)) for s in range(1, n_levels + 1))
    schedule = schedule or McmcSchedule(sweeps=2 * n, burn_in=2 * n - 1, thin=1)
    probs = np.stack([_one_replication(V1, V2, n, levels, chains, schedule, seed=(seed, r), workers=workers)
                      for r in range(replications)])
    rates = -np.log(probs).sum(axis=1) / n
    rate = float(rates.mean())
    stderr = float(rates.std(ddof=1) / math.sqrt(replications)) if replications > 1 else math.nan
    return RareEventEstimate(rate=rate, stderr=stderr, levels=levels, stage_probabilities=probs,
                             replicate_rates=tuple(float(r) for r in rates))
