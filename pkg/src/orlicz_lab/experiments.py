"""Scenario runners that combine calculus, maxent, samplers and statistics.

Each runner takes an :class:`ExperimentConfig` and returns an
:class:`ExperimentReport` whose cases carry their own statistic, target,
tolerance and pass flag. Reports serialize to JSON (sorted keys,
round-trip floats) and to a flat CSV of the cases.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .gibbs import GibbsMeasure1D, GridDensity, exact_lp_log_volume, log_partition, log_volume_limit, rate_function, solve_alpha
from .maxent import Regime, maxent_two_constraints, thinshell_point, thresholds
from .potentials import Power, as_potential, check_cross_integrability
from .empirics import KS_CRITICAL_1PCT, ks_distance, ks_two_sample, rare_event_rate
from .samplers import (
    BallConstraint,
    McmcSchedule,
    conditional_marginal_samples,
    iter_lp_ball_exact,
    mcmc_orlicz_ball,
    sample_lp_ball_exact,
)

__all__ = [
    "EXPERIMENTS",
    "ExperimentConfig",
    "ExperimentReport",
    "run_experiment",
    "run_marginal_experiment",
    "run_conditional_experiment",
    "run_volume_experiment",
    "run_thinshell_experiment",
    "run_ldp_rate_experiment",
    "jsonable",
]

EXPERIMENTS = ("marginal", "conditional", "volume", "thinshell", "ldp_rate")


def jsonable(obj):
    """Recursively convert to JSON-safe values; infinities become ``"inf"``/``"-inf"``, NaN becomes null."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


@dataclass
class ExperimentConfig:
    """Inputs of one experiment. Fields unused by an experiment are ignored."""

    experiment: str
    V: str = "power:2"
    V1: str = "power:2"
    V2: str = "power:1"
    R: float = 1.0
    eps: list = field(default_factory=lambda: [0.0])
    n: list = field(default_factory=lambda: [100])
    k: int = 1
    samples: int = 10_000
    burn_in: int | None = None
    thin: int = 5
    kept_per_chain: int = 1
    seed: int = 0
    workers: int = 1
    bins: int = 50
    tv_range: list = field(default_factory=lambda: [-5.0, 5.0])
    ks_tolerance: float | None = None
    p: float = 2.0
    p_values: list = field(default_factory=lambda: [1.0, 2.0, 4.0])
    R_values: list = field(default_factory=lambda: [0.5, 1.0, 2.0])
    gap_tolerance: float = 2e-3
    x_grid: list | None = None
    mean_tolerance: float = 0.01
    n_levels: list | int | None = None
    chains: int = 2000
    replications: int = 4
    rate_tolerance: float = 0.2
    init: str = "maxent"
    output: str | None = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {self.experiment!r}")
        self.n = [int(v) for v in (self.n if isinstance(self.n, (list, tuple)) else [self.n])]
        self.eps = [float(v) for v in (self.eps if isinstance(self.eps, (list, tuple)) else [self.eps])]
        if not self.n or any(v < 1 for v in self.n):
            raise ConfigError("n values must be positive integers")
        if any(b <= a for a, b in zip(self.n, self.n[1:])):
            raise ConfigError("n list must be strictly increasing")
        if any(e < 0 for e in self.eps):
            raise ConfigError("eps values must be >= 0")
        positive = {"R": self.R, "k": self.k, "samples": self.samples, "thin": self.thin,
                    "kept_per_chain": self.kept_per_chain, "workers": self.workers, "bins": self.bins,
                    "p": self.p, "chains": self.chains, "replications": self.replications}
        for name, value in positive.items():
            if not value > 0:
                raise ConfigError(f"{name} must be positive, got {value}")
        if self.burn_in is not None and self.burn_in < 0:
            raise ConfigError("burn_in must be >= 0")
        if self.init not in ("maxent", "gibbs"):
            raise ConfigError("init must be 'maxent' or 'gibbs'")
        if len(self.tv_range) != 2 or not self.tv_range[0] < self.tv_range[1]:
            raise ConfigError("tv_range must be [lo, hi] with lo < hi")
        for spec in (self.V, self.V1, self.V2):
            as_potential(spec)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        if "experiment" not in data:
            raise ConfigError("config needs an 'experiment' key")
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def schedule(self, n: int) -> McmcSchedule:
        return McmcSchedule.default(n, kept_per_chain=self.kept_per_chain, thin=self.thin, burn_in=self.burn_in)


@dataclass
class ExperimentReport:
    config: dict
    cases: list
    fits: dict
    seeds: dict
    wall_clock: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c["pass"] for c in self.cases)

    def to_dict(self) -> dict:
        return jsonable({"config": self.config, "cases": self.cases, "fits": self.fits,
                         "pass": self.passed, "seeds": self.seeds, "wall_clock": self.wall_clock})

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def write(self, path):
        """Write the JSON report and a companion ``.csv`` of the cases."""
        with open(path, "w") as fh:
            fh.write(self.to_json() + "\n")
        stem = str(path)[:-5] if str(path).endswith(".json") else str(path)
        self.write_csv(stem + ".csv")

    def write_csv(self, path):
        cols = ["check", "n", "eps", "statistic", "target", "tolerance", "pass"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(cols)
            for c in jsonable(self.cases):
                w.writerow(["" if c.get(k) is None else c.get(k) for k in cols])


def _case(check, statistic, target, tolerance, passed, n=None, eps=None, **extra):
    out = {"check": check, "n": n, "eps": eps, "statistic": float(statistic),
           "target": None if target is None else float(target),
           "tolerance": None if tolerance is None else float(tolerance), "pass": bool(passed)}
    out.update(extra)
    return out


def _loglog_fit(ns, values):
    x, y = np.log(np.asarray(ns, dtype=float)), np.log(np.asarray(values, dtype=float))
    slope, intercept = np.polyfit(x, y, 1)
    # C in C/n: least squares with the slope fixed at -1
    c_hat = float(np.exp(np.mean(y + x)))
    return float(slope), float(intercept), c_hat


def _sign_changes(values):
    d = np.sign(np.diff(values))
    d = d[d != 0]
    return int(np.sum(d[1:] != d[:-1]))


# ---------------------------------------------------------------- marginal


def _pooled_histogram(blocks, edges):
    counts = np.zeros(edges.size - 1)
    total = 0
    for X in blocks:
        c, _ = np.histogram(X.ravel(), bins=edges)
        counts += c
        total += X.size
    return counts, total


def _tv_from_counts(counts, total, cdf, edges):
    emp = counts / total
    F = np.asarray(cdf(edges), dtype=float)
    theo = np.diff(F)
    out = abs((1.0 - emp.sum()) - (F[0] + 1.0 - F[-1]))
    return float(0.5 * (np.abs(emp - theo).sum() + out))


def run_marginal_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Coordinate marginal of the uniform V-ball against ``mu_{V,alpha(R)}``.

    Power potentials use the exact sampler; others use the chain. The
    histogram TV pools all (exchangeable) coordinates of every sample, while
    KS uses the first coordinate only.
    """
    V = as_potential(cfg.V)
    alpha = solve_alpha(V, cfg.R)
    target = GibbsMeasure1D(V, alpha)
    edges = np.linspace(cfg.tv_range[0], cfg.tv_range[1], cfg.bins + 1)
    tol = cfg.ks_tolerance if cfg.ks_tolerance is not None else KS_CRITICAL_1PCT / math.sqrt(cfg.samples) + 0.01
    cases, tvs, seeds = [], [], {}
    for idx, n in enumerate(cfg.n):
        seed = cfg.seed * 1000 + idx
        seeds[str(n)] = seed
        if isinstance(V, Power):
            first = []

            def blocks():
                for X in iter_lp_ball_exact(V.p, cfg.R, n, cfg.samples, seed=seed):
                    first.append(X[:, 0].copy())
                    yield X

            counts, total = _pooled_histogram(blocks(), edges)
            x1 = np.concatenate(first)
            sampler = "exact"
        else:
            X = mcmc_orlicz_ball([BallConstraint(V, cfg.R * n)], n, cfg.schedule(n),
                                 chains=math.ceil(cfg.samples / cfg.kept_per_chain), seed=seed,
                                 workers=cfg.workers)[: cfg.samples]
            counts, total = _pooled_histogram([X], edges)
            x1 = X[:, 0]
            sampler = "mcmc"
        tv = _tv_from_counts(counts, total, target.cdf, edges)
        tvs.append(tv)
        ks = ks_distance(x1, target.cdf)
        cases.append(_case("ks_marginal", ks.statistic, 0.0, tol, ks.statistic <= tol, n=n, sampler=sampler))
        cases.append(_case("tv_marginal", tv, 0.0, None, True, n=n, sampler=sampler))
    fits = {"alpha": alpha}
    if len(cfg.n) >= 2:
        slope, intercept, c_hat = _loglog_fit(cfg.n, tvs)
        fits.update({"tv_slope": slope, "tv_intercept": intercept, "C_hat": c_hat})
        decreasing = all(b < a for a, b in zip(tvs, tvs[1:]))
        cases.append(_case("tv_strictly_decreasing", float(decreasing), 1.0, 0.0, decreasing))
        cases.append(_case("tv_loglog_slope", slope, -1.0, 0.5, -1.5 <= slope <= -0.5))
    return ExperimentReport(cfg.to_dict(), cases, fits, seeds)


# ------------------------------------------------------------- conditional


def run_conditional_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """First-coordinate law of the V1-ball conditioned on the V2-ball, against the maxent law.

    In the subcritical regime the marginal is also compared (two-sample KS)
    with the first coordinate of an independent uniform V2-ball sample of
    radius ``R + eps``.
    """
    V1, V2 = as_potential(cfg.V1), as_potential(cfg.V2)
    check_cross_integrability(V1, V2)
    th = thresholds(V1, V2)
    tol = cfg.ks_tolerance if cfg.ks_tolerance is not None else 0.05
    cases, seeds = [], {}
    fits = {"thresholds": th.to_dict()}
    for e_idx, eps in enumerate(cfg.eps):
        sol = maxent_two_constraints(V1, 1.0, "le", V2, cfg.R + eps, "le")
        target = sol.measure()
        fits[f"maxent_eps={eps!r}"] = sol.to_dict()
        for n_idx, n in enumerate(cfg.n):
            seed = cfg.seed * 1000 + 10 * n_idx + e_idx
            seeds[f"n={n},eps={eps!r}"] = seed
            init = target if cfg.init == "maxent" else None
            X = conditional_marginal_samples(V1, V2, cfg.R, n, k=cfg.k, kept=cfg.samples, eps=eps,
                                             schedule=cfg.schedule(n), seed=seed, workers=cfg.workers, init=init)
            ks = ks_distance(X[:, 0], target.cdf)
            cases.append(_case("ks_vs_maxent", ks.statistic, 0.0, tol, ks.statistic <= tol, n=n, eps=eps,
                               regime=sol.regime.value))
            if sol.regime is Regime.SUBCRITICAL:
                radius = cfg.R + eps
                if isinstance(V2, Power):
                    Y = sample_lp_ball_exact(V2.p, radius, n, cfg.samples, seed=seed + 500_000)[:, 0]
                else:
                    Y = mcmc_orlicz_ball([BallConstraint(V2, radius * n)], n, cfg.schedule(n),
                                         chains=math.ceil(cfg.samples / cfg.kept_per_chain), seed=seed + 500_000,
                                         workers=cfg.workers, coords=[0])[: cfg.samples, 0]
                ks2 = ks_two_sample(X[:, 0], Y)
                cases.append(_case("ks_two_sample_vs_v2_ball", ks2.statistic, 0.0, ks2.critical_value_1pct,
                                   ks2.passed, n=n, eps=eps, regime=sol.regime.value))
    return ExperimentReport(cfg.to_dict(), cases, fits, seeds)


# ------------------------------------------------------------------ volume


def run_volume_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Exact per-dimension l_p log-volume against its limit over the n list."""
    cases, fits = [], {}
    for p in cfg.p_values:
        for R in cfg.R_values:
            limit = log_volume_limit(Power(p), R)
            gaps = [abs(exact_lp_log_volume(p, R, n) - limit) for n in cfg.n]
            fits[f"limit_p={p!r},R={R!r}"] = limit
            for n, g in zip(cfg.n, gaps):
                cases.append(_case("log_volume_gap", g, 0.0, None, True, n=n, p=p, R=R))
            mono = all(b < a for a, b in zip(gaps, gaps[1:]))
            cases.append(_case("gap_monotone_decay", float(mono), 1.0, 0.0, mono, p=p, R=R))
            cases.append(_case("final_gap", gaps[-1], 0.0, cfg.gap_tolerance, gaps[-1] <= cfg.gap_tolerance,
                               n=cfg.n[-1], p=p, R=R))
    return ExperimentReport(cfg.to_dict(), cases, fits, {})


# --------------------------------------------------------------- thin shell


def run_thinshell_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Thin-shell rate on an x-grid plus Monte Carlo concentration of ``n^{-1/p} ||X||_p``."""
    V = as_potential(cfg.V)
    p, R = cfg.p, cfg.R
    alpha = solve_alpha(V, R)
    limit = log_partition(V, alpha) - alpha * R
    G = GibbsMeasure1D(V, alpha)
    x_star = G.moment(Power(p)) ** (1.0 / p)
    cases, seeds = [], {}
    grid = cfg.x_grid if cfg.x_grid is not None else [-0.5, 0.0] + list(np.round(np.linspace(0.1, 1.3, 13) * x_star, 12))
    points = [thinshell_point(V, R, p, x, volume_limit=limit) for x in grid]
    at_star = thinshell_point(V, R, p, x_star, volume_limit=limit)
    cases.append(_case("rate_at_typical_point", at_star.rate, 0.0, 1e-6, at_star.rate <= 1e-6))
    finite = [pt.rate for pt in points if math.isfinite(pt.rate)]
    min_rate = min(finite) if finite else 0.0
    cases.append(_case("rate_nonnegative", min_rate, 0.0, 0.0, min_rate >= 0.0))
    neg = [pt for pt in points if pt.x <= 0]
    if neg:
        ok = all(math.isinf(pt.rate) for pt in neg)
        cases.append(_case("rate_infinite_for_nonpositive_x", float(ok), 1.0, 0.0, ok))
    means, variances = [], []
    for idx, n in enumerate(cfg.n):
        seed = cfg.seed * 1000 + idx
        seeds[str(n)] = seed
        X = mcmc_orlicz_ball([BallConstraint(V, R * n)], n, cfg.schedule(n),
                             chains=math.ceil(cfg.samples / cfg.kept_per_chain), seed=seed,
                             workers=cfg.workers)[: cfg.samples]
        t = (np.abs(X) ** p).sum(axis=1) ** (1.0 / p) / n ** (1.0 / p)
        means.append(float(t.mean()))
        variances.append(float(t.var(ddof=1)))
        rel = abs(means[-1] - x_star) / x_star
        last = idx == len(cfg.n) - 1
        cases.append(_case("normalized_norm_mean", means[-1], x_star, cfg.mean_tolerance * x_star if last else None,
                           rel <= cfg.mean_tolerance if last else True, n=n, variance=variances[-1]))
    if len(cfg.n) >= 2:
        shrinking = all(b < a for a, b in zip(variances, variances[1:]))
        cases.append(_case("variance_shrinks", float(shrinking), 1.0, 0.0, shrinking))
    fits = {"alpha": alpha, "x_star": x_star, "volume_limit": limit,
            "rate_grid": [pt.to_dict() for pt in points]}
    return ExperimentReport(cfg.to_dict(), cases, fits, seeds)


# ---------------------------------------------------------------- LDP rate


def ldp_rate_target(V1, V2, R: float) -> float:
    """``inf`` of the V1-ball rate function over ``{m_{V2} <= R}``, evaluated at the maxent law."""
    V1, V2 = as_potential(V1), as_potential(V2)
    sol = maxent_two_constraints(V1, 1.0, "le", V2, R, "le")
    T = sol.measure().cutoff
    nodes = np.linspace(-T, T, 40_001)
    nodes = np.union1d(nodes, [0.0])
    mu = GridDensity.from_function(sol.density, nodes)
    return rate_function(V1, 1.0, mu)


def run_ldp_rate_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Multilevel-splitting rate of ``{m_{V2}(empirical) <= R}`` against its limit (informational)."""
    V1, V2 = as_potential(cfg.V1), as_potential(cfg.V2)
    target = ldp_rate_target(V1, V2, cfg.R)
    if cfg.n_levels is None:
        levels = [max(4, round(n / 4)) for n in cfg.n]
    elif isinstance(cfg.n_levels, int):
        levels = [cfg.n_levels] * len(cfg.n)
    else:
        levels = [int(v) for v in cfg.n_levels]
        if len(levels) != len(cfg.n):
            raise ConfigError("n_levels list must match the n list")
    cases, seeds, estimates = [], {}, {}
    rates = []
    for idx, (n, L) in enumerate(zip(cfg.n, levels)):
        seed = cfg.seed * 1000 + idx
        seeds[str(n)] = seed
        est = rare_event_rate(V1, V2, cfg.R, n, n_levels=L, chains=cfg.chains, replications=cfg.replications,
                              seed=seed, workers=cfg.workers)
        rates.append(est.rate)
        estimates[str(n)] = est.to_dict()
        last = idx == len(cfg.n) - 1
        if target > 0:
            rel = abs(est.rate - target) / target
            ok = rel <= cfg.rate_tolerance
            tolerance = cfg.rate_tolerance * target
        else:
            ok = est.rate <= 0.02
            tolerance = 0.02
        cases.append(_case("rate_estimate", est.rate, target, tolerance if last else None, ok if last else True,
                           n=n, stderr=est.stderr, n_levels=L))
    if len(rates) >= 2:
        changes = _sign_changes(rates)
        cases.append(_case("trend_sign_changes", changes, 0.0, 1.0, changes <= 1))
    fits = {"target": target, "estimates": estimates, "informational": True}
    return ExperimentReport(cfg.to_dict(), cases, fits, seeds)


_RUNNERS = {
    "marginal": run_marginal_experiment,
    "conditional": run_conditional_experiment,
    "volume": run_volume_experiment,
    "thinshell": run_thinshell_experiment,
    "ldp_rate": run_ldp_rate_experiment,
}


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    start = time.perf_counter()
    report = _RUNNERS[cfg.experiment](cfg)
    report.wall_clock = time.perf_counter() - start
    return report
