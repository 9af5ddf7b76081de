"""Random generation on the line and in Orlicz balls.

* i.i.d. Gibbs draws by inverse-CDF sampling;
* exact uniform draws from l_p balls through the generalized-Gaussian
  radial representation;
* a coordinate-Gibbs Markov chain whose stationary law is uniform on an
  Orlicz ball or on the intersection of two of them.

Reproducibility: every random stream is drawn from
``numpy.random.SeedSequence([seed, block])`` where blocks have a fixed size,
so results do not depend on how many worker threads process the blocks.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError
from .gibbs import GibbsMeasure1D, TiltedMeasure, solve_alpha
from .potentials import OrliczFunction, as_potential

__all__ = [
    "BallConstraint",
    "ChainState",
    "block_rng",
    "sample_gibbs_iid",
    "iter_lp_ball_exact",
    "sample_lp_ball_exact",
    "McmcSchedule",
    "mcmc_orlicz_ball",
    "run_chains",
    "conditional_marginal_samples",
]

LP_BLOCK_ROWS = 4096
MCMC_BLOCK_CHAINS = 2048
RESYNC_EVERY = 64
BUDGET_MARGIN = 1e-10


def block_rng(seed, *keys) -> np.random.Generator:
    """Generator keyed by ``seed`` (an int or a tuple of ints) and further integer keys."""
    base = list(seed) if isinstance(seed, (tuple, list)) else [seed]
    return np.random.default_rng(np.random.SeedSequence([int(k) for k in (*base, *keys)]))


@dataclass(frozen=True)
class BallConstraint:
    """``sum_i V(x_i) <= budget`` (budget is ``R n`` for an n-dimensional ball)."""

    V: OrliczFunction
    budget: float

    def __post_init__(self):
        object.__setattr__(self, "V", as_potential(self.V))
        if not (np.isfinite(self.budget) and self.budget > 0):
            raise DomainError(f"ball budget must be > 0, got {self.budget}")

    def to_dict(self) -> dict:
        return {"V": self.V.spec, "budget": self.budget}


# ------------------------------------------------------------------ i.i.d.


def sample_gibbs_iid(V, alpha: float, count: int, seed: int = 0) -> np.ndarray:
    """``count`` i.i.d. draws from ``mu_{V,alpha}``."""
    if count < 1:
        raise DomainError("count must be >= 1")
    G = GibbsMeasure1D(V, alpha)
    return G.sample(int(count), np.random.default_rng(seed))


def iter_lp_ball_exact(p: float, R: float, n: int, count: int, seed: int = 0, block_rows: int = LP_BLOCK_ROWS):
    """Yield blocks of exact uniform samples from ``{sum |x_i|^p <= R n}``.

    ``X = (R n)^{1/p} U^{1/n} G / ||G||_p`` with ``|G_i|^p ~ Gamma(1/p)``
    and independent random signs.
    """
    if p < 1 or R <= 0 or n < 1 or count < 1:
        raise DomainError("need p >= 1, R > 0, n >= 1, count >= 1")
    radius = (R * n) ** (1.0 / p)
    done = 0
    block = 0
    while done < count:
        m = min(block_rows, count - done)
        rng = block_rng(seed, block)
        g = rng.gamma(1.0 / p, size=(m, n))
        sign = rng.integers(0, 2, size=(m, n)) * 2 - 1
        norm = g.sum(axis=1) ** (1.0 / p)
        u = rng.random(m)
        scale = radius * u ** (1.0 / n) / norm
        yield sign * g ** (1.0 / p) * scale[:, None]
        done += m
        block += 1


def sample_lp_ball_exact(p: float, R: float, n: int, count: int, seed: int = 0) -> np.ndarray:
    """``count x n`` array of uniform samples from the l_p ball of radius ``(R n)^{1/p}``."""
    return np.concatenate(list(iter_lp_ball_exact(p, R, n, count, seed)), axis=0)


# -------------------------------------------------------------------- MCMC


@dataclass
class ChainState:
    """Positions of a block of independent chains plus their cached sums.

    ``x`` has shape ``(n, chains)``; ``potential_sums[j]`` holds
    ``sum_i V_j(x_i)`` for every chain.
    """

    x: np.ndarray
    potential_sums: np.ndarray
    rng: np.random.Generator
    sweep_count: int = 0

    @classmethod
    def create(cls, x, constraints, rng):
        x = np.ascontiguousarray(x, dtype=float)
        sums = np.stack([c.V.value(x).sum(axis=0) for c in constraints])
        return cls(x=x, potential_sums=sums, rng=rng)

    def resync(self, constraints):
        self.potential_sums = np.stack([c.V.value(self.x).sum(axis=0) for c in constraints])


@dataclass(frozen=True)
class McmcSchedule:
    """``sweeps`` counts every sweep including ``burn_in``; a state is kept
    after sweeps ``burn_in + thin, burn_in + 2 thin, ...``."""

    sweeps: int
    burn_in: int
    thin: int = 5

    def __post_init__(self):
        if self.thin < 1 or self.burn_in < 0 or self.sweeps < 1:
            raise ConfigError("need thin >= 1, burn_in >= 0, sweeps >= 1")
        if self.sweeps - self.burn_in < self.thin:
            raise ConfigError(
                f"sweeps={self.sweeps} leaves no kept state after burn_in={self.burn_in} with thin={self.thin}"
            )

    @property
    def kept_per_chain(self) -> int:
        return (self.sweeps - self.burn_in) // self.thin

    @classmethod
    def default(cls, n: int, kept_per_chain: int = 1, thin: int = 5, burn_in: int | None = None):
        burn = 2 * n if burn_in is None else burn_in
        return cls(sweeps=burn + kept_per_chain * thin, burn_in=burn, thin=thin)

    def to_dict(self) -> dict:
        return {"sweeps": self.sweeps, "burn_in": self.burn_in, "thin": self.thin}


def _sweep(state: ChainState, constraints, budgets):
    x, S = state.x, state.potential_sums
    n = x.shape[0]
    order = state.rng.permutation(n)
    u = state.rng.random(x.shape)
    for i in order:
        xi = x[i]
        half = None
        olds = []
        for j, c in enumerate(constraints):
            old = c.V.value(xi)
            olds.append(old)
            slack = np.maximum(budgets[j] - (S[j] - old), 0.0)
            w = c.V.inverse_nonneg(slack)
            half = w if half is None else np.minimum(half, w)
        new = (2.0 * u[i] - 1.0) * half
        x[i] = new
        for j, c in enumerate(constraints):
            S[j] += c.V.value(new) - olds[j]
    state.sweep_count += 1
    if state.sweep_count % RESYNC_EVERY == 0:
        state.resync(constraints)


def _internal_budgets(constraints):
    return np.array([c.budget * (1.0 - BUDGET_MARGIN) for c in constraints])


def run_chains(state: ChainState, constraints, schedule: McmcSchedule, coords=None) -> np.ndarray:
    """Advance ``state`` through ``schedule``; return kept states.

    The result has shape ``(kept_per_chain, chains, len(coords))``.
    """
    budgets = _internal_budgets(constraints)
    idx = np.arange(state.x.shape[0]) if coords is None else np.asarray(coords)
    out = []
    for s in range(1, schedule.sweeps + 1):
        _sweep(state, constraints, budgets)
        if s > schedule.burn_in and (s - schedule.burn_in) % schedule.thin == 0:
            out.append(state.x[idx].T.copy())
    return np.stack(out)


def _shrink_into(x, constraints):
    """Scale each column of ``x`` by the largest ``t <= 1`` keeping it inside every ball."""
    budgets = _internal_budgets(constraints) * (1.0 - 1e-6)
    t = np.ones(x.shape[1])
    for c, b in zip(constraints, budgets):
        tot = c.V.value(x).sum(axis=0)
        bad = tot > b
        if not bad.any():
            continue
        lo = np.zeros(bad.sum())
        hi = np.ones(bad.sum())
        xb = x[:, bad]
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            ok = c.V.value(xb * mid).sum(axis=0) <= b
            lo = np.where(ok, mid, lo)
            hi = np.where(ok, hi, mid)
        t[bad] = np.minimum(t[bad], lo)
    return x * t


def _initial_state(constraints, n, chains, rng, init):
    """i.i.d. start from ``init`` (default: Gibbs law of the first constraint), shrunk into the body."""
    if init is None:
        c0 = constraints[0]
        init = GibbsMeasure1D(c0.V, solve_alpha(c0.V, c0.budget / n))
    if isinstance(init, TiltedMeasure):
        x = init.quantile(rng.random((n, chains)))
    else:
        x = np.asarray(init, dtype=float)
        if x.shape != (chains, n):
            raise ConfigError(f"start states must have shape {(chains, n)}, got {x.shape}")
        x = x.T.copy()
    return _shrink_into(x, constraints)


def mcmc_orlicz_ball(constraints, n: int, schedule: McmcSchedule | None = None, chains: int = 1,
                     seed: int = 0, workers: int = 1, coords=None, init=None) -> np.ndarray:
    """Coordinate-Gibbs samples of the uniform law on the intersection of balls.

    Each update resamples one coordinate uniformly on the interval allowed
    by every constraint given the other coordinates; the uniform law on the
    body is exactly stationary and the chain never leaves the body.

    Parameters
    ----------
    constraints : list of BallConstraint
        One or two balls in dimension ``n``.
    schedule : McmcSchedule
        Defaults to burn-in ``2 n`` sweeps and one kept state (thin 5).
    chains : int
        Independent chains, processed in blocks of fixed size.
    coords : sequence of int, optional
        Coordinates to record (all by default).
    init : TiltedMeasure or array (chains, n), optional
        Starting law (shrunk into the body) or explicit starting states.

    Returns
    -------
    ndarray of shape ``(chains * kept_per_chain, len(coords))``, ordered by
    block, then kept index, then chain.
    """
    constraints = [c if isinstance(c, BallConstraint) else BallConstraint(*c) for c in constraints]
    if not 1 <= len(constraints) <= 2:
        raise ConfigError("between one and two ball constraints are supported")
    if n < 1 or chains < 1 or workers < 1:
        raise ConfigError("n, chains and workers must be >= 1")
    schedule = schedule or McmcSchedule.default(n)
    starts = None if init is None or isinstance(init, TiltedMeasure) else np.asarray(init, dtype=float)
    blocks = [(b, min(MCMC_BLOCK_CHAINS, chains - b * MCMC_BLOCK_CHAINS))
              for b in range(math.ceil(chains / MCMC_BLOCK_CHAINS))]

    def run(block):
        b, m = block
        rng = block_rng(seed, b)
        if starts is not None:
            x0 = _initial_state(constraints, n, m, rng, starts[b * MCMC_BLOCK_CHAINS: b * MCMC_BLOCK_CHAINS + m])
        else:
            x0 = _initial_state(constraints, n, m, rng, init)
        state = ChainState.create(x0, constraints, rng)
        kept = run_chains(state, constraints, schedule, coords)
        return kept.reshape(-1, kept.shape[-1])

    if workers == 1 or len(blocks) == 1:
        parts = [run(b) for b in blocks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, blocks))
    return np.concatenate(parts, axis=0)


def conditional_marginal_samples(V1, V2, R: float, n: int, k: int = 1, kept: int = 10_000, eps: float = 0.0,
                                 schedule: McmcSchedule | None = None, seed: int = 0, workers: int = 1,
                                 init=None) -> np.ndarray:
    """First ``k`` coordinates of a V1-ball (radius 1) sample conditioned on the V2-ball of radius ``R + eps``.

    The conditioning is done by running the chain directly on the
    intersection body. Returns an array of shape ``(kept, k)``.
    """
    if eps < 0 or R <= 0 or not 1 <= k <= n or kept < 1:
        raise ConfigError("need eps >= 0, R > 0, 1 <= k <= n, kept >= 1")
    schedule = schedule or McmcSchedule.default(n)
    chains = math.ceil(kept / schedule.kept_per_chain)
    cons = [BallConstraint(as_potential(V1), float(n)), BallConstraint(as_potential(V2), (R + eps) * n)]
    out = mcmc_orlicz_ball(cons, n, schedule, chains=chains, seed=seed, workers=workers,
                           coords=range(k), init=init)
    return out[:kept]
