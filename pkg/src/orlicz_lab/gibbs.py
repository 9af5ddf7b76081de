"""Gibbs measures with Orlicz potentials and the quantities built on them.

For an Orlicz function ``V`` and ``alpha < 0`` the Gibbs measure has
density ``exp(alpha V(x) - phi_V(alpha))`` with log-partition
``phi_V(alpha) = log int exp(alpha V)``. Its derivative in ``alpha`` is the
mean potential and its second derivative the variance of ``V``; the
critical temperature ``alpha(R)`` matches the mean potential to ``R``.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import gammaln

from .errors import AlphaDomainError, BracketError, DomainError
from .potentials import OrliczFunction, as_potential
from .quadrature import DEFAULT_QUAD, QuadratureConfig, tilted_integral

__all__ = [
    "log_partition",
    "moment",
    "variance_of_potential",
    "solve_alpha",
    "TiltedMeasure",
    "GibbsMeasure1D",
    "GridDensity",
    "rate_function",
    "log_volume_limit",
    "exact_lp_log_volume",
]


def _check_alpha(alpha):
    if not (np.isfinite(alpha) and alpha < 0):
        raise AlphaDomainError(f"alpha must be < 0 (the integral diverges otherwise), got {alpha}")


def log_partition(V, alpha: float, quad: QuadratureConfig = DEFAULT_QUAD) -> float:
    """``phi_V(alpha) = log int_R exp(alpha V(x)) dx``."""
    V = as_potential(V)
    _check_alpha(alpha)
    return tilted_integral([(-alpha, V)], quad=quad).log_partition


def moment(W, V, alpha: float, quad: QuadratureConfig = DEFAULT_QUAD) -> float:
    """``m_W(mu_{V,alpha}) = int W dmu_{V,alpha}``.

    With ``W = V`` this is the derivative of the log-partition in ``alpha``.
    Raises :class:`IntegrabilityError` when ``W exp(alpha V)`` has no
    decaying tail.
    """
    W, V = as_potential(W), as_potential(V)
    _check_alpha(alpha)
    return float(tilted_integral([(-alpha, V)], [W.value], quad=quad).means[0])


def _mean_and_variance(V, alpha, quad):
    res = tilted_integral([(-alpha, V)], [V.value, lambda x: V.value(x) ** 2], quad=quad)
    m, m2 = res.means
    return float(m), float(m2 - m * m)


def variance_of_potential(V, alpha: float, quad: QuadratureConfig = DEFAULT_QUAD) -> float:
    """Variance of ``V(X)`` for ``X ~ mu_{V,alpha}``; equals the second derivative of ``phi_V``."""
    V = as_potential(V)
    _check_alpha(alpha)
    return _mean_and_variance(V, alpha, quad)[1]


def solve_alpha(V, R: float, quad: QuadratureConfig = DEFAULT_QUAD, rtol: float = 1e-10) -> float:
    """Critical temperature: the unique ``alpha < 0`` with ``m_V(mu_{V,alpha}) = R``.

    The mean potential increases from 0 (``alpha -> -inf``) to infinity
    (``alpha -> 0``). The root is bracketed by doubling ``alpha`` from -1 and
    then found by Newton's method in ``s = log(-alpha)`` with bisection as the
    safeguard; the variance of ``V`` supplies the derivative.
    """
    V = as_potential(V)
    if not (np.isfinite(R) and R > 0):
        raise DomainError(f"R must be > 0, got {R}")
    target = rtol * max(1.0, R)
    s_max = math.log(1e12)
    log2 = math.log(2.0)

    def evaluate(s):
        return _mean_and_variance(V, -math.exp(s), quad)

    s = 0.0
    m, var = evaluate(s)
    # bracket: s_lo has m >= R, s_hi has m <= R (m decreases in s)
    if m >= R:
        s_lo, s_hi = s, None
    else:
        s_lo, s_hi = None, s
    cache = {s: (m, var)}
    while s_lo is None or s_hi is None:
        s = s + log2 if s_hi is None else s - log2
        if abs(s) > s_max:
            raise BracketError(f"could not bracket alpha(R) for {V.spec}, R={R}")
        m, var = evaluate(s)
        cache[s] = (m, var)
        if m >= R:
            s_lo = s
        else:
            s_hi = s
    # start Newton from the better end of the bracket
    s = min((s_lo, s_hi), key=lambda t: abs(cache[t][0] - R))
    m, var = cache[s]
    for _ in range(200):
        if abs(m - R) <= target:
            return -math.exp(s)
        alpha = -math.exp(s)
        # d log m / ds = -var * |alpha| / m
        slope = -var * abs(alpha) / m
        s_new = s - (math.log(m) - math.log(R)) / slope if slope < 0 else None
        if s_new is None or not (s_lo < s_new < s_hi):
            s_new = 0.5 * (s_lo + s_hi)
        s = s_new
        m, var = evaluate(s)
        if m >= R:
            s_lo = s
        else:
            s_hi = s
        if s_hi - s_lo < 1e-15:
            break
    if abs(m - R) <= 10 * target:
        return -math.exp(s)
    raise BracketError(f"alpha(R) iteration stalled for {V.spec}, R={R} (|m-R|={abs(m - R):.3g})")


# ------------------------------------------------------------- 1-D measures

_GX, _GW = leggauss(20)


class TiltedMeasure:
    """Probability law on the line with density proportional to ``exp(-sum theta_j V_j)``.

    A monotone table of the half-line distribution function (``table_nodes``
    nodes spanning ``[-T, T]``) is built once; ``cdf`` refines it with a
    Gauss-Legendre rule inside the enclosing panel, ``quantile`` inverts it by
    safeguarded Newton steps.
    """

    def __init__(self, terms, quad: QuadratureConfig = DEFAULT_QUAD, table_nodes: int = 2048):
        self.terms = tuple((float(c), as_potential(V)) for c, V in terms)
        self.quad = quad
        res = tilted_integral(self.terms, quad=quad)
        self.log_partition = res.log_partition
        self.cutoff = res.cutoff
        self._build_table(max(16, table_nodes // 2))

    # potential and density -------------------------------------------------
    def potential(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for c, V in self.terms:
            if c != 0.0:
                out = out + c * V.value(x)
        return out

    def logpdf(self, x):
        return -self.potential(x) - self.log_partition

    def density(self, x):
        out = np.exp(self.logpdf(x))
        return out if np.ndim(out) else float(out)

    pdf = density

    # distribution table ----------------------------------------------------
    def _build_table(self, panels):
        T = self.cutoff
        extra = [k for _, V in self.terms for k in V.kinks if 0 < k < T]
        nodes = np.unique(np.concatenate([np.linspace(0.0, T, panels + 1), extra]))
        mass = self._panel_mass(nodes[:-1], nodes[1:])
        cum = np.concatenate([[0.0], np.cumsum(mass)])
        self.table_mass = 2.0 * cum[-1]
        self._scale = 0.5 / cum[-1]
        self._nodes = nodes
        self._cum = cum * self._scale

    def _panel_mass(self, a, b):
        half = 0.5 * (b - a)
        x = 0.5 * (a + b)[:, None] + half[:, None] * _GX[None, :]
        return (np.exp(self.logpdf(x)) @ _GW) * half

    def _half_cdf(self, t):
        """Mass of [0, t] for t >= 0 (normalized so the half line has 1/2)."""
        k = np.clip(np.searchsorted(self._nodes, t, side="right") - 1, 0, self._nodes.size - 2)
        inside = self._panel_mass(self._nodes[k], np.minimum(t, self._nodes[-1]))
        return np.minimum(self._cum[k] + inside * self._scale, 0.5)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        h = self._half_cdf(np.abs(x).ravel()).reshape(x.shape)
        out = 0.5 + np.sign(x) * h
        return out if out.ndim else float(out)

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        if np.any((u < 0) | (u > 1)):
            raise DomainError("quantile needs u in [0, 1]")
        flat = u.ravel()
        v = np.abs(flat - 0.5)
        t = self._half_quantile(v)
        out = (np.sign(flat - 0.5) * t).reshape(u.shape)
        return out if out.ndim else float(out)

    def _half_quantile(self, v):
        nodes, cum = self._nodes, self._cum
        k = np.clip(np.searchsorted(cum, v, side="right") - 1, 0, nodes.size - 2)
        lo, hi = nodes[k].copy(), nodes[k + 1].copy()
        c_lo, c_hi = cum[k], cum[k + 1]
        with np.errstate(invalid="ignore", divide="ignore"):
            frac = np.where(c_hi > c_lo, (v - c_lo) / (c_hi - c_lo), 0.0)
        t = lo + np.clip(frac, 0.0, 1.0) * (hi - lo)
        for _ in range(30):
            F = self._half_cdf(t)
            err = F - v
            lo = np.where(err < 0, t, lo)
            hi = np.where(err > 0, t, hi)
            if np.all(np.abs(err) <= 1e-13):
                break
            d = np.exp(self.logpdf(t)) * self._scale
            with np.errstate(invalid="ignore", divide="ignore"):
                step = np.where(d > 0, err / d, np.inf)
            cand = t - step
            bad = ~np.isfinite(cand) | (cand <= lo) | (cand >= hi)
            t = np.where(bad, 0.5 * (lo + hi), cand)
        return t

    def sample(self, size, rng: np.random.Generator):
        return self.quantile(rng.random(size))

    # moments -----------------------------------------------------------------
    def expect(self, funcs):
        return tilted_integral(self.terms, list(funcs), quad=self.quad).means

    def moment(self, W) -> float:
        W = as_potential(W)
        return float(self.expect([W.value])[0])

    def entropy(self) -> float:
        """Differential entropy ``-int f log f``."""
        cs = [c for c, _ in self.terms]
        ms = self.expect([V.value for _, V in self.terms])
        return float(self.log_partition + np.dot(cs, ms))


class GibbsMeasure1D(TiltedMeasure):
    """``mu_{V,alpha}``: density ``exp(alpha V(x) - phi_V(alpha))`` with ``alpha < 0``."""

    def __init__(self, V, alpha: float, quad: QuadratureConfig = DEFAULT_QUAD, table_nodes: int = 2048):
        V = as_potential(V)
        _check_alpha(alpha)
        self.V = V
        self.alpha = float(alpha)
        super().__init__([(-self.alpha, V)], quad=quad, table_nodes=table_nodes)

    @classmethod
    def at_radius(cls, V, R: float, quad: QuadratureConfig = DEFAULT_QUAD):
        """The Gibbs measure at the critical temperature ``alpha(R)``."""
        V = as_potential(V)
        return cls(V, solve_alpha(V, R, quad), quad=quad)

    def __repr__(self):
        return f"GibbsMeasure1D({self.V.spec}, alpha={self.alpha!r})"


# ---------------------------------------------------------- grid densities


@dataclass
class GridDensity:
    """Piecewise-linear density on a strictly increasing grid, zero outside.

    Values are normalized at construction so the trapezoid integral is 1;
    ``raw_integral`` keeps the pre-normalization mass.
    """

    nodes: np.ndarray
    values: np.ndarray
    raw_integral: float = field(init=False)

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.nodes.ndim != 1 or self.nodes.shape != self.values.shape or self.nodes.size < 2:
            raise DomainError("nodes and values must be 1-D arrays of equal length >= 2")
        if np.any(np.diff(self.nodes) <= 0):
            raise DomainError("grid nodes must be strictly increasing")
        if np.any(self.values < 0) or not np.all(np.isfinite(self.values)):
            raise DomainError("density values must be finite and nonnegative")
        self.raw_integral = float(np.trapezoid(self.values, self.nodes))
        if self.raw_integral <= 0:
            raise DomainError("density has zero mass")
        self.values = self.values / self.raw_integral

    @classmethod
    def from_function(cls, f, nodes):
        nodes = np.asarray(nodes, dtype=float)
        return cls(nodes, np.asarray(f(nodes), dtype=float))

    @classmethod
    def read_csv(cls, path):
        """Load a two-column ``x,density`` CSV with header."""
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or [c.strip() for c in rows[0]] != ["x", "density"]:
            raise DomainError(f"{path}: expected header 'x,density'")
        data = np.array([[float(a), float(b)] for a, b in rows[1:]], dtype=float)
        out = cls(data[:, 0], data[:, 1])
        if abs(out.raw_integral - 1.0) > 1e-3:
            warnings.warn(f"{path}: density integrates to {out.raw_integral:.6g}; renormalized", stacklevel=2)
        return out

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "density"])
            for x, y in zip(self.nodes, self.values):
                w.writerow([repr(float(x)), repr(float(y))])

    def moment(self, W) -> float:
        W = as_potential(W)
        return float(np.trapezoid(W.value(self.nodes) * self.values, self.nodes))

    def entropy(self) -> float:
        f = self.values
        with np.errstate(divide="ignore", invalid="ignore"):
            flogf = np.where(f > 0, f * np.log(np.where(f > 0, f, 1.0)), 0.0)
        return float(-np.trapezoid(flogf, self.nodes))


def rate_function(V, R: float, mu: GridDensity, quad: QuadratureConfig = DEFAULT_QUAD,
                  moment_tol: float = 1e-9) -> float:
    """Sanov rate of the uniform Orlicz-ball empirical measure at ``mu``.

    Uses the entropy form ``-h(mu) + phi_V(alpha(R)) - alpha(R) R`` when
    ``m_V(mu) <= R`` (up to a relative ``moment_tol`` for discretization
    round-off), and ``inf`` otherwise.
    """
    V = as_potential(V)
    if mu.moment(V) > R * (1.0 + moment_tol):
        return math.inf
    alpha = solve_alpha(V, R, quad)
    return -mu.entropy() + log_partition(V, alpha, quad) - alpha * R


def log_volume_limit(V, R: float, quad: QuadratureConfig = DEFAULT_QUAD) -> float:
    """Limit of ``(1/n) log vol_n`` of the Orlicz ball ``{sum V(x_i) <= R n}``."""
    V = as_potential(V)
    alpha = solve_alpha(V, R, quad)
    return log_partition(V, alpha, quad) - alpha * R


def exact_lp_log_volume(p: float, R: float, n: int) -> float:
    """``(1/n) log vol`` of the l_p ball of radius ``(R n)^(1/p)`` in ``R^n``.

    Uses ``vol = (2 Gamma(1 + 1/p))^n r^n / Gamma(1 + n/p)``.
    """
    if p < 1 or R <= 0 or n < 1:
        raise DomainError("need p >= 1, R > 0, n >= 1")
    log_r = math.log(R * n) / p
    total = n * (math.log(2.0) + gammaln(1.0 + 1.0 / p)) + n * log_r - gammaln(1.0 + n / p)
    return float(total / n)
