"""Maximum entropy under (at most two) Orlicz-moment constraints.

The maximizer of differential entropy subject to ``int V_i dnu <= c_i`` (or
``= c_i``) has density ``exp(-mu_1 V_1 - mu_2 V_2 - log Z)``. The multipliers
minimize the convex dual

    D(mu) = log int exp(-mu_1 V_1 - mu_2 V_2) dx + mu_1 c_1 + mu_2 c_2,

whose gradient is ``c - E[V]`` and Hessian ``Cov(V)``. The minimum value is
the maximal entropy. This module also computes the phase-transition radii of
the conditional limit for a pair ``(V1, V2)`` and the thin-shell rate.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import (
    DivergenceError,
    DomainError,
    HypothesisError,
    InfeasibleError,
    IntegrabilityError,
    QuadratureError,
)
from .gibbs import TiltedMeasure, log_partition, moment, solve_alpha
from .potentials import Power, as_potential, check_cross_integrability, growth_dominates
from .quadrature import DEFAULT_QUAD, QuadratureConfig, tilted_integral

__all__ = [
    "Regime",
    "Constraint",
    "MaxEntSolution",
    "maxent_two_constraints",
    "Thresholds",
    "threshold_rbar",
    "threshold_rtilde",
    "typical_moment",
    "thresholds",
    "classify_regime",
    "ThinShellPoint",
    "thinshell_point",
    "thinshell_rate",
]

ZERO_MULTIPLIER = 1e-7
KKT_TOL = 1e-9


class Regime(str, Enum):
    SUBCRITICAL = "Subcritical"
    INTERMEDIATE = "Intermediate"
    SUPERCRITICAL = "Supercritical"


class Constraint(str, Enum):
    LE = "le"
    EQ = "eq"

    @classmethod
    def parse(cls, op) -> "Constraint":
        if isinstance(op, Constraint):
            return op
        table = {"le": cls.LE, "<=": cls.LE, "≤": cls.LE, "eq": cls.EQ, "=": cls.EQ, "==": cls.EQ}
        try:
            return table[str(op).strip()]
        except KeyError:
            raise DomainError(f"constraint must be one of le/eq, got {op!r}") from None


# --------------------------------------------------------------- the dual


@dataclass
class _DualPoint:
    value: float
    log_partition: float
    means: np.ndarray
    cov: np.ndarray


class _Dual:
    def __init__(self, potentials, targets, quad):
        self.V = potentials
        self.c = np.asarray(targets, dtype=float)
        self.quad = quad
        k = len(potentials)
        funcs = [V.value for V in potentials]
        self._pairs = [(i, j) for i in range(k) for j in range(i, k)]
        for i, j in self._pairs:
            funcs.append(lambda x, a=potentials[i], b=potentials[j]: a.value(x) * b.value(x))
        self._funcs = funcs

    def __call__(self, theta) -> _DualPoint | None:
        """Dual value and derivatives, or None where the integral diverges."""
        terms = list(zip(theta, self.V))
        try:
            res = tilted_integral(terms, self._funcs, quad=self.quad)
        except (IntegrabilityError, QuadratureError):
            return None
        k = len(self.V)
        m = res.means[:k]
        cov = np.empty((k, k))
        for (i, j), mij in zip(self._pairs, res.means[k:]):
            cov[i, j] = cov[j, i] = mij - m[i] * m[j]
        return _DualPoint(res.log_partition + float(np.dot(theta, self.c)), res.log_partition, m, cov)


def _projected_gradient(theta, grad, lower):
    pg = grad.copy()
    at_bound = theta <= lower
    pg[at_bound] = np.minimum(grad[at_bound], 0.0)
    return pg


def _solve_dual(dual: _Dual, lower, theta0, max_iter=200, blowup=1e8):
    """Projected Newton with Armijo backtracking on ``theta >= lower``."""
    theta = np.maximum(np.asarray(theta0, dtype=float), lower)
    pt = dual(theta)
    if pt is None:
        raise InfeasibleError("dual objective is not finite at the starting point")
    for _ in range(max_iter):
        grad = dual.c - pt.means
        pg = _projected_gradient(theta, grad, lower)
        if np.linalg.norm(pg) <= KKT_TOL:
            return theta, pt, float(np.linalg.norm(pg))
        # free variables: interior ones, and bound ones the gradient pushes inward
        free = (theta > lower) | (grad < 0)
        step = np.zeros_like(theta)
        H = pt.cov[np.ix_(free, free)]
        g = grad[free]
        try:
            d = -np.linalg.solve(H, g)
            if not np.all(np.isfinite(d)) or np.dot(d, g) >= 0:
                raise np.linalg.LinAlgError
        except np.linalg.LinAlgError:
            d = -g / max(np.trace(H), 1e-300)
        step[free] = d
        t = 1.0
        accepted = False
        for _ in range(60):
            cand = np.maximum(theta + t * step, lower)
            cpt = dual(cand)
            if cpt is not None and cpt.value <= pt.value + 1e-4 * np.dot(grad, cand - theta) + 1e-15 * abs(pt.value):
                accepted = True
                break
            t *= 0.5
        if not accepted:
            # no decrease possible at working precision; accept current point
            return theta, pt, float(np.linalg.norm(pg))
        theta, pt = cand, cpt
        if np.max(np.abs(theta)) > blowup:
            raise InfeasibleError("multipliers diverge: the constraints admit no density")
    grad = dual.c - pt.means
    res = float(np.linalg.norm(_projected_gradient(theta, grad, lower)))
    if res > 1e3 * KKT_TOL:
        raise InfeasibleError(f"dual solver did not converge (KKT residual {res:.3g})")
    return theta, pt, res


# ------------------------------------------------------------ public solver


@dataclass(frozen=True)
class MaxEntSolution:
    """Entropy maximizer ``nu* ∝ exp(-mu1* V1 - mu2* V2)`` and its certificates."""

    V1: object
    V2: object
    c1: float
    c2: float
    op1: Constraint
    op2: Constraint
    mu1_star: float
    mu2_star: float
    log_partition: float
    achieved_m1: float
    achieved_m2: float
    regime: Regime
    kkt_residual: float

    @property
    def entropy(self) -> float:
        return self.log_partition + self.mu1_star * self.achieved_m1 + self.mu2_star * self.achieved_m2

    @property
    def slackness(self) -> tuple[float, float]:
        return (abs((self.achieved_m1 - self.c1) * self.mu1_star),
                abs((self.achieved_m2 - self.c2) * self.mu2_star))

    def measure(self, quad: QuadratureConfig = DEFAULT_QUAD) -> TiltedMeasure:
        return TiltedMeasure([(self.mu1_star, self.V1), (self.mu2_star, self.V2)], quad=quad)

    def density(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(-self.mu1_star * self.V1.value(x) - self.mu2_star * self.V2.value(x) - self.log_partition)

    def to_dict(self) -> dict:
        return {
            "mu1_star": self.mu1_star,
            "mu2_star": self.mu2_star,
            "log_partition": self.log_partition,
            "m1": self.achieved_m1,
            "m2": self.achieved_m2,
            "regime": self.regime.value,
            "kkt_residual": self.kkt_residual,
        }


def _label(mu1, mu2) -> Regime:
    if mu1 <= ZERO_MULTIPLIER and mu2 > 0:
        return Regime.SUBCRITICAL
    if mu2 <= ZERO_MULTIPLIER and mu1 > 0:
        return Regime.SUPERCRITICAL
    return Regime.INTERMEDIATE


def maxent_two_constraints(V1, c1: float, op1, V2, c2: float, op2,
                           quad: QuadratureConfig = DEFAULT_QUAD, init=(1.0, 1.0)) -> MaxEntSolution:
    """Maximize entropy subject to ``m_{V1}(nu) op1 c1`` and ``m_{V2}(nu) op2 c2``.

    Multipliers of ``le`` constraints are kept nonnegative; multipliers of
    ``eq`` constraints are free. The regime label reads ``V1`` as the
    outer-ball potential and ``V2`` as the conditioning one.

    Raises
    ------
    InfeasibleError
        The dual is unbounded below (multipliers run off to infinity).
    DivergenceError
        Both multipliers vanish, so the maximizer would be Lebesgue measure.
    """
    V1, V2 = as_potential(V1), as_potential(V2)
    op1, op2 = Constraint.parse(op1), Constraint.parse(op2)
    if not (c1 > 0 and c2 > 0):
        raise DomainError("moment levels must be positive")
    lower = np.array([0.0 if op is Constraint.LE else -np.inf for op in (op1, op2)])
    dual = _Dual([V1, V2], [c1, c2], quad)
    theta, pt, res = _solve_dual(dual, lower, init)
    mu1, mu2 = (float(t) for t in theta)
    if abs(mu1) <= ZERO_MULTIPLIER and abs(mu2) <= ZERO_MULTIPLIER:
        raise DivergenceError("constraints inactive: entropy is unbounded")
    return MaxEntSolution(
        V1=V1, V2=V2, c1=float(c1), c2=float(c2), op1=op1, op2=op2,
        mu1_star=mu1, mu2_star=mu2,
        log_partition=pt.log_partition,
        achieved_m1=float(pt.means[0]), achieved_m2=float(pt.means[1]),
        regime=_label(mu1, mu2), kkt_residual=res,
    )


# --------------------------------------------------------------- thresholds


def _check_pair(V1, V2):
    if not growth_dominates(V1, V2):
        raise HypothesisError(f"{V1.spec} does not dominate {V2.spec} at infinity")
    check_cross_integrability(V1, V2)


def _solve_cross_alpha(W, V, target, quad):
    """``alpha < 0`` with ``m_W(mu_{V,alpha}) = target`` (increasing in alpha)."""

    def f(s):
        return math.log(moment(W, V, -math.exp(s), quad)) - math.log(target)

    lo, hi = -1.0, 1.0
    flo, fhi = f(lo), f(hi)
    while flo < 0:
        lo, hi, fhi = lo - 2.0, lo, flo
        flo = f(lo)
        if lo < -60:
            raise IntegrabilityError("could not bracket the cross moment")
    while fhi > 0:
        lo, hi, flo = hi, hi + 2.0, fhi
        fhi = f(hi)
        if hi > 60:
            raise IntegrabilityError("could not bracket the cross moment")
    s = brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    return -math.exp(s)


def threshold_rbar(V1, V2, quad: QuadratureConfig = DEFAULT_QUAD) -> tuple[float, float]:
    """Subcritical threshold: ``alpha_bar`` with ``m_{V1}(mu_{V2,alpha_bar}) = 1``
    and ``r_bar = m_{V2}(mu_{V2,alpha_bar})``."""
    V1, V2 = as_potential(V1), as_potential(V2)
    _check_pair(V1, V2)
    a = _solve_cross_alpha(V1, V2, 1.0, quad)
    return a, moment(V2, V2, a, quad)


def _sup_gap(V1, V2, b):
    """``sup_x V2(x) - b V1(x)`` for ``b > 0`` (the maximizer has V2 >= b V1)."""
    x = 1.0
    while V2.value(x) >= b * V1.value(x):
        x *= 2.0
        if x > 1e12:
            raise HypothesisError(f"{V2.spec} - b {V1.spec} is unbounded above")
    xs = np.linspace(0.0, x, 4001)
    g = V2.value(xs) - b * V1.value(xs)
    i = int(np.argmax(g))
    lo, hi = xs[max(i - 1, 0)], xs[min(i + 1, xs.size - 1)]
    if hi <= lo:
        return float(g[i])
    res = minimize_scalar(lambda t: -(V2.value(t) - b * V1.value(t)), bounds=(lo, hi),
                          method="bounded", options={"xatol": 1e-13 * max(hi, 1.0)})
    return float(max(g[i], -res.fun))


def threshold_rtilde(V1, V2) -> float:
    """Supercritical threshold ``sup { m_{V2}(nu) : m_{V1}(nu) <= 1 }``.

    Evaluated through the dual of the linear program over measures,
    ``min_{b >= 0} b + sup_x (V2 - b V1)``; the objective is convex in ``b``
    and is minimized over ``log b`` after a coarse scan.
    """
    V1, V2 = as_potential(V1), as_potential(V2)
    if not growth_dominates(V1, V2):
        raise HypothesisError(f"{V2.spec}/{V1.spec} does not vanish at infinity")

    def obj(logb):
        b = math.exp(logb)
        return b + _sup_gap(V1, V2, b)

    grid = np.linspace(math.log(1e-6), math.log(1e6), 49)
    vals = np.array([obj(t) for t in grid])
    i = int(np.argmin(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    res = minimize_scalar(obj, bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
    return float(min(res.fun, vals[i]))


def typical_moment(V1, V2, quad: QuadratureConfig = DEFAULT_QUAD) -> float:
    """``m_{V2}(mu_{V1,alpha(1)})``: the V2-moment of a typical V1-ball coordinate."""
    V1, V2 = as_potential(V1), as_potential(V2)
    return moment(V2, V1, solve_alpha(V1, 1.0, quad), quad)


@dataclass(frozen=True)
class Thresholds:
    """Radii separating the regimes of the conditional limit.

    ``r_bar`` and ``r_tilde`` bound the pure-V2 and pure-V1 regimes from the
    inside; ``r_typical`` is the exact onset of the pure-V1 regime (the V2
    constraint stops binding once ``R`` reaches it), and ``r_typical <= r_tilde``.
    """

    alpha_bar: float
    r_bar: float
    r_tilde: float
    r_typical: float

    def to_dict(self) -> dict:
        return {"alpha_bar": self.alpha_bar, "r_bar": self.r_bar,
                "r_tilde": self.r_tilde, "r_typical": self.r_typical}


def thresholds(V1, V2, quad: QuadratureConfig = DEFAULT_QUAD) -> Thresholds:
    V1, V2 = as_potential(V1), as_potential(V2)
    a, rb = threshold_rbar(V1, V2, quad)
    return Thresholds(alpha_bar=a, r_bar=rb, r_tilde=threshold_rtilde(V1, V2),
                      r_typical=typical_moment(V1, V2, quad))


def classify_regime(V1, V2, R: float, quad: QuadratureConfig = DEFAULT_QUAD,
                    th: Thresholds | None = None) -> Regime:
    """Regime of the conditional limit at radius ``R``.

    Subcritical for ``R <= r_bar``, supercritical for ``R >= r_typical``,
    intermediate in between.
    """
    if not R > 0:
        raise DomainError(f"R must be > 0, got {R}")
    th = th or thresholds(V1, V2, quad)
    if R <= th.r_bar:
        return Regime.SUBCRITICAL
    if R >= th.r_typical:
        return Regime.SUPERCRITICAL
    return Regime.INTERMEDIATE


# ------------------------------------------------------------ thin shell


@dataclass(frozen=True)
class ThinShellPoint:
    """Thin-shell rate at one point; ``feasible`` is False where no density
    meets the constraints (the rate is then infinite)."""

    x: float
    rate: float
    feasible: bool
    lam: float = math.nan
    mu: float = math.nan
    max_entropy: float = math.nan

    def to_dict(self) -> dict:
        return {"x": self.x, "rate": self.rate, "feasible": self.feasible,
                "lambda": self.lam, "mu": self.mu, "max_entropy": self.max_entropy}


def thinshell_point(V, R: float, p: float, x: float, quad: QuadratureConfig = DEFAULT_QUAD,
                    volume_limit: float | None = None) -> ThinShellPoint:
    """Rate of ``n^{-1/p} ||X||_p`` for ``X`` uniform on the V-ball of radius R.

    ``J(x) = [phi_V(alpha(R)) - alpha(R) R] - max{h(nu) : m_p(nu) = x^p, m_V(nu) <= R}``,
    infinite for ``x <= 0`` and wherever the maximization is infeasible.
    """
    V = as_potential(V)
    P = Power(p)
    if not growth_dominates(V, P):
        raise HypothesisError(f"{V.spec} does not dominate |x|^{p} at infinity")
    if not (x > 0 and np.isfinite(x)):
        return ThinShellPoint(x=float(x), rate=math.inf, feasible=False)
    if volume_limit is None:
        a = solve_alpha(V, R, quad)
        volume_limit = log_partition(V, a, quad) - a * R
    try:
        sol = maxent_two_constraints(P, x**p, Constraint.EQ, V, R, Constraint.LE, quad=quad)
    except (InfeasibleError, DivergenceError):
        return ThinShellPoint(x=float(x), rate=math.inf, feasible=False)
    if sol.kkt_residual > 1e-6:
        return ThinShellPoint(x=float(x), rate=math.inf, feasible=False)
    J = volume_limit - sol.entropy
    if -1e-9 < J < 0:
        J = 0.0  # round-off at the typical point
    elif J < 0:
        warnings.warn(f"negative thin-shell rate {J:.3g} at x={x}", RuntimeWarning, stacklevel=2)
    return ThinShellPoint(x=float(x), rate=float(J), feasible=True,
                          lam=sol.mu1_star, mu=sol.mu2_star, max_entropy=sol.entropy)


def thinshell_rate(V, R: float, p: float, x: float, quad: QuadratureConfig = DEFAULT_QUAD) -> float:
    return thinshell_point(V, R, p, x, quad).rate
