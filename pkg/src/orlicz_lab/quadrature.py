"""Adaptive quadrature for exponentially tilted integrals on the line.

Everything in this package reduces to integrals of the form

    int_R f(x) exp(-U(x)) dx,    U(x) = sum_j theta_j V_j(x),

with even ``f`` and ``V_j``. They are computed on ``[0, T]`` and doubled.
``T`` is where ``U - min U`` first exceeds ``-tail_log_threshold``; the
contribution of ``[T, 2T]`` is then checked and ``T`` extended if needed.
Work is done in log space: the integrand is ``exp(-(U - min U))``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import minimize_scalar

from .errors import ConfigError, IntegrabilityError, QuadratureError

__all__ = ["QuadratureConfig", "DEFAULT_QUAD", "adaptive_integrate", "TiltedIntegral", "tilted_integral"]


@dataclass(frozen=True)
class QuadratureConfig:
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    tail_log_threshold: float = -60.0
    max_subdivisions: int = 2000

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ConfigError("quadrature tolerances must be positive")
        if not self.tail_log_threshold < -20:
            raise ConfigError("tail_log_threshold must be below -20")
        if self.max_subdivisions < 1:
            raise ConfigError("max_subdivisions must be positive")


DEFAULT_QUAD = QuadratureConfig()

_X10, _W10 = leggauss(10)
_X20, _W20 = leggauss(20)


def _panel_rule(f, a, b):
    """10- and 20-point Gauss-Legendre estimates on each panel [a_i, b_i]."""
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    x10 = mid[:, None] + half[:, None] * _X10[None, :]
    x20 = mid[:, None] + half[:, None] * _X20[None, :]
    y10 = f(x10.ravel()).reshape(-1, a.size, 10)
    y20 = f(x20.ravel()).reshape(-1, a.size, 20)
    i10 = (y10 @ _W10) * half
    i20 = (y20 @ _W20) * half
    return i20, np.abs(i20 - i10)


def adaptive_integrate(f, breakpoints, abs_tol=1e-12, rel_tol=1e-10, max_subdivisions=2000):
    """Integrate a vector-valued ``f`` over ``[breakpoints[0], breakpoints[-1]]``.

    ``f`` maps a 1-D array of abscissae (m,) to an array (k, m). Panels whose
    error estimate is above their share of the tolerance are bisected until
    every component satisfies ``err_k <= max(abs_tol, rel_tol * |I_k|)``.

    Returns ``(values, errors)``, both of shape (k,).
    """
    edges = np.asarray(breakpoints, dtype=float)
    a, b = edges[:-1], edges[1:]
    keep = b > a
    a, b = a[keep], b[keep]
    vals, errs = _panel_rule(f, a, b)
    while True:
        total = vals.sum(axis=1)
        err = errs.sum(axis=1)
        tol = np.maximum(abs_tol, rel_tol * np.abs(total))
        if np.all(err <= tol):
            return total, err
        if a.size >= max_subdivisions:
            raise QuadratureError(
                f"subdivision budget {max_subdivisions} exhausted (error {err.max():.3g} > {tol.min():.3g})"
            )
        # split panels carrying more than an even share of the budget
        share = tol[:, None] / a.size
        bad = np.any(errs > 0.5 * share, axis=0)
        if not bad.any():
            bad = np.any(errs >= errs.max(axis=1, keepdims=True), axis=0)
        mid = 0.5 * (a[bad] + b[bad])
        na = np.concatenate([a[bad], mid])
        nb = np.concatenate([mid, b[bad]])
        nv, ne = _panel_rule(f, na, nb)
        good = ~bad
        a = np.concatenate([a[good], na])
        b = np.concatenate([b[good], nb])
        vals = np.concatenate([vals[:, good], nv], axis=1)
        errs = np.concatenate([errs[:, good], ne], axis=1)
        if np.any(np.abs(b - a) <= 1e-15 * np.maximum(1.0, np.abs(a))):
            raise QuadratureError("panel width collapsed; integrand is not resolvable")


@dataclass(frozen=True)
class TiltedIntegral:
    """Result of :func:`tilted_integral`.

    ``means[k]`` is ``int f_k exp(-U) / int exp(-U)``; ``log_partition`` is
    ``log int_R exp(-U)``; ``cutoff`` is the truncation point ``T``.
    """

    log_partition: float
    means: np.ndarray
    cutoff: float
    shift: float


def _combined(terms):
    def U(x):
        out = np.zeros_like(x, dtype=float)
        for c, V in terms:
            if c != 0.0:
                out = out + c * V.value(x)
        return out
    return U


def _minimum(U, terms):
    if all(c >= 0 for c, _ in terms):
        return 0.0, 0.0
    xs = np.concatenate([[0.0], np.logspace(-8, 12, 801)])
    us = U(xs)
    if not np.all(np.isfinite(us)):
        raise IntegrabilityError("potential overflow while locating its minimum")
    i = int(np.argmin(us))
    if i == xs.size - 1:
        raise IntegrabilityError("exp(-U) is not integrable: U decreases without bound")
    if i == 0:
        return 0.0, float(us[0])
    res = minimize_scalar(U, bounds=(xs[i - 1], xs[i + 1]), method="bounded",
                          options={"xatol": 1e-14 * xs[i + 1]})
    xm = float(res.x) if res.fun < us[i] else float(xs[i])
    return xm, float(min(res.fun, us[i]))


def _cutoff(U, xmin, shift, threshold):
    """A point beyond the mode where ``U - shift`` first exceeds ``threshold``."""

    def g(x):
        return U(np.array([x]))[0] - shift

    x = max(1.0, 2.0 * xmin)
    if g(x) >= threshold:
        # peaked integrand: shrink toward the mode so panels resolve it
        while x / 2 > xmin and g(x / 2) >= threshold:
            x /= 2
        return x
    for _ in range(200):
        x *= 2.0
        if g(x) >= threshold:
            return x
    raise IntegrabilityError("exp(-U) is not integrable: the potential does not grow")


def tilted_integral(terms, funcs=(), quad: QuadratureConfig = DEFAULT_QUAD, max_extensions=6) -> TiltedIntegral:
    """Log-partition and normalized expectations under ``exp(-sum theta_j V_j)``.

    Parameters
    ----------
    terms : sequence of (theta, OrliczFunction)
        Coefficients may be negative as long as the total potential still
        grows to infinity.
    funcs : sequence of callables
        Even functions whose expectations are wanted; each maps an array to
        an array of the same shape.
    """
    terms = [(float(c), V) for c, V in terms]
    U = _combined(terms)
    xmin, shift = _minimum(U, terms)
    threshold = -quad.tail_log_threshold
    T = _cutoff(U, xmin, shift, threshold)

    fs = list(funcs)

    def integrand(x):
        w = np.exp(-(U(x) - shift))
        rows = [w] + [np.asarray(f(x), dtype=float) * w for f in fs]
        return np.vstack(rows)

    kinks = sorted({k for _, V in terms for k in V.kinks})

    def integrate(lo, hi):
        pts = [lo] + [k for k in kinks if lo < k < hi] + ([xmin] if lo < xmin < hi else []) + [hi]
        pts = sorted(set(pts))
        # a few equal panels so narrow peaks near the left end are seen
        grid = np.unique(np.concatenate([np.linspace(p, q, 9) for p, q in zip(pts[:-1], pts[1:])]))
        return adaptive_integrate(integrand, grid, quad.abs_tol, quad.rel_tol, quad.max_subdivisions)[0]

    main = integrate(0.0, T)
    for _ in range(max_extensions):
        tail = integrate(T, 2 * T)
        tol = np.maximum(quad.abs_tol * np.maximum(1.0, np.abs(main[0])), quad.rel_tol * np.abs(main))
        main = main + tail
        if np.all(np.abs(tail) <= tol):
            break
        T *= 2
    else:
        raise IntegrabilityError("tail contribution does not decay; the moment is infinite")
    if not np.all(np.isfinite(main)) or main[0] <= 0:
        raise IntegrabilityError("tilted integral is not finite")
    log_z = float(np.log(2.0 * main[0]) - shift)
    means = main[1:] / main[0]
    return TiltedIntegral(log_partition=log_z, means=means, cutoff=float(2 * T), shift=shift)
