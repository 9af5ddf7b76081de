"""Orlicz functions: even, convex potentials vanishing only at the origin.

Three families are supported, each parseable from a short text form::

    power:2                      |x|^2
    mix:1.0*power:4+0.5*power:1  |x|^4 + 0.5 |x|
    huber:1.0                    x^2 on |x| <= 1, 2|x| - 1 beyond

All evaluations act on ``|x|`` and are vectorized over numpy arrays.
"""

from __future__ import annotations

import re
import warnings
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParseError

__all__ = [
    "OrliczFunction",
    "Power",
    "Mix",
    "Huber",
    "AxiomReport",
    "parse_spec",
    "as_potential",
    "verify_orlicz",
    "growth_dominates",
    "check_cross_integrability",
]

_INV_RTOL = 1e-12


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


class OrliczFunction(ABC):
    """Abstract even convex potential ``V`` with ``V(0) = 0``."""

    @abstractmethod
    def _value_abs(self, t: np.ndarray) -> np.ndarray:
        """V on t >= 0."""

    @abstractmethod
    def _deriv_abs(self, t: np.ndarray) -> np.ndarray:
        """Right derivative of V on t >= 0."""

    @abstractmethod
    def _inverse(self, y: np.ndarray) -> np.ndarray:
        """Inverse of V restricted to [0, inf)."""

    @property
    @abstractmethod
    def spec(self) -> str:
        """Canonical text form accepted by :func:`parse_spec`."""

    @property
    def kinks(self) -> tuple[float, ...]:
        """Positive points where V is not twice differentiable."""
        return ()

    def value(self, x):
        t = np.abs(np.asarray(x, dtype=float))
        out = self._value_abs(t)
        return out if out.ndim else float(out)

    __call__ = value

    def derivative_right(self, x):
        x = np.asarray(x, dtype=float)
        t = np.abs(x)
        d = self._deriv_abs(t)
        # on the negative half-line the right derivative is the mirrored
        # left derivative; away from kinks it is just -V'(|x|)
        out = np.where(x < 0, -self._deriv_left_abs(t), d)
        return out if out.ndim else float(out)

    def _deriv_left_abs(self, t):
        return self._deriv_abs(t)

    def inverse_nonneg(self, y):
        y = np.asarray(y, dtype=float)
        if np.any(y < 0):
            raise DomainError("inverse_nonneg needs y >= 0")
        out = self._inverse(y)
        return out if out.ndim else float(out)

    def __str__(self):
        return self.spec


@dataclass(frozen=True)
class Power(OrliczFunction):
    """``|x|**p`` for ``p >= 1``."""

    p: float

    def __post_init__(self):
        if not np.isfinite(self.p) or self.p < 1:
            raise DomainError(f"power exponent must be >= 1, got {self.p}")
        object.__setattr__(self, "p", float(self.p))

    @property
    def spec(self):
        return f"power:{_fmt(self.p)}"

    def _value_abs(self, t):
        return t**self.p

    def _deriv_abs(self, t):
        if self.p == 1.0:
            return np.ones_like(t)
        return self.p * t ** (self.p - 1.0)

    def _inverse(self, y):
        return y ** (1.0 / self.p)


@dataclass(frozen=True)
class Mix(OrliczFunction):
    """Positive combination ``sum_k w_k |x|**p_k`` of power terms."""

    terms: tuple[tuple[float, Power], ...]

    def __post_init__(self):
        if not self.terms:
            raise DomainError("mix needs at least one term")
        clean = []
        for w, term in self.terms:
            if not np.isfinite(w) or w <= 0:
                raise DomainError(f"mix weights must be > 0, got {w}")
            if not isinstance(term, Power):
                term = Power(float(term))
            clean.append((float(w), term))
        object.__setattr__(self, "terms", tuple(clean))

    @property
    def spec(self):
        body = "+".join(f"{_fmt(w)}*{t.spec}" for w, t in self.terms)
        return f"mix:{body}"

    def _value_abs(self, t):
        return sum(w * term._value_abs(t) for w, term in self.terms)

    def _deriv_abs(self, t):
        return sum(w * term._deriv_abs(t) for w, term in self.terms)

    def _inverse(self, y):
        # V(t) >= w_k t^p_k for every k, so the root lies below min_k (y/w_k)^(1/p_k)
        hi = np.min([(y / w) ** (1.0 / term.p) for w, term in self.terms], axis=0)
        lo = np.zeros_like(hi)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            below = self._value_abs(mid) < y
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
            if np.all(hi - lo <= _INV_RTOL * 0.25 * hi):
                break
        t = 0.5 * (lo + hi)
        # one Newton polish; V is increasing so the step stays in the bracket
        d = self._deriv_abs(t)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(d > 0, (self._value_abs(t) - y) / d, 0.0)
        return np.clip(t - step, lo, hi)


@dataclass(frozen=True)
class Huber(OrliczFunction):
    """Quadratic near zero, affine continuation beyond ``t0``.

    ``V(x) = x**2`` for ``|x| <= t0`` and ``2 t0 |x| - t0**2`` otherwise,
    so V is C^1 with a jump of V'' at ``|x| = t0``.
    """

    t0: float

    def __post_init__(self):
        if not np.isfinite(self.t0) or self.t0 <= 0:
            raise DomainError(f"huber threshold must be > 0, got {self.t0}")
        object.__setattr__(self, "t0", float(self.t0))

    @property
    def spec(self):
        return f"huber:{_fmt(self.t0)}"

    @property
    def kinks(self):
        return (self.t0,)

    def _value_abs(self, t):
        t0 = self.t0
        return np.where(t <= t0, t * t, 2.0 * t0 * t - t0 * t0)

    def _deriv_abs(self, t):
        return np.where(t < self.t0, 2.0 * t, 2.0 * self.t0)

    def _deriv_left_abs(self, t):
        return np.where(t <= self.t0, 2.0 * t, 2.0 * self.t0)

    def _inverse(self, y):
        t0 = self.t0
        y0 = t0 * t0
        return np.where(y <= y0, np.sqrt(y), (y + y0) / (2.0 * t0))


# --------------------------------------------------------------------- parser

_NUMBER = re.compile(r"[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?")


class _Cursor:
    def __init__(self, text):
        self.text = text
        self.pos = 0

    def expect(self, literal):
        if not self.text.startswith(literal, self.pos):
            raise ParseError(f"expected {literal!r}", self.text, self.pos)
        self.pos += len(literal)

    def number(self):
        m = _NUMBER.match(self.text, self.pos)
        if not m:
            raise ParseError("expected a number", self.text, self.pos)
        self.pos = m.end()
        return float(m.group(0)), m.start()

    def word(self):
        m = re.compile(r"[a-z]+").match(self.text, self.pos)
        if not m:
            raise ParseError("expected a potential kind", self.text, self.pos)
        self.pos = m.end()
        return m.group(0), m.start()

    def done(self):
        return self.pos >= len(self.text)


def _parse_power(cur):
    p, at = cur.number()
    if p < 1:
        raise DomainError(f"power exponent must be >= 1 (got {p} at position {at}); p < 1 is not convex")
    return Power(p)


def parse_spec(text: str) -> OrliczFunction:
    """Parse ``power:<p>``, ``huber:<t0>`` or ``mix:<w>*power:<p>+...``."""
    if not isinstance(text, str):
        raise ParseError(f"potential spec must be a string, got {type(text).__name__}")
    cur = _Cursor(text.strip().replace(" ", ""))
    kind, at = cur.word()
    cur.expect(":")
    if kind == "power":
        out = _parse_power(cur)
    elif kind == "huber":
        t0, where = cur.number()
        if t0 <= 0:
            raise DomainError(f"huber threshold must be > 0 (got {t0} at position {where})")
        out = Huber(t0)
    elif kind == "mix":
        terms = []
        while True:
            w, where = cur.number()
            if w <= 0:
                raise DomainError(f"mix weight must be > 0 (got {w} at position {where})")
            cur.expect("*")
            sub, sub_at = cur.word()
            if sub != "power":
                raise ParseError("mix terms must be power terms", cur.text, sub_at)
            cur.expect(":")
            terms.append((w, _parse_power(cur)))
            if cur.done():
                break
            cur.expect("+")
        out = Mix(tuple(terms))
    else:
        raise ParseError(f"unknown potential kind {kind!r}", cur.text, at)
    if not cur.done():
        raise ParseError("trailing characters", cur.text, cur.pos)
    return out


def as_potential(v) -> OrliczFunction:
    """Accept either an :class:`OrliczFunction` or its text form."""
    if isinstance(v, OrliczFunction):
        return v
    return parse_spec(v)


# ------------------------------------------------------------------ axioms


@dataclass(frozen=True)
class AxiomReport:
    zero_at_origin: bool
    symmetric: bool
    convex: bool
    increasing: bool
    inverse_roundtrip: bool
    worst_symmetry: float
    worst_convexity: float
    worst_monotonicity: float
    worst_roundtrip: float

    @property
    def all_pass(self) -> bool:
        return (self.zero_at_origin and self.symmetric and self.convex
                and self.increasing and self.inverse_roundtrip)


def verify_orlicz(V: OrliczFunction, grid) -> AxiomReport:
    """Numerically sweep the Orlicz axioms over ``grid``.

    Convexity is tested on every midpoint of grid pairs (subsampled to at
    most 400 points so the pair count stays manageable).
    """
    g = np.unique(np.asarray(grid, dtype=float))
    if g.size == 0:
        raise DomainError("grid must be nonempty")
    zero_ok = V.value(0.0) == 0.0 and bool(np.all(V.value(g[g != 0]) > 0))

    sym = np.abs(V.value(g) - V.value(-g))
    worst_sym = float(sym.max())

    sub = g if g.size <= 400 else g[np.linspace(0, g.size - 1, 400).astype(int)]
    a, b = np.meshgrid(sub, sub)
    va, vb = V.value(a), V.value(b)
    slack = V.value(0.5 * (a + b)) - 0.5 * (va + vb)
    tol = 1e-12 * (1 + np.abs(va) + np.abs(vb))
    worst_cvx = float(max(0.0, (slack - tol).max()))
    cvx_violation = float(max(0.0, slack.max()))

    pos = np.unique(np.abs(g))
    vals = V.value(pos)
    steps = np.diff(vals)
    worst_mono = float(max(0.0, -steps.min())) if steps.size else 0.0
    increasing = bool(np.all(steps > 0)) if steps.size else True

    y = vals
    rt = np.abs(V.value(V.inverse_nonneg(y)) - y) / (1 + y)
    worst_rt = float(rt.max())

    return AxiomReport(
        zero_at_origin=bool(zero_ok),
        symmetric=worst_sym == 0.0,
        convex=worst_cvx == 0.0,
        increasing=increasing,
        inverse_roundtrip=worst_rt <= 1e-10,
        worst_symmetry=worst_sym,
        worst_convexity=cvx_violation,
        worst_monotonicity=worst_mono,
        worst_roundtrip=worst_rt,
    )


def growth_dominates(V1: OrliczFunction, V2: OrliczFunction, factor: float = 1e3) -> bool:
    """Numerical test of ``V1/V2 -> inf``.

    Compares the ratio at ``x0 = V2^{-1}(1)`` and at ``factor * x0``; the ratio
    must have grown at least tenfold and keep increasing beyond.
    """
    x0 = V2.inverse_nonneg(1.0)
    xs = x0 * np.array([1.0, factor, factor**2])
    r = V1.value(xs) / V2.value(xs)
    return bool(r[1] >= 10 * r[0] and r[2] > r[1])


def check_cross_integrability(V1: OrliczFunction, V2: OrliczFunction, alpha: float = -1e-3) -> bool:
    """Check ``int V1 exp(alpha V2) < inf`` at a small negative ``alpha``.

    This is evidence, not proof; a failure issues a warning and returns False.
    """
    from .gibbs import moment
    from .errors import IntegrabilityError, QuadratureError

    try:
        m = moment(V1, V2, alpha)
        ok = bool(np.isfinite(m))
    except (IntegrabilityError, QuadratureError):
        ok = False
    if not ok:
        warnings.warn(
            f"int {V1.spec} * exp({alpha} * {V2.spec}) looks divergent; "
            "conditional limit results may not apply",
            RuntimeWarning,
            stacklevel=2,
        )
    return ok
