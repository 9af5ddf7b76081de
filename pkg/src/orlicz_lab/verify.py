"""Closed-form self-check suite (no sampling).

Each check compares a computed quantity with an exact value or an exact
structural property; :func:`run_verify` returns one record per check.
"""

from __future__ import annotations

import math
import time
import warnings

import numpy as np

from .gibbs import exact_lp_log_volume, log_partition, log_volume_limit, moment, solve_alpha, variance_of_potential
from .maxent import classify_regime, maxent_two_constraints, thinshell_rate, thresholds
from .potentials import Power, parse_spec, verify_orlicz

__all__ = ["BUILTINS", "run_verify"]

BUILTINS = ("power:1", "power:1.5", "power:2", "power:3", "power:4", "huber:1", "mix:1*power:4+0.5*power:1")


def _record(name, ok, worst, tol):
    return {"check": name, "pass": bool(ok), "worst": float(worst), "tolerance": float(tol)}


def _axioms():
    grid = np.concatenate([-np.linspace(0, 10, 1001), np.linspace(0, 10, 1001)])
    reports = [verify_orlicz(parse_spec(s), grid) for s in BUILTINS]
    worst = max(r.worst_roundtrip for r in reports)
    return _record("orlicz_axioms", all(r.all_pass for r in reports), worst, 1e-10)


def _alpha_closed_form():
    worst = 0.0
    for p in (1, 1.5, 2, 3, 4):
        for R in (0.1, 0.5, 1, 2, 10):
            exact = -1.0 / (p * R)
            worst = max(worst, abs(solve_alpha(Power(p), R) - exact) / abs(exact))
    return _record("alpha_closed_form", worst <= 1e-9, worst, 1e-9)


def _derivatives():
    h = 1e-4
    worst = 0.0
    for s in BUILTINS:
        V = parse_spec(s)
        for a in (-4, -2, -1, -0.5, -0.1):
            fd = (log_partition(V, a + h) - log_partition(V, a - h)) / (2 * h)
            worst = max(worst, abs(fd - moment(V, V, a)))
    return _record("log_partition_derivative", worst <= 1e-5, worst, 1e-5)


def _gaussian_laplace_identities():
    vals = [
        (log_partition("power:2", -1), 0.5 * math.log(math.pi)),
        (log_partition("power:1", -2), 0.0),
        (moment("power:2", "power:2", -1), 0.5),
        (moment("power:2", "power:1", -1), 2.0),
        (moment("power:1", "power:2", -1), 1 / math.sqrt(math.pi)),
        (variance_of_potential("power:1", -1), 1.0),
        (variance_of_potential("power:2", -1), 0.5),
        (variance_of_potential("power:2", -0.5), 2.0),
    ]
    worst = max(abs(a - b) for a, b in vals)
    return _record("gibbs_closed_forms", worst <= 1e-9, worst, 1e-9)


def _thresholds():
    a = thresholds("power:2", "power:1")
    b = thresholds("power:4", "power:2")
    errs = [abs(a.alpha_bar + math.sqrt(2)), abs(a.r_bar - 1 / math.sqrt(2)), abs(b.r_bar - 1 / math.sqrt(3)),
            abs(a.r_tilde - 1) * 1e-2, abs(b.r_tilde - 1) * 1e-2]
    return _record("thresholds", max(errs) <= 1e-6, max(errs), 1e-6)


def _maxent_sweep():
    worst_kkt, worst_slack, agree = 0.0, 0.0, True
    cases = [("power:2", "power:1", R) for R in (0.2, 0.4, 0.5, 0.6, 0.65, 0.72, 0.75, 0.78, 0.85, 1.5)]
    cases += [("power:4", "power:2", R) for R in (0.2, 0.4, 0.5, 0.55, 0.6, 0.62, 0.65, 0.7, 0.9, 2.0)]
    ths = {}
    for V1, V2, R in cases:
        sol = maxent_two_constraints(V1, 1.0, "le", V2, R, "le")
        worst_kkt = max(worst_kkt, sol.kkt_residual)
        worst_slack = max(worst_slack, *sol.slackness)
        th = ths.setdefault((V1, V2), thresholds(V1, V2))
        if min(abs(R - th.r_bar), abs(R - th.r_typical)) > 1e-3:
            agree &= classify_regime(V1, V2, R, th=th) is sol.regime
    ok = worst_kkt <= 1e-9 and worst_slack <= 1e-8 and agree
    return _record("maxent_kkt_and_regimes", ok, max(worst_kkt, worst_slack), 1e-8)


def _volume():
    ok, worst = True, 0.0
    for p in (1, 2, 4):
        for R in (0.5, 1, 2):
            limit = log_volume_limit(Power(p), R)
            gaps = [abs(exact_lp_log_volume(p, R, n) - limit) for n in (10, 100, 1000, 5000)]
            ok &= all(b < a for a, b in zip(gaps, gaps[1:]))
            worst = max(worst, gaps[-1])
    return _record("volume_limit", ok and worst <= 2e-3, worst, 2e-3)


def _thinshell():
    a = solve_alpha("power:4", 1.0)
    x_star = math.sqrt(moment("power:2", "power:4", a))
    j = thinshell_rate("power:4", 1.0, 2, x_star)
    neg = thinshell_rate("power:4", 1.0, 2, -0.5)
    return _record("thinshell_zero", j <= 1e-6 and math.isinf(neg), j, 1e-6)


CHECKS = (_axioms, _alpha_closed_form, _derivatives, _gaussian_laplace_identities,
          _thresholds, _maxent_sweep, _volume, _thinshell)


def run_verify() -> dict:
    """Run every closed-form check; returns ``{"checks": [...], "pass": bool, "wall_clock": s}``."""
    start = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        checks = [f() for f in CHECKS]
    return {"checks": checks, "pass": all(c["pass"] for c in checks), "wall_clock": time.perf_counter() - start}
