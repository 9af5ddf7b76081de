"""Command-line front end.

Exit codes: 0 success, 1 experiment or self-check failure, 2 usage or
configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings

import numpy as np

from . import __version__
from .errors import ConfigError, NumericalError, UsageError
from .experiments import ExperimentConfig, jsonable, run_experiment
from .gibbs import GibbsMeasure1D, exact_lp_log_volume, log_partition, log_volume_limit, moment, solve_alpha, variance_of_potential
from .maxent import classify_regime, maxent_two_constraints, thinshell_point, thresholds
from .potentials import Power, as_potential
from .quadrature import QuadratureConfig
from .samplers import BallConstraint, McmcSchedule, conditional_marginal_samples, mcmc_orlicz_ball, sample_lp_ball_exact


def _common_parser():
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("common options")
    g.add_argument("--seed", type=int, default=None, help="master seed (default 0)")
    g.add_argument("--out", default=None, help="output path (default stdout)")
    g.add_argument("--quad-tol", type=float, default=1e-12, help="absolute quadrature tolerance")
    g.add_argument("--workers", type=int, default=1, help="worker threads for chain blocks")
    g.add_argument("--config", default=None, help="JSON file of option values (experiment: experiment config)")
    g.add_argument("--dump-config", action="store_true", help="print the resolved configuration and exit")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(prog="orlicz-lab", description="Gibbs calculus, maximum entropy and "
                                     "Monte Carlo checks for Orlicz balls.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gibbs", parents=[common], help="log-partition, alpha(R) and moments")
    p.add_argument("--V", required=True)
    grp = p.add_mutually_exclusive_group(required=True)
    grp.add_argument("--R", type=float)
    grp.add_argument("--alpha", type=float)

    p = sub.add_parser("thresholds", parents=[common], help="regime radii for a pair of potentials")
    p.add_argument("--V1", required=True)
    p.add_argument("--V2", required=True)
    p.add_argument("--R", type=float, default=None, help="also classify this radius")

    p = sub.add_parser("maxent", parents=[common], help="entropy maximizer under two moment constraints")
    p.add_argument("--V1", required=True)
    p.add_argument("--c1", type=float, required=True)
    p.add_argument("--op1", choices=("le", "eq"), default="le")
    p.add_argument("--V2", required=True)
    p.add_argument("--c2", type=float, required=True)
    p.add_argument("--op2", choices=("le", "eq"), default="le")

    p = sub.add_parser("thinshell", parents=[common], help="thin-shell rate function")
    p.add_argument("--V", required=True)
    p.add_argument("--R", type=float, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--x", type=float, nargs="+", required=True)

    p = sub.add_parser("volume", parents=[common], help="per-dimension log-volume of l_p balls")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--R", type=float, required=True)
    p.add_argument("--n", type=int, nargs="+", default=[10, 100, 1000, 5000])

    p = sub.add_parser("sample", parents=[common], help="draw samples to CSV")
    p.add_argument("--mode", choices=("gibbs", "lp-exact", "mcmc", "conditional"), required=True)
    p.add_argument("--V", default="power:2")
    p.add_argument("--V1", default="power:2")
    p.add_argument("--V2", default=None)
    p.add_argument("--R", type=float, default=1.0)
    p.add_argument("--R2", type=float, default=None, help="second ball radius (mcmc mode)")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--k", type=int, default=None, help="record only the first k coordinates")
    p.add_argument("--eps", type=float, default=0.0)
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--sweeps", type=int, default=None)
    p.add_argument("--burn-in", type=int, default=None)
    p.add_argument("--thin", type=int, default=5)

    p = sub.add_parser("experiment", parents=[common], help="run an experiment from a JSON config")

    sub.add_parser("verify", parents=[common], help="closed-form self-check suite")
    return parser


# ------------------------------------------------------------------ helpers


def _emit(text: str, out):
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dumps(obj) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, indent=2) + "\n"


def _resolved(args) -> dict:
    data = {k: v for k, v in vars(args).items() if k not in ("config", "dump_config")}
    data["seed"] = 0 if data.get("seed") is None else data["seed"]
    return data


def _load_defaults(parser, argv):
    """Two-pass parse: option values from ``--config`` become defaults, explicit flags win.

    The subcommand may be omitted on the command line when the file names it.
    """
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    choices = parser._subparsers._group_actions[0].choices
    command = next((a for a in argv if a in choices), None)
    if known.config is None or command == "experiment":
        return parser.parse_args(argv)
    with open(known.config) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{known.config}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{known.config}: expected a JSON object")
    file_command = data.pop("command", None)
    if command is None:
        if file_command not in choices:
            raise ConfigError(f"{known.config}: no subcommand given on the command line or in the file")
        command = file_command
        argv = [command] + argv
    elif file_command is not None and file_command != command:
        raise ConfigError(f"{known.config} is a config for '{file_command}', not '{command}'")
    sub = choices[command]
    dests = {a.dest for a in sub._actions}
    unknown = sorted(set(data) - dests)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    sub.set_defaults(**data)
    # required flags may now come from the file
    for action in sub._actions:
        if action.dest in data:
            action.required = False
    for group in sub._mutually_exclusive_groups:
        if any(a.dest in data for a in group._group_actions):
            group.required = False
    return parser.parse_args(argv)


# ---------------------------------------------------------------- commands


def _cmd_gibbs(args, quad):
    V = as_potential(args.V)
    alpha = solve_alpha(V, args.R, quad) if args.R is not None else args.alpha
    return {"V": V.spec, "alpha": alpha, "log_partition": log_partition(V, alpha, quad),
            "m_V": moment(V, V, alpha, quad), "variance": variance_of_potential(V, alpha, quad)}


def _cmd_thresholds(args, quad):
    th = thresholds(args.V1, args.V2, quad)
    out = th.to_dict()
    if args.R is not None:
        out["regime"] = classify_regime(args.V1, args.V2, args.R, quad, th=th).value
    return out


def _cmd_maxent(args, quad):
    sol = maxent_two_constraints(args.V1, args.c1, args.op1, args.V2, args.c2, args.op2, quad=quad)
    return sol.to_dict()


def _cmd_thinshell(args, quad):
    return {"points": [thinshell_point(args.V, args.R, args.p, x, quad).to_dict() for x in args.x]}


def _cmd_volume(args, quad):
    limit = log_volume_limit(Power(args.p), args.R, quad)
    rows = [{"n": n, "exact": exact_lp_log_volume(args.p, args.R, n),
             "gap": abs(exact_lp_log_volume(args.p, args.R, n) - limit)} for n in args.n]
    return {"limit": limit, "table": rows}


def _cmd_sample(args, quad):
    seed = args.seed or 0
    meta = {"mode": args.mode, "seed": seed}
    if args.mode == "gibbs":
        V = as_potential(args.V)
        alpha = args.alpha if args.alpha is not None else solve_alpha(V, args.R, quad)
        X = GibbsMeasure1D(V, alpha, quad).sample(args.count, np.random.default_rng(seed))[:, None]
        meta.update({"V": V.spec, "alpha": alpha, "count": args.count})
    elif args.mode == "lp-exact":
        X = sample_lp_ball_exact(args.p, args.R, args.n, args.count, seed)
        meta.update({"p": args.p, "R": args.R, "n": args.n, "count": args.count})
    else:
        sched = _schedule(args)
        chains = math.ceil(args.count / sched.kept_per_chain)
        k = args.k or (1 if args.mode == "conditional" else args.n)
        if args.mode == "mcmc":
            cons = [BallConstraint(as_potential(args.V), args.R * args.n)]
            if args.V2 is not None:
                if args.R2 is None:
                    raise ConfigError("--V2 needs --R2 in mcmc mode")
                cons.append(BallConstraint(as_potential(args.V2), args.R2 * args.n))
            X = mcmc_orlicz_ball(cons, args.n, sched, chains=chains, seed=seed, workers=args.workers,
                                 coords=range(k))[: args.count]
            meta["constraints"] = [c.to_dict() for c in cons]
        else:
            if args.V2 is None:
                raise ConfigError("conditional mode needs --V2")
            X = conditional_marginal_samples(args.V1, args.V2, args.R, args.n, k=k, kept=args.count, eps=args.eps,
                                             schedule=sched, seed=seed, workers=args.workers)
            meta.update({"V1": args.V1, "V2": args.V2, "R": args.R, "eps": args.eps})
        meta.update({"n": args.n, "schedule": sched.to_dict()})
    buf = io.StringIO()
    buf.write("# " + json.dumps(jsonable(meta), sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"x{i + 1}" for i in range(X.shape[1])])
    for row in X:
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def _schedule(args):
    burn = 2 * args.n if args.burn_in is None else args.burn_in
    sweeps = args.sweeps if args.sweeps is not None else burn + args.thin
    return McmcSchedule(sweeps=sweeps, burn_in=burn, thin=args.thin)


def _cmd_experiment(args):
    if not args.config:
        raise ConfigError("experiment needs --config FILE")
    cfg = ExperimentConfig.from_json(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.workers != 1:
        cfg.workers = args.workers
    if args.out:
        cfg.output = args.out
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _load_defaults(parser, argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"orlicz-lab: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"orlicz-lab: error: {exc}", file=sys.stderr)
        return 2
    try:
        quad = QuadratureConfig(abs_tol=args.quad_tol)
        if args.command == "experiment":
            cfg = _cmd_experiment(args)
            resolved = cfg.to_dict()
        else:
            resolved = {"command": args.command, **_resolved(args)}
        if args.dump_config:
            _emit(_dumps(resolved), args.out if args.command != "experiment" else None)
            return 0
        print("# config: " + json.dumps(jsonable(resolved), sort_keys=True), file=sys.stderr)

        with warnings.catch_warnings():
            warnings.simplefilter("default")
            if args.command == "experiment":
                report = run_experiment(cfg)
                if cfg.output:
                    report.write(cfg.output)
                else:
                    sys.stdout.write(report.to_json() + "\n")
                status = "PASS" if report.passed else "FAIL"
                print(f"# experiment {cfg.experiment}: {status} ({report.wall_clock:.1f} s)", file=sys.stderr)
                return 0 if report.passed else 1
            if args.command == "verify":
                from .verify import run_verify

                res = run_verify()
                _emit(_dumps(res), args.out)
                return 0 if res["pass"] else 1
            if args.command == "sample":
                _emit(_cmd_sample(args, quad), args.out)
                return 0
            handler = {"gibbs": _cmd_gibbs, "thresholds": _cmd_thresholds, "maxent": _cmd_maxent,
                       "thinshell": _cmd_thinshell, "volume": _cmd_volume}[args.command]
            result = handler(args, quad)
            result["config"] = resolved
            _emit(_dumps(result), args.out)
            return 0
    except UsageError as exc:
        print(f"orlicz-lab: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"orlicz-lab: error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"orlicz-lab: numerical error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
