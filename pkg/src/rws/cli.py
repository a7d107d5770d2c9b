"""Command-line front end.

    rws solve   --config run.ini --eps 1e-2
    rws sweep   --config run.ini
    rws build-h --config run.ini
    rws verify  [--config run.ini] [--suite identities]
    rws info    [--config run.ini]

Exit codes: 0 success, 2 bad configuration or input data, 3 solver
non-convergence, 4 verification failure.  RWS_OUT overrides the output
directory from the config.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import (
    ConfigError,
    Diverged,
    MaxIterations,
    NoSignChange,
    NotInRange,
    NotInRangeSpace,
    RwsError,
)
from .forcing import contraction_constants
from .harness import (
    RunConfig,
    build_forcing,
    run_build_h,
    run_solve,
    run_sweep,
    run_verify,
)
from .operators import OperatorWorkspace

_CONVERGENCE_ERRORS = (MaxIterations, Diverged, NoSignChange, NotInRange)

_DEFAULTS_NOTE = """\
config defaults: grid 128x64, truncation L=J=32, kind=theorem1 (k=1,
beta=1, h=sinx), R_ball=5, tol_range=1e-12, max_iter_range=200,
tol_grad=1e-8, max_iter_min=500, n_restarts=0, margin=1e-3,
epsilon list=1e-2, output directory 'runs' (formats csv,json), seed=0,
workers=0 (auto).  Omitted sections and keys keep these values."""


def _load_config(path):
    return RunConfig.from_ini(path) if path else RunConfig()


def _cmd_solve(args):
    cfg = _load_config(args.config)
    report = run_solve(cfg, args.eps)
    print(json.dumps(report.as_dict(), indent=2, sort_keys=True))
    return 0


def _cmd_sweep(args):
    cfg = _load_config(args.config)
    result = run_sweep(cfg)
    print(f"sweep of {len(result.reports)} points -> {result.run_dir}")
    print(f"slope ||u||_Linf vs eps       : {result.slope_u:.4f}")
    print(f"slope ||w||_L2  vs inner eps  : {result.slope_w:.4f}")
    return 0


def _cmd_build_h(args):
    cfg = _load_config(args.config)
    res, run_dir = run_build_h(cfg)
    print(f"H written to {run_dir}")
    print(f"kappa          = {res.kappa:.12f}")
    print(f"c              = {res.c_value:.12f}")
    print(f"boundary max   = {res.boundary_max:.3e}")
    print(f"interior min   = {res.interior_min:.3e}")
    print(f"weak residual  = {res.weak_residual:.3e}")
    return 0


def _cmd_verify(args):
    cfg = _load_config(args.config)
    rows, ok = run_verify(cfg, suite=args.suite)
    width = max(len(r.identity) for r in rows)
    for r in rows:
        line = (
            f"{r.identity:<{width}}  samples={r.samples:<6d} "
            f"margin={r.worst_margin: .3e}  tol={r.tolerance:.1e}  {r.status}"
        )
        if r.note:
            line += f"  ({r.note})"
        print(line)
    print("all checks passed" if ok else "FAILURES present")
    return 0 if ok else 4


def _cmd_info(args):
    cfg = _load_config(args.config)
    ws = OperatorWorkspace(cfg.L, cfg.J, cfg.nt, cfg.nx)
    spec = build_forcing(cfg)
    C0, eps0 = contraction_constants(spec, cfg.R_ball, ws)
    print(f"grid           : {cfg.nt} x {cfg.nx}")
    print(f"truncation     : L = {cfg.L}, J = {cfg.J}")
    print(f"forcing        : {cfg.kind} ({spec.label})")
    print(f"inverse bound  : cbar = {ws.cbar:.6f}")
    print(f"max |lambda|   : {ws.max_abs_lambda:.1f}")
    print(f"ball radius    : R = {cfg.R_ball}")
    print(f"C0 estimate    : {C0:.6e}")
    print(f"eps0 advisory  : {eps0:.6e}")
    print(f"epsilon values : {', '.join(f'{e:g}' for e in cfg.eps_values)}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="rws",
        description="Time-periodic solutions of the forced resonant wave "
        "equation on (0, pi): solves, epsilon sweeps, and invariant checks.",
        epilog=_DEFAULTS_NOTE,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="one solve at a fixed epsilon")
    p.add_argument("--config", help="INI run configuration")
    p.add_argument("--eps", type=float, required=True)
    p.set_defaults(fn=_cmd_solve)

    p = sub.add_parser("sweep", help="solve over the epsilon schedule")
    p.add_argument("--config", help="INI run configuration")
    p.set_defaults(fn=_cmd_sweep)

    p = sub.add_parser("build-h", help="construct the positive profile H")
    p.add_argument("--config", help="INI run configuration")
    p.set_defaults(fn=_cmd_build_h)

    p = sub.add_parser("verify", help="run the invariant suites")
    p.add_argument("--config", help="INI run configuration")
    p.add_argument("--suite", help="restrict to one suite")
    p.set_defaults(fn=_cmd_verify)

    p = sub.add_parser("info", help="print solver constants for the config")
    p.add_argument("--config", help="INI run configuration")
    p.set_defaults(fn=_cmd_info)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NotInRangeSpace as exc:
        # a forcing profile with resonant components is bad input, not a
        # solver failure
        print(f"invalid problem data ({type(exc).__name__}): {exc}",
              file=sys.stderr)
        return 2
    except _CONVERGENCE_ERRORS as exc:
        print(f"solver did not converge: {exc}", file=sys.stderr)
        return 3
    except RwsError as exc:
        # structural problems with the supplied data (bad h, sign
        # mismatches, dimension conflicts) are configuration errors
        print(f"invalid problem data ({type(exc).__name__}): {exc}",
              file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
