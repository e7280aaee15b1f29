"""Command-line interface: ``sqzest {protocol,sweep,validate,sample,moments}``.

Exit codes: 0 success, 1 validation failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__
from .channel import ChannelParams
from .estimation import FIG2_EXPONENTS, log_grid, protocol_report, records_to_csv, sweep
from .moments import SqueezingConfig, oat_table, output_moments, roat_moments
from . import _arith

OUTPUT_DIR_ENV = "SQZEST_OUTPUT_DIR"
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
DEFAULT_P_LIST = "inf:-2/3:-3/4:-5/6"


class UsageError(ValueError):
    pass


def parse_exponent(text: str) -> float:
    t = text.strip().lower()
    if t in ("inf", "-inf"):
        return -math.inf
    try:
        return float(Fraction(t))
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"cannot parse exponent {text!r}") from None


def parse_p_list(text: str) -> list[float]:
    items = [s for s in text.split(":") if s.strip()]
    if not items:
        raise UsageError("empty p list")
    ps = [parse_exponent(s) for s in items]
    for p in ps:
        if p > 0:
            raise UsageError(f"p must be <= 0, got {p}")
    return ps


def _config(args) -> SqueezingConfig:
    if args.p is not None:
        return SqueezingConfig.from_exponent(args.n, parse_exponent(args.p))
    return SqueezingConfig(args.n, args.chi if args.chi is not None else 0.0)


def _emit(text: str, args, default_name: str) -> None:
    out = args.output
    if out is None and os.environ.get(OUTPUT_DIR_ENV):
        out = str(Path(os.environ[OUTPUT_DIR_ENV]) / default_name)
    if out is None or out == "-":
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
        return
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text if text.endswith("\n") else text + "\n")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False)


# -- commands -----------------------------------------------------------------

def cmd_protocol(args) -> int:
    rep = protocol_report(_config(args), ChannelParams(args.eta), args.precision)
    _emit(_dump(rep.to_json()), args, "protocol.json")
    return EXIT_OK


def cmd_sweep(args) -> int:
    ps = parse_p_list(args.p)
    grid = log_grid(args.n_min, args.n_max, args.points)
    records = sweep(args.eta, ps, grid, args.precision)
    if args.format == "csv":
        text = records_to_csv(records)
    else:
        text = _dump({
            "version": __version__,
            "eta": args.eta,
            "records": [{"n": r.n, "p": "inf" if r.p == -math.inf else r.p, "chi": r.chi, "eta": r.eta,
                         "norm_var_eta": r.normalized_eta_var, "norm_var_phi": r.normalized_phi_var,
                         "flags": list(r.flags)} for r in records],
        })
    _emit(text, args, f"sweep.{args.format}")
    return EXIT_OK


def cmd_validate(args) -> int:
    from .validation import run_suite

    suite = run_suite(args.n_max, args.tol)
    _emit(_dump(suite.to_json()), args, "validate.json")
    if not suite.passed:
        print("validation failed: " + ", ".join(suite.failed), file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_sample(args) -> int:
    from .oracle import mc_experiment

    res = mc_experiment(args.n, args.chi, ChannelParams(args.eta, args.phi), args.shots, args.reps,
                        args.seed, path=args.path)
    data = {"version": __version__, **res.to_json()}
    _emit(json.dumps(data, indent=2), args, "sample.json")
    return EXIT_OK


def cmd_moments(args) -> int:
    config = _config(args)
    if args.frame == "OAT":
        table = oat_table(config, _arith.select(args.precision, config.n))
    else:
        table = roat_moments(config, precision=args.precision)
        if args.frame == "OUTPUT":
            table = output_moments(table, ChannelParams(args.eta, args.phi))
    _emit(_dump({"version": __version__, **table.to_json()}), args, "moments.json")
    return EXIT_OK


# -- parser -------------------------------------------------------------------

def _add_squeezing(sp, n_required=True):
    sp.add_argument("--n", type=int, required=n_required, help="number of qubits")
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--chi", type=float, help="twisting angle")
    g.add_argument("--p", help="scaling exponent, chi = n**p ('inf' for chi = 0; fractions like -5/6 allowed)")


def _add_common(sp):
    sp.add_argument("--output", "-o", help=f"output file ('-' for stdout; default ${OUTPUT_DIR_ENV} or stdout)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sqzest", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"sqzest {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("protocol", help="estimator covariance, bounds and normalized variances")
    _add_squeezing(sp)
    sp.add_argument("--eta", type=float, required=True)
    sp.add_argument("--precision", choices=("auto", "double", "extended"), default="auto")
    _add_common(sp)
    sp.set_defaults(func=cmd_protocol)

    sp = sub.add_parser("sweep", help="normalized variances on a log-spaced n grid")
    sp.add_argument("--eta", type=float, default=0.8)
    sp.add_argument("--p", default=DEFAULT_P_LIST, help="colon-separated exponents; 'inf' means chi = 0")
    sp.add_argument("--n-min", type=float, default=1e2)
    sp.add_argument("--n-max", type=float, default=1e8)
    sp.add_argument("--points", type=int, default=61)
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.add_argument("--precision", choices=("auto", "double", "extended"), default="auto")
    _add_common(sp)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("validate", help="closed forms against the dense oracle")
    sp.add_argument("--n-max", type=int, default=8)
    sp.add_argument("--tol", type=float, default=1e-10)
    _add_common(sp)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("sample", help="Monte-Carlo estimator experiment")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--chi", type=float, required=True)
    sp.add_argument("--eta", type=float, required=True)
    sp.add_argument("--phi", type=float, default=0.0)
    sp.add_argument("--shots", type=float, default=1e5)
    sp.add_argument("--reps", type=int, default=200)
    sp.add_argument("--seed", type=int, default=12345)
    sp.add_argument("--path", choices=("auto", "density", "trajectory"), default="auto")
    _add_common(sp)
    sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("moments", help="dump a moment table")
    _add_squeezing(sp)
    sp.add_argument("--frame", choices=("OAT", "ROAT", "OUTPUT"), default="ROAT")
    sp.add_argument("--eta", type=float, default=1.0)
    sp.add_argument("--phi", type=float, default=0.0)
    sp.add_argument("--precision", choices=("auto", "double", "extended"), default="auto")
    _add_common(sp)
    sp.set_defaults(func=cmd_moments)
    return ap


def _check_args(args) -> None:
    """Range checks that must pass before any work starts."""
    def need(cond, msg):
        if not cond:
            raise UsageError(msg)

    if getattr(args, "eta", None) is not None:
        need(0.0 <= args.eta <= 1.0, "--eta must lie in [0, 1]")
    if getattr(args, "chi", None) is not None:
        need(0.0 <= args.chi < math.pi / 2, "--chi must lie in [0, pi/2)")
    if args.command in ("protocol", "moments"):
        need(args.n >= 2, "--n must be >= 2")
        if args.p is not None:
            need(parse_exponent(args.p) <= 0, "--p must be <= 0")
    if args.command == "protocol":
        need(args.eta > 0.0, "--eta 0 leaves the phase unidentifiable")
    if args.command == "sweep":
        parse_p_list(args.p)
        need(0.0 < args.eta <= 1.0, "--eta must lie in (0, 1]")
        need(2 <= args.n_min <= args.n_max, "need 2 <= --n-min <= --n-max")
        need(args.points >= 1, "--points must be >= 1")
    if args.command == "validate":
        need(4 <= args.n_max <= 12, "--n-max must lie in 4..12")
        need(args.tol > 0, "--tol must be positive")
    if args.command == "sample":
        need(2 <= args.n <= 16, "--n must lie in 2..16")
        need(args.path != "density" or args.n <= 12, "density path supports n <= 12")
        need(args.shots >= 1 and float(args.shots).is_integer(), "--shots must be a positive integer")
        args.shots = int(args.shots)
        need(args.reps >= 2, "--reps must be >= 2")
        need(args.seed >= 0, "--seed must be non-negative")
        need(args.eta > 0.0, "--eta 0 leaves the phase unidentifiable")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _check_args(args)
    except (UsageError, ValueError) as exc:
        parser.error(str(exc))
    try:
        return args.func(args)
    except (UsageError, ValueError) as exc:
        print(f"sqzest: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
