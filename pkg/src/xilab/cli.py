"""Command-line interface.

Subcommands: compute, theory, power, nulldist, biasvar, project, version.
Exit codes: 0 success, 1 usage error, 2 data/config error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import sys

import numpy as np

from . import __version__
from .core import PairedSample, TiePolicy, null_test
from .errors import ConfigError, InvalidInputError, NumericError, XiLabError
from .harness import ExperimentConfig, ExperimentKind, run_experiment
from .models import GaussianDensity, StudentTDensity
from .theory import (
    asymptotic_power,
    local_power_mixture,
    local_power_regression,
    local_power_rotation,
    v0_rotation,
    xi_gaussian_smallrho,
    xi_mixture_exact,
    xi_regression_asymptotic,
    xi_rotation_asymptotic,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on usage errors; the CLI contract wants 1
    def error(self, message):
        raise _UsageError(message)


def _tie_policy(args) -> TiePolicy:
    if args.tie_policy == "reject":
        return TiePolicy.reject()
    if args.seed is None:
        raise InvalidInputError("--tie-policy random requires --seed")
    return TiePolicy.random_break(args.seed)


def _read_xy_csv(path: str) -> PairedSample:
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except FileNotFoundError as exc:
        raise ConfigError(f"input file not found: {path}") from exc
    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"x", "y"} <= set(reader.fieldnames):
            raise ConfigError(f"{path}: expected a headered CSV with columns x,y")
        xs, ys = [], []
        for line_no, row in enumerate(reader, start=2):
            try:
                xs.append(float(row["x"]))
                ys.append(float(row["y"]))
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{path}:{line_no}: non-numeric x/y value") from exc
    if not xs:
        raise ConfigError(f"{path}: no data rows")
    return PairedSample(np.array(xs), np.array(ys))


def _cmd_compute(args) -> int:
    sample = _read_xy_csv(args.csv)
    result = null_test(sample, args.alpha, _tie_policy(args))
    print(f"n={sample.n}")
    print(f"xi={result.xi:.6f}")
    print(f"z={result.z:.6f}")
    print(f"p_value={result.p_value:.6g}")
    print(f"reject={'true' if result.reject else 'false'}")
    return EXIT_OK


def _cmd_theory(args) -> int:
    if args.family == "gaussian":
        if args.rho is None:
            raise _UsageError("--family gaussian requires --rho")
        est = xi_gaussian_smallrho(args.rho)
    elif args.family == "mixture":
        if args.r is None or args.xi_g is None:
            raise _UsageError("--family mixture requires --r and --xi-g")
        est = xi_mixture_exact(args.r, args.xi_g)
    elif args.family == "regression":
        if args.sigma is None or args.var_g is None:
            raise _UsageError("--family regression requires --sigma and --var-g")
        est = xi_regression_asymptotic(args.sigma, args.var_g)
    else:
        if args.delta is None:
            raise _UsageError("--family rotation requires --delta")
        if args.components == "gaussian":
            density = GaussianDensity()
        else:
            density = StudentTDensity(args.df)
        v0 = v0_rotation(density, density)
        print(f"v0={v0:.6g}")
        est = xi_rotation_asymptotic(args.delta, v0)
    print(f"xi={est.value:.6g}")
    print(f"method={est.method.value}")
    if est.note:
        print(f"note={est.note}")
    if args.n is not None:
        print(f"power={asymptotic_power(args.n, max(est.value, 0.0), args.alpha):.6g}")
    if args.c0 is not None:
        if args.family == "mixture":
            lp = local_power_mixture(args.c0, args.xi_g, args.alpha)
        elif args.family == "regression":
            lp = local_power_regression(args.c0, args.var_g, args.alpha)
        elif args.family == "rotation":
            lp = local_power_rotation(args.c0, v0, args.alpha)
        else:
            raise _UsageError("--c0 local power is defined for mixture/regression/rotation")
        print(f"local_power={lp:.6g}")
    return EXIT_OK


def _cmd_experiment(kind: ExperimentKind, args) -> int:
    config = ExperimentConfig.from_json(args.config)
    if config.kind is not kind:
        raise ConfigError(
            f"config kind {config.kind.value!r} does not match subcommand {kind.value!r}"
        )
    if args.out is not None:
        config = ExperimentConfig(**{**config.__dict__, "output_path": args.out})
    rows = run_experiment(config)
    dest = config.output_path or "(stdout only)"
    print(f"{kind.value}: {len(rows)} rows -> {dest}")
    if not config.output_path:
        for row in rows:
            print(row)
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="xilab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_compute = sub.add_parser("compute", help="xi_n and the independence test on a CSV")
    p_compute.add_argument("csv", help="headered CSV with columns x,y")
    p_compute.add_argument("--alpha", type=float, default=0.05)
    p_compute.add_argument("--tie-policy", choices=["reject", "random"], default="reject")
    p_compute.add_argument("--seed", type=int, default=None,
                           help="seed for --tie-policy random")

    p_theory = sub.add_parser("theory", help="theoretical xi and power values")
    p_theory.add_argument("--family", required=True,
                          choices=["gaussian", "mixture", "regression", "rotation"])
    p_theory.add_argument("--rho", type=float, default=None)
    p_theory.add_argument("--r", type=float, default=None)
    p_theory.add_argument("--xi-g", dest="xi_g", type=float, default=None)
    p_theory.add_argument("--sigma", type=float, default=None)
    p_theory.add_argument("--var-g", dest="var_g", type=float, default=None)
    p_theory.add_argument("--delta", type=float, default=None)
    p_theory.add_argument("--components", choices=["gaussian", "student_t"],
                          default="gaussian")
    p_theory.add_argument("--df", type=float, default=12.0)
    p_theory.add_argument("--n", type=int, default=None,
                          help="also print asymptotic power at this sample size")
    p_theory.add_argument("--c0", type=float, default=None,
                          help="also print the local power at boundary constant c0")
    p_theory.add_argument("--alpha", type=float, default=0.05)

    for kind in ExperimentKind:
        p = sub.add_parser(kind.value, help=f"run a {kind.value} experiment from JSON config")
        p.add_argument("--config", required=True)
        p.add_argument("--out", default=None, help="override the config's output_path")

    sub.add_parser("version", help="print the package version")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "version":
            print(f"xilab {__version__}")
            return EXIT_OK
        if args.command == "compute":
            return _cmd_compute(args)
        if args.command == "theory":
            return _cmd_theory(args)
        return _cmd_experiment(ExperimentKind(args.command), args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, InvalidInputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except XiLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
