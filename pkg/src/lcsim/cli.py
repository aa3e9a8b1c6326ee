"""Command-line entry point.

    sim run --preset exp1_pos [--n 64] [--out DIR] [--cfl warn|fail]
            [--config FILE] [--set key=value]... [--snapshots t1,t2,...]
    sim verify [--check NAME] [--n N] [--seed S] [--dt-scale X]

Exit codes: 0 success, 2 configuration/validation failure, 3 step failure
after the single dt-halving retry, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .fem import EllipticityError
from .runner import (
    ConfigError,
    config_from_sources,
    parse_config_file,
    parse_override,
    run_to_directory,
)
from .stepper import InvalidParamsError, StepFailureError
from .verify import CHECKS, run_checks

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_STEP_FAILURE = 3
EXIT_IO = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sim", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a simulation preset and write outputs")
    run_p.add_argument("--preset", help="exp1_pos | exp1_neg | exp2_lowdamp | exp2_highdamp")
    run_p.add_argument("--n", type=int, help="cells per side (default 64)")
    run_p.add_argument("--out", help="output directory (default $SIM_OUT_DIR or ./sim_out)")
    run_p.add_argument("--cfl", choices=("warn", "fail"), help="CFL enforcement mode (default warn)")
    run_p.add_argument("--config", help="flat key=value config file; flags override it")
    run_p.add_argument("--seed", type=int, help="seed recorded in the manifest")
    run_p.add_argument("--snapshots", help="comma-separated snapshot times (default: preset schedule)")
    run_p.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a model/scheme parameter (repeatable)",
    )

    ver_p = sub.add_parser("verify", help="run structural checks and print a JSON report")
    ver_p.add_argument("--check", choices=sorted(CHECKS), help="run a single check")
    ver_p.add_argument("--n", type=int, default=16, help="grid size for the checks (default 16)")
    ver_p.add_argument("--seed", type=int, default=0)
    ver_p.add_argument(
        "--dt-scale",
        type=float,
        default=1.0,
        help="scale the contraction check's time step (e.g. 10 to violate the bound)",
    )
    return parser


def _cmd_run(args: argparse.Namespace) -> int:
    file_values: dict = {}
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        file_values = parse_config_file(path)
    overrides = dict(parse_override(item) for item in args.overrides)
    cli_values = {
        "preset": args.preset,
        "n": args.n,
        "out": args.out,
        "cfl": args.cfl,
        "seed": args.seed,
        "snapshot_times": args.snapshots,
        "overrides": overrides or None,
    }
    config = config_from_sources(file_values, cli_values)
    result, report = run_to_directory(config, warn=lambda msg: print(msg, file=sys.stderr))
    print(
        f"completed {len(result.records)} steps to t={result.state.t:.6g} "
        f"(dt={result.params.dt:.6g}{', halved once' if result.dt_halved else ''}); "
        f"outputs in {config.out}"
    )
    return EXIT_OK


def _cmd_verify(args: argparse.Namespace) -> int:
    names = [args.check] if args.check else sorted(CHECKS)
    report = run_checks(names, n=args.n, seed=args.seed, dt_scale=args.dt_scale)
    print(json.dumps(report, indent=2))
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_verify(args)
    except (ConfigError, InvalidParamsError, EllipticityError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StepFailureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STEP_FAILURE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
