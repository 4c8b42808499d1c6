"""Command-line entry point.

Exit codes: 0 on success, 2 when an invariant or acceptance check fails,
1 on a configuration error.
"""

import argparse
import sys

from .harness import ConfigError, load_config, run

COMMANDS = {
    "simulate": "simulate",
    "averaging-sweep": "averaging_sweep",
    "stationary": "stationary_measure",
    "flow": "flow_vs_lambda",
    "conductivity": "conductivity",
    "greenkubo": "green_kubo",
    "fourier": "fourier",
    "validate": "validate",
}

HELP = {
    "simulate": "integrate trajectories and dump one as CSV",
    "averaging-sweep": "full system versus effective equation over an eps grid",
    "stationary": "stationary moments over an eps grid",
    "flow": "stationary flow versus lambda",
    "conductivity": "closed-form and OU-correlation conductivity",
    "greenkubo": "Green-Kubo correlation integrals",
    "fourier": "scaled flows through a linear temperature profile",
    "validate": "fast invariant suite",
}


def build_parser():
    parser = argparse.ArgumentParser(prog="resonant-transport", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=HELP[name])
        p.add_argument("--config", help="JSON experiment config (defaults are built in)")
        p.add_argument("--seed", help="unsigned 64-bit seed (overrides config and environment)")
        p.add_argument("--out", help="output directory (overrides config and environment)")
        p.add_argument("--quiet", action="store_true", help="do not print the check summary")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(COMMANDS[args.command], args.config, args.seed, args.out)
        report = run(cfg)
        paths = report.write(cfg.output_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    if not args.quiet:
        for c in report.checks:
            print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['name']}  {c['value']}")
        for p in paths:
            print(f"wrote {p}")
    return 0 if report.passed else 2


if __name__ == "__main__":
    sys.exit(main())
