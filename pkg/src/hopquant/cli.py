"""Command-line entry point.

Exit codes: 0 all checks pass, 1 runtime error, 2 validation failure,
3 config parse error. Reports land in --out as report.json plus CSVs.
"""

import argparse
import os
import sys

from .config import ExperimentConfig
from .errors import ConfigError, HopquantError
from .experiments import list_experiments, run_experiment

EXIT_PASS = 0
EXIT_RUNTIME = 1
EXIT_VALIDATION = 2
EXIT_PARSE = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_RUNTIME, f"{self.prog}: error: {message}\n")


def _add_common(parser):
    parser.add_argument("config", help="path to a sectioned key=value config")
    parser.add_argument("--out", default="hopquant-out",
                        help="directory for report.json and CSV tables")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the [run] seed")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads for parallel studies")


def build_parser():
    parser = _Parser(prog="hopquant",
                     description="unitary hopping dynamics laboratory")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the experiment named in [run]")
    _add_common(run)

    sub.add_parser("list", help="list bundled experiments")

    particle = sub.add_parser("particle", help="single-particle studies")
    psub = particle.add_subparsers(dest="subcommand", required=True)
    for name in ("validate", "extract", "evolve", "converge"):
        _add_common(psub.add_parser(name))

    gauge = sub.add_parser("gauge", help="link-field studies")
    gsub = gauge.add_subparsers(dest="subcommand", required=True)
    for name in ("build", "symcheck", "spectrum", "compare-ks", "constants"):
        p = gsub.add_parser(name)
        _add_common(p)
        if name == "spectrum":
            p.add_argument("--count", type=int, default=None,
                           help="number of low eigenvalues")
    return parser


def _experiment_name(args, cfg):
    if args.command == "run":
        return cfg.getstr("run", "experiment")
    return f"{args.command}-{args.subcommand}"


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "list":
        for name, doc in list_experiments():
            print(f"{name:20s} {doc}")
        return EXIT_PASS

    tol = None
    env_tol = os.environ.get("HOPQUANT_TOL")
    if env_tol is not None:
        try:
            tol = float(env_tol)
        except ValueError:
            print(f"hopquant: HOPQUANT_TOL={env_tol!r} is not a number",
                  file=sys.stderr)
            return EXIT_RUNTIME

    try:
        cfg = ExperimentConfig.from_file(args.config)
        if getattr(args, "count", None) is not None:
            cfg.sections.setdefault("spectrum", {})["count"] = str(args.count)
            cfg.locations.setdefault("spectrum", {})
        name = _experiment_name(args, cfg)
        report = run_experiment(name, cfg, seed=args.seed, tol=tol,
                                threads=args.threads)
    except ConfigError as exc:
        print(f"hopquant: config error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except FileNotFoundError as exc:
        print(f"hopquant: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (HopquantError, ValueError, MemoryError) as exc:
        print(f"hopquant: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    paths = report.write(args.out)
    status = "PASS" if report.passed else "FAIL"
    for check in report.checks:
        mark = "ok" if check.passed else "FAIL"
        print(f"[{mark}] {check.name}: value={check.value} tol={check.tolerance}")
    print(f"{status} {report.experiment} -> {paths[0]}")
    return EXIT_PASS if report.passed else EXIT_VALIDATION


def cli_entry():
    raise SystemExit(main())


if __name__ == "__main__":
    cli_entry()
