"""Command line: ``nls-ground <scenario> --config PATH [--out DIR] ...``.

Exit codes: 0 success, 2 parse or configuration error, 3 assumption audit
failure, 4 solver non-convergence or numerical failure, 5 I/O failure.

"""

import argparse
import dataclasses
import logging
import sys

from . import __version__
from .config import SCENARIOS, ConfigError, load_config
from .experiments import run_scenario
from .utils import resolve_threads

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_AUDIT = 3
EXIT_NONCONVERGENCE = 4
EXIT_IO = 5

STATUS_CODES = {
    "ok": EXIT_OK,
    "audit": EXIT_AUDIT,
    "nonconvergence": EXIT_NONCONVERGENCE,
}

DEFAULT_OUT = "nls-ground-out"


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--config", required=True, help="experiment configuration (JSON)"
    )
    common.add_argument("--out", help=f"output directory (default {DEFAULT_OUT})")
    common.add_argument("--seed", type=int, help="override the master seed")
    common.add_argument(
        "--threads",
        type=int,
        help="worker threads (default: $NLS_GROUND_THREADS, then the config)",
    )
    common.add_argument(
        "--force",
        action="store_true",
        help="run even if the assumption audit fails",
    )
    common.add_argument(
        "-v", "--verbose", action="count", default=0, help="more logging"
    )

    parser = argparse.ArgumentParser(
        prog="nls-ground",
        description="Ground states of coupled NLS systems under mass bounds.",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    commands = parser.add_subparsers(dest="command", required=True)
    for scenario in SCENARIOS:
        commands.add_parser(scenario, parents=[common])
    return parser


def _configure_logging(verbosity):
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity > 1:
        level = logging.DEBUG
    logging.basicConfig(
        level=level, format="%(asctime)s %(name)s %(levelname)s %(message)s"
    )


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as error:
        return EXIT_PARSE if error.code else EXIT_OK
    _configure_logging(args.verbose)

    try:
        experiment = load_config(args.config)
        experiment = dataclasses.replace(experiment, scenario=args.command)
        if args.seed is not None:
            experiment = experiment.with_seed(args.seed)
        threads = resolve_threads(args.threads, experiment.solver.threads)
        experiment = experiment.with_threads(threads)
    except (ConfigError, ValueError) as error:
        logger.error("configuration error: %s", error)
        return EXIT_PARSE

    out = args.out or experiment.output or DEFAULT_OUT
    try:
        result = run_scenario(experiment, out, force=args.force)
    except OSError as error:
        logger.error("I/O failure: %s", error)
        return EXIT_IO
    except (ArithmeticError, RuntimeError, ValueError) as error:
        logger.error("%s failed: %s", args.command, error)
        return EXIT_NONCONVERGENCE

    print(result.summary)
    if result.status == "audit":
        logger.error("assumption audit failed; rerun with --force to proceed")
    return STATUS_CODES[result.status]


if __name__ == "__main__":
    sys.exit(main())
