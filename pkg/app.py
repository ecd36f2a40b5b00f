"""
PFM experiments - projected Frobenius medians on matrix manifolds
Command-line entry point

Subcommands:
    shape-sim   planar-shape study (complex Bingham, outliers orthogonal to the mode)
    frame-sim   axial-frame study (frame Watson, fixed outlying frame)
    quake       T/B/P axes of moment tensors for one region and its modified datasets
    bench       solver micro-benchmarks

Exit codes: 0 success, 2 configuration or input-file error, 3 runtime failure.
"""

import argparse
import logging
import sys

from components.experiments import run_experiment
from components.moment_tensors import CSV_COLUMNS
from components.report_exporter import archive_report, emit_outputs
from utils.config import get_settings, load_config
from utils.errors import ConfigError, ParseError, PFMError
from utils.validators import KNOWN_FORMATS

logger = logging.getLogger("pfm")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3

SUBCOMMANDS = {
    "shape-sim": ("shape-table", "Planar-shape Monte Carlo study (EMedian, IMean, IMedian, MoM)"),
    "frame-sim": ("frame-table", "Axial-frame Monte Carlo study (frame mean vs frame median)"),
    "quake": ("earthquake", "Moment-tensor T/B/P analysis with bootstrap SEs and ellipses"),
    "bench": ("bench", "Timed micro-benchmarks of the median solver and projections"),
}

QUAKE_EPILOG = f"""\
moment-tensor CSV format (UTF-8, '.' decimal separator, header required):
  {",".join(CSV_COLUMNS)}
  m11..m23 are the six independent entries of the symmetric 3x3 tensor;
  region may be empty. Dataset edits (drop_indices, duplicate_indices) use
  0-based row positions within the selected region, in file order.
"""


def configure_logging(level=None):
    """Configure the root handler at PFM_LOG_LEVEL (or an explicit level)"""
    level = (level or get_settings().log_level).upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        force=True,
    )


def build_parser():
    """Argument parser with one subparser per experiment kind"""
    parser = argparse.ArgumentParser(
        prog="pfm",
        description="Projected Frobenius median experiments",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in SUBCOMMANDS.items():
        sub = subparsers.add_parser(
            name,
            help=help_text,
            description=help_text,
            epilog=QUAKE_EPILOG if name == "quake" else None,
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )
        sub.add_argument("--config", help="JSON scenario config (merged over the built-in preset)")
        sub.add_argument("--seed", type=int, help="64-bit experiment seed")
        sub.add_argument("--replicates", type=int, help="Monte Carlo replicates (0 = dry run)")
        sub.add_argument("--out", help="output directory")
        sub.add_argument(
            "--format",
            dest="formats",
            action="append",
            choices=KNOWN_FORMATS,
            help="output format; repeat for several (default: csv and json)",
        )
        sub.add_argument("--full-scale", action="store_true", default=None, help="use full-scale replicate counts")
        sub.add_argument("--workers", type=int, help="worker processes for replicate loops")
        sub.add_argument("--archive", help="JSON archive of reports to add this report to (created if missing)")
    return parser


def main(argv=None):
    """
    Run one experiment subcommand

    Args:
        argv (list): command-line arguments (defaults to sys.argv[1:])

    Returns:
        int: process exit code
    """
    args = build_parser().parse_args(argv)
    configure_logging()
    kind = SUBCOMMANDS[args.command][0]

    try:
        config = load_config(
            kind,
            args.config,
            seed=args.seed,
            replicates=args.replicates,
            out=args.out,
            formats=args.formats,
            full_scale=args.full_scale,
            workers=args.workers,
        )
    except ConfigError as e:
        for message in e.messages:
            logger.error("config: %s", message)
        return EXIT_CONFIG

    try:
        report = run_experiment(config)
        if report.dry_run:
            print(report.to_frame().to_string(index=False))
        paths = emit_outputs(report, config.output["dir"], config.output["formats"])
        if args.archive:
            paths.append(archive_report(report, args.archive))
    except ParseError as e:
        logger.error("input file: %s", e)
        return EXIT_CONFIG
    except (PFMError, OSError) as e:
        logger.error("%s failed: %s", args.command, e)
        return EXIT_RUNTIME

    if report.failures:
        logger.warning("%d failures recorded in the report ledger", report.n_failed)
    for path in paths:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
