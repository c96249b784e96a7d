"""Command-line checker for finite sites, antecedent topologies and their points"""
import argparse
import logging
import sys
from typing import List, Optional

from overtopos_sites.config.config import DEFAULT_BOUND, LOG_LEVEL, WITNESS_LIMIT
from overtopos_sites.src.documents.commands import COMMANDS, RunOptions, run

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="overtopos-sites",
        description="Check finite sites, antecedent topologies and points against workspace documents.",
    )
    parser.add_argument("command", choices=sorted(COMMANDS), help="Check to run")
    parser.add_argument("paths", nargs="+", help="Workspace documents (JSON)")
    parser.add_argument("--bound", type=int, default=DEFAULT_BOUND,
                        help=f"Carrier bound for enumerations (default {DEFAULT_BOUND})")
    parser.add_argument("--report", default=None, help="Also write a machine-readable report to this path")
    parser.add_argument("--witness-limit", type=int, default=WITNESS_LIMIT,
                        help=f"Witnesses listed per finding (default {WITNESS_LIMIT})")
    parser.add_argument("--strict", action="store_true", help="Treat warnings as failures")
    parser.add_argument("--name", default=None, help="Only check the entry with this name")
    parser.add_argument("--log-level", default=LOG_LEVEL, help=f"Logging level on stderr (default {LOG_LEVEL})")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)

    # Set up logging; stdout is reserved for the report
    logging.basicConfig(
        level=getattr(logging, args.log_level.upper(), logging.WARNING),
        format='%(asctime)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
    )
    if args.bound < 0 or args.witness_limit < 0:
        logger.error("--bound and --witness-limit must be non-negative")
        return 2

    options = RunOptions(args.bound, args.witness_limit, args.strict, args.name, args.report)
    logger.info(f"Running {args.command} on {len(args.paths)} documents")
    status, text = run(args.command, args.paths, options)
    sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
