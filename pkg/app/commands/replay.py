"""`replay`: recompute the summary of a stored run"""

import argparse
import logging

from app.services.records import all_checks_pass, dump_json, replay
from app.utils.errors import CHECK_FAILED_EXIT_CODE

logger = logging.getLogger(__name__)

NAME = "replay"


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser(NAME, parents=parents, help="Re-derive summary.json from stored trials")
    parser.add_argument("path", help="Run directory")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    summary, identical = replay(args.path)
    print(dump_json(summary), end="")
    if not identical:
        logger.warning(f"replayed summary of {args.path} differs from the stored summary.json")
    if args.check and not (identical and all_checks_pass(summary)):
        return CHECK_FAILED_EXIT_CODE
    return 0
