"""Command-line application"""

import argparse
import logging
import sys
from typing import List, Optional

from app import __version__
from app.commands import COMMANDS
from app.commands.common import shared_parser
from app.utils.config import settings
from app.utils.errors import NodalCensusError, UnknownExperimentError
from app.utils.logger import setup_logger

logger = logging.getLogger(__name__)


class _Parser(argparse.ArgumentParser):
    """argparse that raises instead of exiting on an unknown subcommand"""

    def error(self, message: str):
        if message.startswith("argument command: invalid choice"):
            raise UnknownExperimentError(message)
        super().error(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nodal-census", description=f"{settings.APP_NAME}: nodal domains of random spherical harmonics")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", help="Override LOG_LEVEL")
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="command")
    parents = [shared_parser()]
    for module in COMMANDS:
        module.register(subparsers, parents)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Run one subcommand and return the process exit code"""
    try:
        args = build_parser().parse_args(argv)
        setup_logger("app", log_level=args.log_level)
        logger.info(f"Starting {settings.APP_NAME} v{settings.APP_VERSION}: {args.command}")
        return args.handler(args)
    except NodalCensusError as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
