"""`universality`: compare mean count / n^2 between two coefficient laws"""

import argparse
import logging

from app.commands.common import coefficient_law, config_from_args, finish, threads_of
from app.services.experiments import run_universality_trials

logger = logging.getLogger(__name__)

NAME = "universality"


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser(NAME, parents=parents, help="Two-law comparison at one degree")
    parser.add_argument("--n", type=int, help="Degree")
    parser.add_argument("--dist-a", dest="dist_a", help="First coefficient law")
    parser.add_argument("--dist-b", dest="dist_b", help="Second coefficient law")
    parser.add_argument("--p", type=float, help="Atom probability of the two-point-asymmetric law")
    parser.add_argument("--trials", type=int, help="Trials per arm")
    parser.add_argument("--q", type=int, help="Grid oversample")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    config = config_from_args(args, NAME)
    records = run_universality_trials(
        coefficient_law(config, config.dist_a),
        coefficient_law(config, config.dist_b),
        config.n,
        config.trials,
        config.seed,
        config.q,
        threads_of(config),
        config.config_hash,
    )
    summary, code = finish(config, records)
    entry = summary[NAME]
    logger.info(f"universality: difference {entry['estimate']:.5f}, CI [{entry['ci_low']:.5f}, {entry['ci_high']:.5f}]")
    return code
