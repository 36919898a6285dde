"""`clt`: KS distance of pointwise values to the standard normal"""

import argparse
from pathlib import Path

from app.commands.common import coefficient_law, config_from_args, finish, int_list
from app.services.experiments import run_clt
from app.services.plots import plot_ks

NAME = "clt"


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser(NAME, parents=parents, help="Pointwise central limit diagnostic")
    parser.add_argument("--degrees", type=int_list, help="Comma-separated degrees")
    parser.add_argument("--dist", help="Coefficient law")
    parser.add_argument("--p", type=float, help="Atom probability of the two-point-asymmetric law")
    parser.add_argument("--samples", type=int, help="Samples per degree")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    config = config_from_args(args, NAME)
    report = run_clt(config.degrees, coefficient_law(config), config.samples, config.seed)
    _, code = finish(config, [], {NAME: report.summary_entry()})
    plot_ks(report, Path(config.out) / "clt.svg", config.config_hash)
    return code
