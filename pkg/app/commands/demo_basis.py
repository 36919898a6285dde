"""`demo-basis`: the law of f_n(pole) depends on the basis for non-Gaussian coefficients"""

import argparse

from app.commands.common import config_from_args, finish
from app.services.experiments import basis_dependence_demo

NAME = "demo-basis"


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser(NAME, parents=parents, help="Pole-value supports in two orthonormal bases")
    parser.add_argument("--n", type=int, help="Degree")
    parser.add_argument("--trials", type=int, help="Rademacher draws per basis")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    config = config_from_args(args, NAME)
    report = basis_dependence_demo(config.n, config.trials, config.seed)
    print(f"standard basis support: {report.standard_support}")
    print(f"rotated basis support:  {report.rotated_support}")
    _, code = finish(config, [], {NAME: report.summary_entry()})
    return code
