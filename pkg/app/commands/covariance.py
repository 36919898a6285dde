"""`covariance`: patch covariances against the Bessel kernel"""

import argparse
from pathlib import Path

from app.commands.common import coefficient_law, config_from_args, finish, int_list, threads_of
from app.services.experiments import SummaryEntry, covariance_check, covariance_trend_check, default_pairs, make_check
from app.services.plots import plot_covariance

NAME = "covariance"


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser(NAME, parents=parents, help="Empirical patch covariance vs J0")
    parser.add_argument("--degrees", type=int_list, help="Comma-separated degrees")
    parser.add_argument("--R", type=float, help="Patch radius in wavelength units")
    parser.add_argument("--dist", help="Coefficient law")
    parser.add_argument("--p", type=float, help="Atom probability of the two-point-asymmetric law")
    parser.add_argument("--trials", type=int, help="Realizations per degree")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    config = config_from_args(args, NAME)
    dist = coefficient_law(config)
    pairs = default_pairs(config.R)
    reports = [
        covariance_check(n, config.R, dist, pairs, config.trials, config.seed, threads_of(config))
        for n in sorted(config.degrees)
    ]
    top = reports[-1]
    checks = [make_check("top_degree_within_3se", top.within_3se >= 0.9, top.within_3se, 0.9)]
    if len(reports) >= 2:
        checks.insert(0, covariance_trend_check(reports))
    entry = SummaryEntry(
        estimate=top.max_deviation,
        se=top.max_deviation_se,
        n_trials=config.trials * len(reports),
        checks=checks,
        details={"reports": [report.model_dump() for report in reports]},
    )
    _, code = finish(config, [], {NAME: entry})
    plot_covariance(reports, Path(config.out) / "covariance.svg", config.config_hash)
    return code
