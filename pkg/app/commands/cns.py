"""`cns`: Monte Carlo estimate of the nodal count constant"""

import argparse
import logging
from pathlib import Path

from app.commands.common import coefficient_law, config_from_args, finish, float_list, int_list, threads_of
from app.services.experiments import run_cns_trials, run_planar_trials, summarize_cns
from app.services.plots import plot_cns

logger = logging.getLogger(__name__)

NAME = "cns"


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser(NAME, parents=parents, help="Estimate E[N(f_n)] / n^2 over a degree ladder")
    parser.add_argument("--degrees", type=int_list, help="Comma-separated degrees, e.g. 20,40,60")
    parser.add_argument("--dist", help="Coefficient law")
    parser.add_argument("--p", type=float, help="Atom probability of the two-point-asymmetric law")
    parser.add_argument("--trials", type=int, help="Trials per degree")
    parser.add_argument("--q", type=int, help="Grid oversample")
    parser.add_argument("--planar", action="store_true", default=None, help="Also sample the planar limit field")
    parser.add_argument("--radii", type=float_list, help="Disk radii of the planar campaign")
    parser.add_argument("--M", type=int, help="Plane waves per planar sample")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    config = config_from_args(args, NAME)
    dist = coefficient_law(config)
    records = run_cns_trials(config.degrees, dist, config.trials, config.seed, config.q,
                             threads_of(config), config.config_hash)
    if config.planar:
        records += run_planar_trials(config.radii, config.M, config.trials, config.seed, config.q,
                                     threads_of(config), config.config_hash)
    summary, code = finish(config, records)
    logger.info(f"cns: c_hat = {summary['cns']['estimate']:.5f} (SE {summary['cns']['se']:.5f})")
    plot_cns(summarize_cns([r for r in records if r.experiment == NAME]), Path(config.out) / "cns.svg",
             config.config_hash)
    return code
