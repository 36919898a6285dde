"""`rwm`: planar random wave model campaign"""

import argparse
import logging
import math

import numpy as np

from app.commands.common import config_from_args, finish, float_list, threads_of
from app.services.experiments import SummaryEntry, make_check, run_planar_trials
from app.services.rwm import empirical_covariance, origin_values
from app.services.specfn import J0_FIRST_ZERO, bessel_j0
from app.utils import stats
from app.utils.config import RunConfig

logger = logging.getLogger(__name__)

NAME = "rwm"

# Separation vectors for the covariance check
SEPARATIONS = ((0.0, 0.0), (1.0, 0.0), (J0_FIRST_ZERO, 0.0), (0.0, 3.0), (3.0, 4.0), (5.0, 0.0))

# Index pairs of equal-length separations along different directions
ISOTROPY_PAIRS = ((4, 5),)

# Asymptotic 99% critical value of the one-sample KS distance, times sqrt(N)
KS_CRITICAL_99 = 1.63


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser(NAME, parents=parents, help="Planar nodal density and RWM checks")
    parser.add_argument("--radii", type=float_list, help="Comma-separated disk radii")
    parser.add_argument("--M", type=int, help="Plane waves per sample")
    parser.add_argument("--trials", type=int, help="Samples per radius")
    parser.add_argument("--q", type=int, help="Grid oversample")
    parser.add_argument("--samples", type=int, help="Samples for the covariance and Gaussianity checks")
    parser.set_defaults(handler=run)


def covariance_entry(config: RunConfig) -> SummaryEntry:
    means, ses = empirical_covariance(SEPARATIONS, config.samples, config.M, config.seed)
    targets = bessel_j0(np.hypot(*np.asarray(SEPARATIONS).T))
    z = np.abs(means - targets) / ses
    isotropy = max(abs(means[a] - means[b]) / math.hypot(ses[a], ses[b]) for a, b in ISOTROPY_PAIRS)
    return SummaryEntry(
        estimate=float(np.max(np.abs(means - targets))),
        n_trials=config.samples,
        checks=[
            make_check("covariance_within_4se", bool(np.all(z < 4.0)), float(z.max()), 4.0),
            make_check("covariance_isotropic", isotropy < 3.0, float(isotropy), 3.0),
        ],
        details={"separations": [list(d) for d in SEPARATIONS], "empirical": means.tolist(),
                 "ses": ses.tolist(), "targets": targets.tolist()},
    )


def gaussianity_entry(config: RunConfig) -> SummaryEntry:
    ks = stats.ks_normal(origin_values(config.samples, config.M, config.seed))
    threshold = KS_CRITICAL_99 / math.sqrt(config.samples)
    return SummaryEntry(
        estimate=ks,
        n_trials=config.samples,
        checks=[make_check("origin_value_normal", ks < threshold, ks, threshold)],
    )


def run(args: argparse.Namespace) -> int:
    config = config_from_args(args, NAME)
    records = run_planar_trials(config.radii, config.M, config.trials, config.seed, config.q,
                                threads_of(config), config.config_hash)
    entries = {"rwm-covariance": covariance_entry(config), "rwm-gaussianity": gaussianity_entry(config)}
    summary, code = finish(config, records, entries)
    logger.info(f"rwm: planar density {summary[NAME]['estimate']:.5f}")
    return code
