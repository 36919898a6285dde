"""`diagnostics`: inequality and geometry checks selected with --which"""

import argparse
import logging
import math
from typing import Dict, List

from app.commands.common import coefficient_law, config_from_args, finish, float_list, int_list, threads_of
from app.services.diagnostics import (
    badset_census,
    inner_radius_check,
    l4_ratio,
    local_sup_census,
    refinement_check,
    run_length_trials,
    semilocal_check,
)
from app.services.ensemble import random_field
from app.services.experiments import SummaryEntry, TrialRecord, local_universality, make_check
from app.utils.config import RunConfig
from app.utils.errors import ConfigurationError, NodalCensusError, StatisticsError
from app.utils.seeding import trial_seed

logger = logging.getLogger(__name__)

NAME = "diagnostics"

WHICH = ("badset", "l4", "local-sup", "semilocal", "length", "refinement", "inner-radius", "local-universality")


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser(NAME, parents=parents, help="Bad set, L4, local sup, semi-locality and more")
    parser.add_argument("--which", choices=WHICH + ("all",), help="Diagnostic to run")
    parser.add_argument("--n", type=int, help="Degree for single-degree diagnostics")
    parser.add_argument("--degrees", type=int_list, help="Degree ladder for scaling diagnostics")
    parser.add_argument("--dist", help="Coefficient law")
    parser.add_argument("--dist-a", dest="dist_a", help="First law for local universality")
    parser.add_argument("--dist-b", dest="dist_b", help="Second law for local universality")
    parser.add_argument("--p", type=float, help="Atom probability of the two-point-asymmetric law")
    parser.add_argument("--trials", type=int, help="Realizations per degree")
    parser.add_argument("--q", type=int, help="Grid oversample")
    parser.add_argument("--K", type=float, help="Bad-set threshold parameter")
    parser.add_argument("--R", type=float, help="Patch radius in wavelength units")
    parser.add_argument("--radii", type=float_list, help="Patch radii for the semi-locality check")
    parser.add_argument("--samples", type=int, help="Uniform centres for the bad-set census")
    parser.add_argument("--centers", type=int, help="Patch centres per semi-locality or local-universality arm")
    parser.add_argument("--draws", type=int, help="Random (field, centre) draws per degree for the local sup check")
    parser.add_argument("--circles", type=int, help="Great circles per Crofton length estimate")
    parser.set_defaults(handler=run)


def _spread(values: List[float]) -> float:
    low = min(values)
    return max(values) / low if low > 0 else math.inf


def badset_entry(config: RunConfig) -> SummaryEntry:
    reports = [badset_census(n, config.K, config.R, config.samples, config.seed) for n in sorted(config.degrees)]
    # Non-increasing up to three binomial standard errors
    decreasing = True
    for a, b in zip(reports, reports[1:]):
        se = math.sqrt(sum(r.value_fraction * (1 - r.value_fraction) / r.n_points for r in (a, b)))
        decreasing &= b.value_fraction <= a.value_fraction + 3.0 * se
    last = reports[-1]
    return SummaryEntry(
        estimate=last.value_fraction,
        n_trials=sum(r.n_points for r in reports),
        checks=[make_check("badset_fraction_decreasing", decreasing, last.value_fraction)],
        details={"reports": [r.model_dump() for r in reports]},
    )


def l4_entry(config: RunConfig) -> SummaryEntry:
    degrees = sorted(config.degrees)
    ratios = [l4_ratio(n) for n in degrees]
    spread = _spread(ratios)
    logger.info(f"l4: ratios {ratios}")
    return SummaryEntry(
        estimate=max(ratios),
        checks=[make_check("l4_ratio_bounded", spread < 3.0, spread, 3.0)],
        details={"degrees": degrees, "ratios": ratios},
    )


def local_sup_entry(config: RunConfig) -> SummaryEntry:
    degrees = sorted(config.degrees)
    dist = coefficient_law(config)
    reports = [local_sup_census(n, dist, config.R, config.draws, config.seed, threads=threads_of(config))
               for n in degrees]
    maxima = [r.max_ratio for r in reports]
    spread = _spread(maxima)
    return SummaryEntry(
        estimate=max(maxima),
        n_trials=config.draws * len(degrees),
        checks=[make_check("local_sup_uniform_in_n", spread < 10.0, spread, 10.0)],
        details={"reports": [r.model_dump() for r in reports]},
    )


def semilocal_entry(config: RunConfig) -> SummaryEntry:
    field = random_field(config.n, coefficient_law(config), trial_seed(config.seed, config.n, "semilocal-field"))
    reports = [
        semilocal_check(field, R, config.centers, config.seed, config.q, threads_of(config))
        for R in sorted(config.radii)
    ]
    worst = max(r.discrepancy for r in reports)
    return SummaryEntry(
        estimate=worst,
        n_trials=config.centers * len(reports),
        checks=[make_check("semilocal_discrepancy_bounded", worst < 4.0, worst, 4.0)],
        details={"reports": [r.model_dump() for r in reports]},
    )


def refinement_entry(config: RunConfig) -> SummaryEntry:
    report = refinement_check(config.n, coefficient_law(config), config.trials, config.q, config.seed,
                              threads_of(config))
    return SummaryEntry(
        estimate=report.agreement,
        n_trials=report.trials,
        checks=[make_check("refinement_agreement", report.passed, report.agreement, 0.95)],
        details=report.model_dump(),
    )


def inner_radius_entry(config: RunConfig) -> SummaryEntry:
    report = inner_radius_check(sorted(config.degrees), coefficient_law(config), config.trials, config.q,
                                config.seed, threads_of(config))
    return SummaryEntry(
        estimate=min(report.min_scaled_radius),
        n_trials=report.trials * len(report.degrees),
        checks=report.checks,
        details=report.model_dump(exclude={"checks"}),
    )


def local_universality_entry(config: RunConfig) -> SummaryEntry:
    report = local_universality(
        coefficient_law(config, config.dist_a),
        coefficient_law(config, config.dist_b),
        config.n,
        config.R,
        config.centers,
        config.seed,
        config.q,
        threads_of(config),
    )
    return report.summary_entry()


ENTRIES = {
    "badset": badset_entry,
    "l4": l4_entry,
    "local-sup": local_sup_entry,
    "semilocal": semilocal_entry,
    "refinement": refinement_entry,
    "inner-radius": inner_radius_entry,
    "local-universality": local_universality_entry,
}


def skipped_entry(name: str, error: NodalCensusError) -> SummaryEntry:
    """Failed entry for a diagnostic whose parameters are invalid in an `all` run"""
    return SummaryEntry(
        checks=[make_check(f"{name}_configured", False)],
        details={"error": f"{type(error).__name__}: {error}", "exit_code": error.exit_code},
    )


def run(args: argparse.Namespace) -> int:
    config = config_from_args(args, NAME)
    run_all = config.which == "all"
    selected = WHICH if run_all else (config.which,)
    entries: Dict[str, SummaryEntry] = {}
    records: List[TrialRecord] = []
    for name in selected:
        logger.info(f"diagnostics: running {name}")
        try:
            if name == "length":
                records = run_length_trials(sorted(config.degrees), coefficient_law(config), config.trials,
                                            config.circles, config.seed, config.q, threads_of(config),
                                            config.config_hash)
            else:
                entries[name] = ENTRIES[name](config)
        except (ConfigurationError, StatisticsError) as e:
            if not run_all:
                raise
            logger.warning(f"diagnostics: {name} skipped: {e}")
            entries[name] = skipped_entry(name, e)
    _, code = finish(config, records, entries)
    return code
