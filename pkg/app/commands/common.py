"""Helpers shared by the subcommand handlers"""

import argparse
import logging
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

from app.services.ensemble import CoefficientDistribution
from app.services.experiments import SummaryEntry, TrialRecord
from app.services.records import all_checks_pass, save_run
from app.utils.config import RunConfig, load_run_config
from app.utils.errors import CHECK_FAILED_EXIT_CODE

logger = logging.getLogger(__name__)


def int_list(text: str) -> List[int]:
    try:
        return [int(item) for item in text.split(",") if item.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from e


def float_list(text: str) -> List[float]:
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from e


def shared_parser() -> argparse.ArgumentParser:
    """Flags every subcommand accepts"""
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--seed", type=int, help="Master seed")
    parser.add_argument("--threads", type=int, help="Worker pool width (env NODAL_CENSUS_THREADS)")
    parser.add_argument("--out", help="Output directory")
    parser.add_argument("--format", choices=("csv", "json"), help="Trial table format")
    parser.add_argument("--check", action="store_true", default=None, help="Exit nonzero when a check fails")
    parser.add_argument("--config", type=Path, help="`key = value` run configuration file")
    return parser


def config_from_args(args: argparse.Namespace, experiment: str) -> RunConfig:
    """RunConfig from the optional config file with the given flags on top"""
    overrides = {
        field: getattr(args, field)
        for field in RunConfig.model_fields
        if field != "experiment" and hasattr(args, field)
    }
    overrides["experiment"] = experiment
    return load_run_config(getattr(args, "config", None), overrides)


def coefficient_law(config: RunConfig, name: str = None) -> CoefficientDistribution:
    return CoefficientDistribution.from_name(name or config.dist, config.p)


def threads_of(config: RunConfig):
    return config.threads or None


def finish(
    config: RunConfig,
    records: Sequence[TrialRecord],
    entries: Dict[str, SummaryEntry] = None,
) -> Tuple[dict, int]:
    """Persist the run and turn its checks into an exit code"""
    summary = save_run(config, records, entries or {})
    passed = all_checks_pass(summary)
    if not passed:
        logger.warning(f"{config.experiment}: at least one acceptance check failed")
    if config.check and not passed:
        return summary, CHECK_FAILED_EXIT_CODE
    return summary, 0
