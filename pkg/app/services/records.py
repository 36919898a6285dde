"""Run directory persistence: config, trial table, extras, summary and replay

A run directory holds:
  config.txt    the RunConfig in `key = value` form
  trials.csv    (or trials.json) one TrialRecord per realization
  extras.json   summary entries that cannot be derived from the trial table
  summary.json  the report, rebuilt identically by replay
"""

import csv
import hashlib
import json
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from app.services.diagnostics import summarize_length
from app.services.experiments import (
    SummaryEntry,
    TrialRecord,
    sphere_planar_agreement,
    summarize_cns,
    summarize_planar,
    summarize_universality,
)
from app.utils.config import RunConfig, load_run_config
from app.utils.errors import ConfigurationError, OutputError, SchemaError

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "1"

TRIAL_COLUMNS = [
    "config_hash",
    "experiment",
    "degree",
    "dist",
    "trial_index",
    "seed",
    "count_total",
    "count_contained",
    "length_estimate",
    "runtime_ms",
]
_INT_COLUMNS = {"degree", "trial_index", "seed", "count_total", "count_contained"}
_FLOAT_COLUMNS = {"length_estimate", "runtime_ms"}


def prepare_output(out: str) -> Path:
    directory = Path(out)
    try:
        directory.mkdir(parents=True, exist_ok=True)
        marker = directory / ".write_check"
        marker.write_text("")
        marker.unlink()
    except OSError as e:
        raise OutputError(f"output path {out} is not writable: {e}") from e
    return directory


def _write_text(path: Path, text: str) -> None:
    try:
        path.write_text(text)
    except OSError as e:
        raise OutputError(f"cannot write {path}: {e}") from e


def dump_json(payload) -> str:
    return json.dumps(payload, indent=2) + "\n"


def record_to_row(record: TrialRecord) -> Dict[str, str]:
    """CSV row; missing values stay empty, never 0"""
    return {key: "" if value is None else str(value) for key, value in record.model_dump().items()}


def row_to_record(row: Dict[str, Optional[str]], line: int) -> TrialRecord:
    if None in row or any(row.get(column) is None for column in TRIAL_COLUMNS):
        raise SchemaError(f"trial table row {line} has the wrong number of fields")
    values = {}
    try:
        for column in TRIAL_COLUMNS:
            text = row[column]
            if text == "":
                values[column] = None
            elif column in _INT_COLUMNS:
                values[column] = int(text)
            elif column in _FLOAT_COLUMNS:
                values[column] = float(text)
            else:
                values[column] = text
    except ValueError as e:
        raise SchemaError(f"trial table row {line}: {e}") from e
    return TrialRecord(**values)


def write_trials(records: Sequence[TrialRecord], directory: Path, fmt: str = "csv") -> Path:
    if fmt == "json":
        path = directory / "trials.json"
        _write_text(path, dump_json([record.model_dump() for record in records]))
        return path
    path = directory / "trials.csv"
    try:
        with open(path, "w", newline="") as handle:
            writer = csv.DictWriter(handle, fieldnames=TRIAL_COLUMNS)
            writer.writeheader()
            for record in records:
                writer.writerow(record_to_row(record))
    except OSError as e:
        raise OutputError(f"cannot write {path}: {e}") from e
    return path


def read_trials(directory: Path) -> List[TrialRecord]:
    """Trial records of a run directory, checking the table schema"""
    csv_path, json_path = directory / "trials.csv", directory / "trials.json"
    if csv_path.exists():
        with open(csv_path, newline="") as handle:
            reader = csv.DictReader(handle)
            if reader.fieldnames != TRIAL_COLUMNS:
                raise SchemaError(f"{csv_path} header {reader.fieldnames} does not match schema {SCHEMA_VERSION}")
            return [row_to_record(row, line) for line, row in enumerate(reader, start=2)]
    if json_path.exists():
        try:
            rows = json.loads(json_path.read_text())
            return [TrialRecord(**row) for row in rows]
        except (ValueError, TypeError) as e:
            raise SchemaError(f"{json_path} is not a valid trial table: {e}") from e
    raise SchemaError(f"no trial table in {directory}")


def _entries_digest(entries: Dict[str, dict]) -> str:
    canonical = json.dumps(entries, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def build_extras(config: RunConfig, records: Sequence[TrialRecord], entries: Dict[str, SummaryEntry]) -> dict:
    dumped = {name: entry.model_dump(by_alias=True) for name, entry in entries.items()}
    return {
        "schema_version": SCHEMA_VERSION,
        "config_hash": config.config_hash,
        "n_records": len(records),
        "entries": dumped,
        "digest": _entries_digest(dumped),
    }


def summarize_run(config: RunConfig, records: Sequence[TrialRecord], extras: dict) -> dict:
    """
    The summary document of a run

    Entries derivable from the trial table are recomputed; the remaining
    entries are taken from extras.
    """
    derived: Dict[str, SummaryEntry] = {}
    by_experiment: Dict[str, List[TrialRecord]] = {}
    for record in records:
        by_experiment.setdefault(record.experiment, []).append(record)

    if config.experiment == "cns":
        estimate = summarize_cns(by_experiment.get("cns", []))
        entry = estimate.summary_entry()
        if "rwm" in by_experiment:
            planar = summarize_planar(by_experiment["rwm"], config.radii)
            entry.checks.append(sphere_planar_agreement(estimate, planar))
            derived["cns"] = entry
            derived["cns-planar"] = planar.summary_entry()
        else:
            derived["cns"] = entry
    elif config.experiment == "universality":
        derived["universality"] = summarize_universality(records, config.trials, config.seed).summary_entry()
    elif config.experiment == "rwm" and records:
        derived["rwm"] = summarize_planar(records, config.radii).summary_entry()
    elif config.experiment == "diagnostics" and records:
        derived["length"] = summarize_length(records).summary_entry()

    summary = {
        "schema_version": SCHEMA_VERSION,
        "config_hash": config.config_hash,
        "config": config.semantic_dict(),
    }
    for name, entry in derived.items():
        summary[name] = entry.model_dump(by_alias=True)
    for name, entry in extras.get("entries", {}).items():
        summary[name] = entry
    return summary


def all_checks_pass(summary: dict) -> bool:
    for value in summary.values():
        if isinstance(value, dict) and "checks" in value:
            if not all(check["pass"] for check in value["checks"]):
                return False
    return True


def save_run(config: RunConfig, records: Sequence[TrialRecord], entries: Dict[str, SummaryEntry]) -> dict:
    """Write every artifact of a finished run and return its summary"""
    directory = prepare_output(config.out)
    _write_text(directory / "config.txt", config.to_config_text())
    write_trials(records, directory, config.format)
    extras = build_extras(config, records, entries)
    _write_text(directory / "extras.json", dump_json(extras))
    summary = summarize_run(config, records, extras)
    _write_text(directory / "summary.json", dump_json(summary))
    logger.info(f"Run {config.config_hash} written to {directory} ({len(records)} trial records)")
    return summary


def replay(path: str) -> Tuple[dict, bool]:
    """
    Recompute the summary of a stored run

    Returns:
        (summary, identical) where identical tells whether the recomputed
        summary matches summary.json byte for byte
    """
    directory = Path(path)
    try:
        config = load_run_config(directory / "config.txt")
    except ConfigurationError as e:
        raise SchemaError(f"cannot replay {directory}: {e}") from e
    try:
        extras = json.loads((directory / "extras.json").read_text())
    except (OSError, ValueError) as e:
        raise SchemaError(f"cannot read extras of {directory}: {e}") from e
    if extras.get("schema_version") != SCHEMA_VERSION:
        raise SchemaError(f"run format version {extras.get('schema_version')!r} is not {SCHEMA_VERSION}")
    if _entries_digest(extras.get("entries", {})) != extras.get("digest"):
        raise SchemaError("extras.json entries do not match their digest")

    records = read_trials(directory)
    if len(records) != extras.get("n_records"):
        raise SchemaError(f"trial table has {len(records)} records, expected {extras.get('n_records')}; truncated?")

    summary = summarize_run(config, records, extras)
    if config.config_hash != extras.get("config_hash"):
        logger.warning(f"config hash {config.config_hash} differs from the recorded {extras.get('config_hash')}")
        summary["integrity_warning"] = f"config hash mismatch: recorded {extras.get('config_hash')}"

    text = dump_json(summary)
    original = directory / "summary.json"
    identical = original.exists() and original.read_text() == text
    logger.info(f"Replay of {directory}: summary {'identical' if identical else 'differs'}")
    return summary, identical
