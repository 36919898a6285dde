"""Configuration management using environment variables and run files"""

import hashlib
import json
import os
from pathlib import Path
from typing import List, Optional

from pydantic import BaseModel, Field, ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from app.utils.errors import ConfigurationError


class Settings(BaseSettings):
    """Application settings loaded from environment variables"""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_prefix="NODAL_CENSUS_",
        case_sensitive=True,
        extra="ignore",
    )

    # Application
    APP_NAME: str = "Nodal Census Lab"
    APP_VERSION: str = "0.1.0"
    LOG_LEVEL: str = "INFO"
    LOG_DIR: str = "logs"

    # Worker pool width; 0 means hardware parallelism
    THREADS: int = 0

    # Grids
    MAX_GRID_CELLS: int = 25_000_000
    DEFAULT_OVERSAMPLE: int = 8
    MIN_OVERSAMPLE: int = 4
    ZERO_TOLERANCE: float = 1e-14
    INJECTIVITY_MARGIN: float = 0.1
    EVAL_CHUNK: int = 16_384

    # Special functions
    HILB_PREFACTOR: str = "sqrt"

    # Random wave model
    RWM_WAVES: int = 1024

    # Trial records; wall-clock runtimes make reruns differ byte-wise
    RECORD_RUNTIME: bool = False

    # Statistics
    BOOTSTRAP_RESAMPLES: int = 10_000
    CONFIDENCE_LEVEL: float = 0.95

    def resolved_threads(self, override: Optional[int] = None) -> int:
        """Worker count from the CLI flag, then the environment, then the hardware"""
        if override:
            return max(1, int(override))
        if self.THREADS > 0:
            return self.THREADS
        return os.cpu_count() or 1


settings = Settings()


EXPERIMENTS = (
    "cns",
    "universality",
    "clt",
    "covariance",
    "diagnostics",
    "rwm",
    "demo-basis",
)

# Fields that do not change what is computed; excluded from the config hash
_NON_SEMANTIC_FIELDS = {"out", "format", "threads", "check"}


class RunConfig(BaseModel):
    """Parameters of one experiment run"""

    experiment: str = Field(..., description="Experiment name")
    degrees: List[int] = Field(default_factory=lambda: [20, 40, 60, 80], description="Degree ladder")
    n: int = Field(60, description="Single degree for one-degree experiments")
    dist: str = Field("gaussian", description="Coefficient law")
    dist_a: str = Field("gaussian", description="First arm of a two-law comparison")
    dist_b: str = Field("rademacher", description="Second arm of a two-law comparison")
    p: float = Field(0.1, description="Atom probability of the two-point-asymmetric law")
    trials: int = Field(200, description="Trials per degree or per arm")
    q: int = Field(8, description="Oversample: grid samples per nodal wavelength")
    R: float = Field(10.0, description="Patch radius in wavelength units")
    radii: List[float] = Field(default_factory=lambda: [5.0, 10.0, 20.0], description="RWM disk radii")
    M: int = Field(1024, description="Number of plane waves in the RWM truncation")
    K: float = Field(1.0, description="Bad-set threshold parameter")
    circles: int = Field(1000, description="Great circles per Crofton length estimate")
    planar: bool = Field(False, description="Also run the planar RWM campaign and compare")
    samples: int = Field(2000, description="Samples for CLT / demo experiments")
    centers: int = Field(500, description="Patch centres for the semi-locality check")
    draws: int = Field(1000, description="Random (field, centre) draws per degree for the local sup check")
    which: str = Field("all", description="Diagnostic selector")
    seed: int = Field(0, description="Master seed")
    threads: int = Field(0, description="Worker pool width, 0 for default")
    out: str = Field("run", description="Output directory")
    format: str = Field("csv", description="Trial table format: csv or json")
    check: bool = Field(False, description="Turn acceptance criteria into the exit status")

    @field_validator("experiment")
    @classmethod
    def _known_experiment(cls, value: str) -> str:
        from app.utils.errors import UnknownExperimentError

        if value not in EXPERIMENTS:
            raise UnknownExperimentError(f"unknown experiment '{value}'")
        return value

    @field_validator("q")
    @classmethod
    def _oversample_floor(cls, value: int) -> int:
        if value < settings.MIN_OVERSAMPLE:
            raise ConfigurationError(f"oversample q={value} is below {settings.MIN_OVERSAMPLE}")
        return value

    @field_validator("format")
    @classmethod
    def _known_format(cls, value: str) -> str:
        if value not in ("csv", "json"):
            raise ConfigurationError(f"unknown output format '{value}'")
        return value

    def semantic_dict(self) -> dict:
        """The fields that determine the results"""
        return {k: v for k, v in self.model_dump().items() if k not in _NON_SEMANTIC_FIELDS}

    @property
    def config_hash(self) -> str:
        canonical = json.dumps(self.semantic_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]

    def to_config_text(self) -> str:
        """Serialize as `key = value` lines"""
        lines = [f"# {settings.APP_NAME} run configuration", f"# config_hash = {self.config_hash}"]
        for key, value in self.model_dump().items():
            if isinstance(value, list):
                text = ",".join(_format_scalar(v) for v in value)
            else:
                text = _format_scalar(value)
            lines.append(f"{key} = {text}")
        return "\n".join(lines) + "\n"


def _format_scalar(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_config_text(text: str) -> dict:
    """Parse `key = value` lines, skipping blanks and `#` comments"""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"config line {lineno} is not 'key = value': {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in RunConfig.model_fields:
            raise ConfigurationError(f"config line {lineno}: unknown key '{key}'")
        annotation = RunConfig.model_fields[key].annotation
        if annotation in (List[int], List[float]):
            values[key] = [item.strip() for item in value.split(",") if item.strip()]
        elif annotation is bool:
            values[key] = value.lower() in ("1", "true", "yes", "on")
        else:
            values[key] = value
    return values


def load_run_config(path: Optional[Path] = None, overrides: Optional[dict] = None) -> RunConfig:
    """Build a RunConfig from an optional file with CLI overrides on top"""
    values = {}
    if path is not None:
        try:
            values.update(parse_config_text(Path(path).read_text()))
        except OSError as e:
            raise ConfigurationError(f"cannot read config file {path}: {e}") from e
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    try:
        return RunConfig(**values)
    except ValidationError as e:
        raise ConfigurationError(f"invalid configuration: {e.errors()[0]['msg']}") from e
