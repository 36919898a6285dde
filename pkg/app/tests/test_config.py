"""Tests for settings and run configuration"""

import pytest

from app.utils.config import RunConfig, load_run_config, parse_config_text, settings
from app.utils.errors import ConfigurationError, UnknownExperimentError


def test_config_text_round_trip(tmp_path):
    """to_config_text and load_run_config are inverse"""
    config = RunConfig(experiment="rwm", radii=[5.0, 12.5], planar=True, seed=9)
    path = tmp_path / "config.txt"
    path.write_text(config.to_config_text())
    assert load_run_config(path) == config


def test_hash_ignores_output_fields():
    """Output path, format, threads and check do not change the hash"""
    a = RunConfig(experiment="cns", out="x", threads=2)
    b = RunConfig(experiment="cns", out="y", format="json", check=True)
    assert a.config_hash == b.config_hash
    assert a.config_hash != RunConfig(experiment="cns", seed=1).config_hash
    assert len(a.config_hash) == 16


def test_parse_errors():
    """Malformed lines and unknown keys are configuration errors"""
    with pytest.raises(ConfigurationError):
        parse_config_text("seed 4")
    with pytest.raises(ConfigurationError):
        parse_config_text("colour = red")
    assert parse_config_text("# comment\n\ndegrees = 1, 2 # trailing\n") == {"degrees": ["1", "2"]}


def test_validation_errors():
    """Unknown experiments and q below 4 are rejected with their own errors"""
    with pytest.raises(UnknownExperimentError):
        RunConfig(experiment="nope")
    with pytest.raises(ConfigurationError):
        RunConfig(experiment="cns", q=3)
    with pytest.raises(ConfigurationError):
        load_run_config(overrides={"experiment": "cns", "trials": "many"})


def test_thread_resolution(monkeypatch):
    """Flag first, then NODAL_CENSUS_THREADS, then the hardware"""
    monkeypatch.setattr(settings, "THREADS", 3)
    assert settings.resolved_threads(None) == 3
    assert settings.resolved_threads(2) == 2
    monkeypatch.setattr(settings, "THREADS", 0)
    assert settings.resolved_threads(None) >= 1
