"""Configuration, experiment orchestration, file outputs and the CLI."""

from segrekin.app.config import ConfigError, RunConfig, parse_config
from segrekin.app.runio import read_field, write_csv, write_field
from segrekin.app.experiments import RunManifest, run_experiment

__all__ = [
    "ConfigError",
    "RunConfig",
    "RunManifest",
    "parse_config",
    "read_field",
    "run_experiment",
    "write_csv",
    "write_field",
]
