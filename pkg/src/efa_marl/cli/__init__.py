"""Command-line entry point: config parsing, subcommands, reproducible runs."""

from .config import ConfigError, parse_config, parse_config_file
from .main import main
from .selftest import run_selftest

__all__ = ["ConfigError", "main", "parse_config", "parse_config_file", "run_selftest"]
