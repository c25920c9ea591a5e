"""Flat key=value run configuration files.

Precedence: built-in defaults < config file < command-line overrides. The
schema is the union of the RunConfig and Hyperparams fields; values are
coerced by the field's declared type. Unknown keys are rejected by name.
"""

from __future__ import annotations

from dataclasses import fields
from pathlib import Path

from ..qlearn.learner import Hyperparams
from ..trainer.config import RunConfig


class ConfigError(ValueError):
    """Malformed configuration input (usage error, exit code 2)."""


def _field_types() -> dict[str, type]:
    types: dict[str, type] = {}
    for f in fields(RunConfig):
        if f.name != "hp":
            types[f.name] = f.type if isinstance(f.type, type) else _resolve(f.type)
    for f in fields(Hyperparams):
        types[f.name] = f.type if isinstance(f.type, type) else _resolve(f.type)
    return types


def _resolve(annotation: str) -> type:
    return {"int": int, "float": float, "str": str, "bool": bool}[annotation]


FIELD_TYPES = _field_types()


def coerce(key: str, raw: str):
    if key not in FIELD_TYPES:
        raise ConfigError(f"unknown config field {key!r}")
    kind = FIELD_TYPES[key]
    raw = raw.strip()
    try:
        if kind is bool:
            lowered = raw.lower()
            if lowered in ("true", "1", "yes", "on"):
                return True
            if lowered in ("false", "0", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"invalid value for {key!r}: {exc}") from exc


def parse_config_file(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    values = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {stripped!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        try:
            values[key] = coerce(key, raw)
        except ConfigError as exc:
            raise ConfigError(f"{path}:{lineno}: {exc}") from exc
    return values


def parse_config(path=None, overrides: dict | None = None) -> RunConfig:
    """Defaults, then file values, then override flags; validated at the end."""
    values = RunConfig().to_flat_dict()
    if path is not None:
        values.update(parse_config_file(path))
    for key, raw in (overrides or {}).items():
        if key not in FIELD_TYPES:
            raise ConfigError(f"unknown config field {key!r}")
        values[key] = coerce(key, raw) if isinstance(raw, str) else raw
    try:
        return RunConfig.from_flat_dict(values)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
