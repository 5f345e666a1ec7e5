"""Flat KEY=VALUE config files layered over the Flask config object."""

from __future__ import annotations

from typing import Any, Dict, Mapping, MutableMapping

import click
from dotenv import dotenv_values


def _coerce(key: str, raw: str, default: Any) -> Any:
    text = raw.strip()
    try:
        if isinstance(default, bool):
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        if isinstance(default, tuple):
            if default and isinstance(default[0], tuple):
                return tuple(
                    tuple(float(v) for v in chunk.split(","))
                    for chunk in text.split(";")
                    if chunk.strip()
                )
            return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise click.BadParameter(f"{key}={raw!r} is not a valid value", param_hint=key)
    return text


def coerce_overrides(config: Mapping[str, Any], values: Mapping[str, Any]) -> Dict[str, Any]:
    out = {}
    for key, raw in values.items():
        if key not in config:
            raise click.BadParameter(f"unknown config key {key!r}", param_hint="--config")
        if raw is None:
            continue
        default = config[key]
        out[key] = _coerce(key, raw, default) if isinstance(raw, str) else raw
    return out


def apply_config_file(config: MutableMapping[str, Any], path: str) -> Dict[str, Any]:
    """Read a flat key-value file and write its typed values into ``config``."""
    values = coerce_overrides(config, dotenv_values(path))
    config.update(values)
    return values


def apply_overrides(config: MutableMapping[str, Any], **overrides: Any) -> None:
    """Apply CLI flag values (``None`` means the flag was not given)."""
    for key, value in overrides.items():
        if value is not None:
            config[key] = value
