"""Key-value run configuration files.

One ``key = value`` pair per line; ``#`` starts a comment. Values are
parsed as JSON when possible (numbers, booleans, quoted strings, lists
like ``["flip1", "flipk:3"]``), otherwise kept as bare strings.
"""

from __future__ import annotations

import json


class ConfigError(ValueError):
    pass


def parse_config_text(text: str) -> dict:
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition("=")
        if not eq:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError(f"line {lineno}: missing key")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[key] = json.loads(value)
        except json.JSONDecodeError:
            values[key] = value
    return values


def read_config(path) -> dict:
    with open(path) as handle:
        return parse_config_text(handle.read())


def as_string_list(value, what: str) -> list[str]:
    """Accept a JSON list or a comma-separated string."""
    if isinstance(value, str):
        items = [part.strip() for part in value.split(",")]
    elif isinstance(value, list):
        items = [str(part) for part in value]
    else:
        raise ConfigError(f"{what} must be a list or comma-separated string")
    items = [item for item in items if item]
    if not items:
        raise ConfigError(f"{what} must not be empty")
    return items


def as_float_list(value, what: str) -> list[float]:
    try:
        return [float(part) for part in as_string_list(value, what)]
    except ValueError as exc:
        raise ConfigError(f"{what} must contain numbers: {exc}") from None
