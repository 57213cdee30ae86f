"""Flat ``key = value`` configuration files with dotted section keys.

Example::

    # long run
    v_param = 20000
    policy = "jssa"
    traffic.interarrival_min_s = 0.5
    channel.shadow_std_db = 10

Blank lines and ``#`` comments are ignored. Strings may be quoted or bare,
booleans are ``true``/``false``, and floats accept ``inf`` and exponents.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
import re
import typing

from .engine import SimConfig, TrafficSettings
from .errors import ConfigError
from .phy import ChannelParams

SECTIONS = {"traffic": TrafficSettings, "channel": ChannelParams}
_INT = re.compile(r"^[+-]?\d+$")


def _field_types(cls) -> dict:
    hints = typing.get_type_hints(cls)
    return {f.name: hints[f.name] for f in dataclasses.fields(cls)}


def known_keys() -> dict:
    """Map every accepted key to its declared type."""
    keys = {}
    for name, tp in _field_types(SimConfig).items():
        if name in SECTIONS:
            continue
        keys[name] = tp
    for section, cls in SECTIONS.items():
        for name, tp in _field_types(cls).items():
            keys[f"{section}.{name}"] = tp
    return keys


def _parse_value(raw: str, tp, key: str):
    text = raw.strip()
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        quoted, text = True, text[1:-1]
    else:
        quoted = False
    if tp is bool:
        if quoted or text.lower() not in ("true", "false"):
            raise ConfigError(f"{key}: expected true or false, got {raw.strip()!r}", key=key)
        return text.lower() == "true"
    if tp is int:
        if quoted or not _INT.match(text):
            raise ConfigError(f"{key}: expected an integer, got {raw.strip()!r}", key=key)
        return int(text)
    if tp is str:
        return text
    # float or Optional[float]
    if text.lower() == "none" and type(None) in typing.get_args(tp):
        return None
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {raw.strip()!r}", key=key) from None


def parse_config_text(text: str, source: str = "<string>") -> SimConfig:
    keys = known_keys()
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip() if not _has_quoted_hash(line) else line.strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}:{lineno}: malformed line, expected 'key = value': {line!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in keys:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}", key=key)
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}", key=key)
        values[key] = _parse_value(raw, keys[key], key)

    top = {k: v for k, v in values.items() if "." not in k}
    nested = {}
    for section, cls in SECTIONS.items():
        sub = {k.split(".", 1)[1]: v for k, v in values.items() if k.startswith(section + ".")}
        nested[section] = cls(**sub)
    return SimConfig(**top, **nested).validate()


def _has_quoted_hash(line: str) -> bool:
    return bool(re.search(r"=\s*([\"']).*#.*\1", line))


def parse_config(path) -> SimConfig:
    """Read and validate a config file; missing keys take their defaults."""
    path = os.fspath(path)
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    return parse_config_text(text, source=path)


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    if value is None:
        return "none"
    return json.dumps(str(value))


def config_items(cfg: SimConfig) -> list:
    items = []
    for f in dataclasses.fields(cfg):
        if f.name in SECTIONS:
            continue
        items.append((f.name, getattr(cfg, f.name)))
    for section in SECTIONS:
        sub = getattr(cfg, section)
        for f in dataclasses.fields(sub):
            items.append((f"{section}.{f.name}", getattr(sub, f.name)))
    return items


def format_config(cfg: SimConfig) -> str:
    return "".join(f"{key} = {_format_value(val)}\n" for key, val in config_items(cfg))


def write_config(cfg: SimConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_config(cfg))


def config_dict(cfg: SimConfig) -> dict:
    return {key: val for key, val in config_items(cfg)}
