"""Scenario configuration files: ``[section]`` headers and ``key = value`` lines.

Values are quoted strings, integers, floats, ``true``/``false``, ranges ``a..b``
or bracketed lists of those.  Unknown sections and keys are rejected.
"""
from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field
from typing import Any

from .errors import ConfigError

_INT = re.compile(r"^[+-]?\d+$")
_FLOAT = re.compile(r"^[+-]?(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?$|^[+-]?(inf|nan)$")
_RANGE = re.compile(r"^([^.\s][^\s]*?)\.\.([^\s]+)$")


@dataclass(frozen=True)
class Range:
    lo: Any
    hi: Any

    def __post_init__(self):
        if self.hi < self.lo:
            raise ConfigError(f"empty range {self.lo}..{self.hi}")

    def __iter__(self):
        return iter((self.lo, self.hi))


def _scalar(text: str):
    t = text.strip()
    if len(t) >= 2 and t[0] == '"' and t[-1] == '"':
        inner = t[1:-1]
        if '"' in inner:
            raise ConfigError(f"embedded quote in {t}")
        return inner
    if t == "true":
        return True
    if t == "false":
        return False
    if _INT.match(t):
        return int(t)
    if _FLOAT.match(t):
        return float(t)
    m = _RANGE.match(t)
    if m:
        lo, hi = _scalar(m.group(1)), _scalar(m.group(2))
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in (lo, hi)):
            raise ConfigError(f"range bounds must be numbers: {t}")
        return Range(lo, hi)
    raise ConfigError(f"cannot parse value {t!r} (strings must be quoted)")


def parse_value(text: str):
    t = text.strip()
    if t.startswith("[") and t.endswith("]"):
        body = t[1:-1].strip()
        if not body:
            return ()
        return tuple(_scalar(part) for part in _split_list(body))
    return _scalar(t)


def _split_list(body: str) -> list:
    parts, cur, quoted = [], [], False
    for ch in body:
        if ch == '"':
            quoted = not quoted
        if ch == "," and not quoted:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return parts


def format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        if '"' in v or "\n" in v:
            raise ConfigError(f"string {v!r} cannot be written")
        return f'"{v}"'
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, Range):
        return f"{format_value(v.lo)}..{format_value(v.hi)}"
    if isinstance(v, (tuple, list)):
        return "[" + ", ".join(format_value(x) for x in v) + "]"
    raise ConfigError(f"unsupported value {v!r}")


# section -> key -> allowed python types
SCHEMA = {
    "scenario": {"name": (str,), "instance": (str,), "levels": (str,), "sample_size": (int,), "seed": (int,)},
    "tolerances": {"tol": (float, int), "quota": (float, int)},
    "truncation": {"window": (Range, tuple), "cells": (int,)},
    "output": {"csv": (str,), "json": (str,)},
    "params": None,  # checked against the scenario's declared parameters
}
REQUIRED = {"scenario": ("name",)}


@dataclass
class ScenarioConfig:
    sections: dict = field(default_factory=dict)

    def get(self, section: str, key: str, default=None):
        return self.sections.get(section, {}).get(key, default)

    def set(self, section: str, key: str, value):
        self.sections.setdefault(section, {})[key] = value

    @property
    def name(self) -> str:
        return self.get("scenario", "name")

    @property
    def seed(self) -> int:
        return self.get("scenario", "seed", 0)

    @property
    def params(self) -> dict:
        return dict(self.sections.get("params", {}))

    def to_text(self) -> str:
        lines = []
        for sec in SCHEMA:
            if sec not in self.sections:
                continue
            if lines:
                lines.append("")
            lines.append(f"[{sec}]")
            for k, v in self.sections[sec].items():
                lines.append(f"{k} = {format_value(v)}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict:
        def conv(v):
            if isinstance(v, Range):
                return {"range": [v.lo, v.hi]}
            if isinstance(v, tuple):
                return [conv(x) for x in v]
            return v

        return {s: {k: conv(v) for k, v in kv.items()} for s, kv in self.sections.items()}


def parse_config(text: str, allowed_params: dict = None) -> ScenarioConfig:
    """Parse and validate config text.

    ``allowed_params`` maps parameter names to their default values; types of
    supplied parameters must match the defaults (ints are accepted for floats).
    """
    cp = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"),
                                   inline_comment_prefixes=None, strict=True,
                                   default_section="\0none")
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    cfg = ScenarioConfig()
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section [{sec}]")
        for key, raw in cp.items(sec):
            value = parse_value(raw)
            allowed = SCHEMA[sec]
            if allowed is None:
                if allowed_params is not None:
                    if key not in allowed_params:
                        raise ConfigError(f"unknown parameter {key!r}")
                    _check_param_type(key, value, allowed_params[key])
            else:
                if key not in allowed:
                    raise ConfigError(f"unknown key {key!r} in [{sec}]")
                if not isinstance(value, allowed[key]) or isinstance(value, bool) and bool not in allowed[key]:
                    raise ConfigError(f"bad type for {sec}.{key}: {raw!r}")
            cfg.set(sec, key, value)
    for sec, keys in REQUIRED.items():
        for k in keys:
            if cfg.get(sec, k) is None:
                raise ConfigError(f"missing {sec}.{k}")
    return cfg


def _check_param_type(key, value, default):
    if isinstance(default, bool):
        ok = isinstance(value, bool)
    elif isinstance(default, float):
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    elif isinstance(default, int):
        ok = isinstance(value, int) and not isinstance(value, bool)
    else:
        ok = isinstance(value, type(default))
    if not ok:
        raise ConfigError(f"parameter {key!r} expects {type(default).__name__}, got {value!r}")


_SCHEDULE = re.compile(r"^(dyadic|all):(\d+)\.\.(\d+)$")


def parse_schedule(expr: str) -> tuple:
    """``"dyadic:0..14"`` or ``"all:1..10000"`` into ``(kind, lo, hi)``."""
    m = _SCHEDULE.match(expr.strip())
    if not m:
        raise ConfigError(f"bad level schedule {expr!r}")
    kind, lo, hi = m.group(1), int(m.group(2)), int(m.group(3))
    if hi < lo:
        raise ConfigError(f"empty level schedule {expr!r}")
    return kind, lo, hi
